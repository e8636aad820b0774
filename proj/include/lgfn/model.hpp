#pragma once

#include "lgfn/autograd.hpp"
#include "lgfn/config.hpp"
#include "lgfn/light_field.hpp"
#include "lgfn/params.hpp"

#include <string>
#include <utility>
#include <vector>

namespace lgfn {

// Parameters bound as autograd vars: constants for inference, tape
// parameters for training and gradient checks.
template <typename T>
class ParamVars {
public:
    static ParamVars constants(const ParamStore<T>& store);
    static ParamVars on_tape(const ParamStore<T>& store, GradTape<T>& tape);
    static ParamVars bind(const std::vector<std::string>& names, const std::vector<Var<T>>& vars);

    const Var<T>& operator[](const std::string& name) const;
    const std::vector<std::pair<std::string, Var<T>>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, Var<T>>> entries_;
    std::map<std::string, std::size_t> index_;
};

// Named intermediates in production order.
template <typename T>
struct ForwardTrace {
    std::vector<std::pair<std::string, Tensor<T>>> items;

    void put(const std::string& name, const Tensor<T>& t) { items.emplace_back(name, t); }
    bool contains(const std::string& name) const { return count(name) > 0; }
    std::size_t count(const std::string& name) const;
    const Tensor<T>& get(const std::string& name) const;
};

// Blocks operate on a folded 4-D tensor [N, C, A, B]; `prefix` selects the
// pass, e.g. "lgfm0.h0".
template <typename T>
Var<T> dgce_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace = nullptr);
template <typename T>
Var<T> esam_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace = nullptr);
template <typename T>
Var<T> ecam_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace = nullptr);

// [1,C,U*V,H,W] -> horizontal [U,C,H,V*W] or vertical [V,C,U*H,W], and back.
template <typename T>
Var<T> fold_views(const Var<T>& x, Direction d, Index U, Index V);
template <typename T>
Var<T> unfold_views(const Var<T>& y, Direction d, Index U, Index V);

// One directional pass: fold, DGCE, attention, unfold, plus the pass input.
// With every block disabled the pass is the identity.
template <typename T>
Var<T> lgfm_pass(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                 Direction d, Index U, Index V, ForwardTrace<T>* trace = nullptr);

// LGFM `index`: its scheduled passes in order.
template <typename T>
Var<T> lgfm_forward(const Var<T>& x, const ParamVars<T>& p, const LgfnConfig& cfg, Index index, Index U, Index V,
                    ForwardTrace<T>* trace = nullptr);

// f0 [1, U*V, H, W] -> [1, U*V, sH, sW].
template <typename T>
Var<T> lgfn_forward(const Var<T>& f0, Index U, Index V, const ParamVars<T>& p, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace = nullptr);

// Luma field in, luma field out at cfg.scale.
LightField lgfn_forward(const LightField& lr, const ParamStore<float>& p, const LgfnConfig& cfg,
                        ForwardTrace<float>* trace = nullptr);

} // namespace lgfn
