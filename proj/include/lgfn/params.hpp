#pragma once

#include "lgfn/config.hpp"
#include "lgfn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace lgfn {

// Named learnable tensors in a fixed insertion order.
template <typename T>
class ParamStore {
public:
    void add(const std::string& name, Tensor<T> t);
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    const Tensor<T>& get(const std::string& name) const;
    Tensor<T>& get(const std::string& name);

    std::size_t size() const { return entries_.size(); }
    Index scalar_count() const;
    const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
    std::vector<std::pair<std::string, Tensor<T>>>& entries() { return entries_; }

    template <typename U>
    ParamStore<U> cast() const {
        ParamStore<U> out;
        for (const auto& [n, t] : entries_) out.add(n, t.template cast<U>());
        return out;
    }

    bool bit_equal(const ParamStore& o) const;

private:
    std::vector<std::pair<std::string, Tensor<T>>> entries_;
    std::map<std::string, std::size_t> index_;
};

struct ParamSpec {
    std::string name;
    Shape shape;
    Index fan_in = 0;  // 0 for biases
};

// Every learnable tensor the configuration implies, in canonical order.
std::vector<ParamSpec> param_specs(const LgfnConfig& cfg);

// Parameter group of a tensor name: shallow, dgce, esam, ecam, fusion, upsampler.
std::string param_group(const std::string& name);

// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from one seeded mt19937_64
// stream in canonical order; biases zero.
ParamStore<float> init_params(const LgfnConfig& cfg, std::uint64_t seed);

void checkpoint_save(const ParamStore<float>& p, const std::filesystem::path& path);
ParamStore<float> checkpoint_load(const std::filesystem::path& path);
// Loads and checks names and shapes against cfg; the error names the first
// offending tensor.
ParamStore<float> checkpoint_load(const std::filesystem::path& path, const LgfnConfig& cfg);

std::size_t checkpoint_size_bytes(const ParamStore<float>& p);

// Name prefix of directional pass `pass` inside LGFM `lgfm`, e.g. "lgfm3.v1".
std::string pass_prefix(Index lgfm, std::size_t pass, Direction d);

} // namespace lgfn
