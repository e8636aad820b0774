#include "lgfn/model.hpp"

namespace lgfn {

template <typename T>
ParamVars<T> ParamVars<T>::constants(const ParamStore<T>& store) {
    ParamVars out;
    for (const auto& [name, t] : store.entries()) {
        out.index_[name] = out.entries_.size();
        out.entries_.emplace_back(name, Var<T>(t));
    }
    return out;
}

template <typename T>
ParamVars<T> ParamVars<T>::on_tape(const ParamStore<T>& store, GradTape<T>& tape) {
    ParamVars out;
    for (const auto& [name, t] : store.entries()) {
        out.index_[name] = out.entries_.size();
        out.entries_.emplace_back(name, tape.parameter(t));
    }
    return out;
}

template <typename T>
ParamVars<T> ParamVars<T>::bind(const std::vector<std::string>& names, const std::vector<Var<T>>& vars) {
    if (names.size() != vars.size()) throw ConfigError("ParamVars::bind: name/var count mismatch");
    ParamVars out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (out.index_.count(names[i])) throw ConfigError("duplicate parameter name '" + names[i] + "'");
        out.index_[names[i]] = out.entries_.size();
        out.entries_.emplace_back(names[i], vars[i]);
    }
    return out;
}

template <typename T>
const Var<T>& ParamVars<T>::operator[](const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("model parameter '" + name + "' is missing");
    return entries_[it->second].second;
}

template <typename T>
std::size_t ForwardTrace<T>::count(const std::string& name) const {
    std::size_t n = 0;
    for (const auto& item : items) n += item.first == name;
    return n;
}

template <typename T>
const Tensor<T>& ForwardTrace<T>::get(const std::string& name) const {
    for (const auto& item : items)
        if (item.first == name) return item.second;
    throw InvalidInputError("trace has no entry '" + name + "'");
}

namespace {

template <typename T>
void record(ForwardTrace<T>* trace, const std::string& name, const Var<T>& v) {
    if (trace) trace->put(name, v.value());
}

template <typename T>
Var<T> conv(const Var<T>& x, const ParamVars<T>& p, const std::string& name, const ConvSpec& spec) {
    return conv2d(x, p[name + ".weight"], &p[name + ".bias"], spec);
}

void require_channels(const Shape& s, Index c, const char* what) {
    if (s.size() != 4 || s[1] != c)
        throw ShapeError(std::string(what) + ": expected [N," + std::to_string(c) + ",A,B] input, got " + shape_str(s));
}

} // namespace

template <typename T>
Var<T> dgce_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace) {
    require_channels(x.shape(), cfg.channels, "dgce");
    const Index h = cfg.dgce_hidden();
    const std::string q = prefix + ".dgce";
    const Var<T> expanded = conv(x, p, q + ".expand", ConvSpec::same(1, 1));
    const Var<T> f21 = slice_channels(expanded, 0, h);
    const Var<T> f22 = slice_channels(expanded, h, h);
    const ConvSpec dw = ConvSpec::same(3, 3, 1, h);
    const Var<T> f23 = add(mul(gelu(conv(f21, p, q + ".dw_a", dw)), f22), mul(gelu(conv(f22, p, q + ".dw_b", dw)), f21));
    const Var<T> fd = conv(f23, p, q + ".fuse", ConvSpec::same(1, 1));
    const Var<T> f24 = conv(add(x, fd), p, q + ".out", ConvSpec::same(1, 1));
    record(trace, prefix + ".F_21", f21);
    record(trace, prefix + ".F_22", f22);
    record(trace, prefix + ".F_23", f23);
    record(trace, prefix + ".F_DGCE", fd);
    record(trace, prefix + ".F_24", f24);
    return f24;
}

template <typename T>
Var<T> esam_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace) {
    require_channels(x.shape(), cfg.channels, "esam");
    const Index a = x.shape()[2], b = x.shape()[3], d = cfg.esam_downscale;
    if (a % d != 0 || b % d != 0)
        throw ShapeError("esam: spatial extents " + std::to_string(a) + "x" + std::to_string(b) +
                         " not divisible by downscale " + std::to_string(d));
    const Index r = cfg.esam_channels();
    const std::string q = prefix + ".esam";
    const Var<T> f25 = conv(x, p, q + ".reduce", ConvSpec::same(1, 1));
    Var<T> f26 = conv(f25, p, q + ".stride_dw", ConvSpec::same(3, 3, 1, r, 2));
    if (d / 2 > 1) f26 = pool2d(f26, PoolKind::max, d / 2, d / 2);
    Var<T> lka = conv(f26, p, q + ".lka_dw", ConvSpec::same(cfg.lka_kernel, cfg.lka_kernel, 1, r));
    lka = conv(lka, p, q + ".lka_dilated",
               ConvSpec::same(cfg.lka_dilated_kernel, cfg.lka_dilated_kernel, cfg.lka_dilation, r));
    lka = conv(lka, p, q + ".lka_pw", ConvSpec::same(1, 1));
    const Var<T> f27 = resize(lka, a, b, ResizeMode::bilinear);
    const Var<T> f28 = conv(add(f25, f27), p, q + ".expand", ConvSpec::same(1, 1));
    const Var<T> f29 = mul(sigmoid(f28), x);
    record(trace, prefix + ".F_25", f25);
    record(trace, prefix + ".F_26", f26);
    record(trace, prefix + ".F_27", f27);
    record(trace, prefix + ".F_28", f28);
    record(trace, prefix + ".F_29", f29);
    return f29;
}

template <typename T>
Var<T> ecam_forward(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace) {
    require_channels(x.shape(), cfg.channels, "ecam");
    if (cfg.channels < cfg.ecam_kernel)
        throw ConfigError("ecam: needs at least " + std::to_string(cfg.ecam_kernel) + " channels");
    const std::string q = prefix + ".ecam";
    const Var<T> f30 = channel_conv1d(adaptive_pool2d(x, PoolKind::max, 1, 1), p[q + ".max.weight"], p[q + ".max.bias"]);
    const Var<T> f31 = channel_conv1d(adaptive_pool2d(x, PoolKind::avg, 1, 1), p[q + ".avg.weight"], p[q + ".avg.bias"]);
    const Var<T> f32 = mul_channel_gate(x, add(sigmoid(f30), sigmoid(f31)));
    record(trace, prefix + ".F_30", f30);
    record(trace, prefix + ".F_31", f31);
    record(trace, prefix + ".F_32", f32);
    return f32;
}

template <typename T>
Var<T> fold_views(const Var<T>& x, Direction d, Index U, Index V) {
    const Shape& s = x.shape();
    if (s.size() != 5 || s[0] != 1 || s[2] != U * V)
        throw ShapeError("fold: expected [1,C," + std::to_string(U * V) + ",H,W], got " + shape_str(s));
    const Index c = s[1], h = s[3], w = s[4];
    const Var<T> views = reshape(x, {c, U, V, h, w});
    if (d == Direction::horizontal) return reshape(permute(views, {1, 0, 3, 2, 4}), {U, c, h, V * w});
    return reshape(permute(views, {2, 0, 1, 3, 4}), {V, c, U * h, w});
}

template <typename T>
Var<T> unfold_views(const Var<T>& y, Direction d, Index U, Index V) {
    const Shape& s = y.shape();
    if (s.size() != 4) throw ShapeError("unfold: expected a folded 4-D tensor, got " + shape_str(s));
    const Index c = s[1];
    if (d == Direction::horizontal) {
        if (s[0] != U || s[3] % V != 0) throw ShapeError("unfold: shape " + shape_str(s) + " is not a horizontal fold");
        const Index h = s[2], w = s[3] / V;
        return reshape(permute(reshape(y, {U, c, h, V, w}), {1, 0, 3, 2, 4}), {1, c, U * V, h, w});
    }
    if (s[0] != V || s[2] % U != 0) throw ShapeError("unfold: shape " + shape_str(s) + " is not a vertical fold");
    const Index h = s[2] / U, w = s[3];
    return reshape(permute(reshape(y, {V, c, U, h, w}), {1, 2, 0, 3, 4}), {1, c, U * V, h, w});
}

template <typename T>
Var<T> lgfm_pass(const Var<T>& x, const ParamVars<T>& p, const std::string& prefix, const LgfnConfig& cfg,
                 Direction d, Index U, Index V, ForwardTrace<T>* trace) {
    if (!cfg.enable_dgce && !cfg.enable_esam && !cfg.enable_ecam) return x;
    const Var<T> folded = fold_views(x, d, U, V);
    const Var<T> local = cfg.enable_dgce ? dgce_forward(folded, p, prefix, cfg, trace) : folded;
    Var<T> attended = local;
    if (cfg.enable_esam && cfg.enable_ecam) {
        if (cfg.attention_mode == AttentionMode::cascade) {
            attended = ecam_forward(esam_forward(local, p, prefix, cfg, trace), p, prefix, cfg, trace);
        } else {
            attended = scale(add(esam_forward(local, p, prefix, cfg, trace), ecam_forward(local, p, prefix, cfg, trace)), 0.5);
        }
    } else if (cfg.enable_esam) {
        attended = esam_forward(local, p, prefix, cfg, trace);
    } else if (cfg.enable_ecam) {
        attended = ecam_forward(local, p, prefix, cfg, trace);
    }
    const Var<T> out = add(unfold_views(attended, d, U, V), x);
    record(trace, prefix + ".out", out);
    return out;
}

template <typename T>
Var<T> lgfm_forward(const Var<T>& x, const ParamVars<T>& p, const LgfnConfig& cfg, Index index, Index U, Index V,
                    ForwardTrace<T>* trace) {
    const auto dirs = cfg.directions(index);
    Var<T> cur = x;
    for (std::size_t j = 0; j < dirs.size(); ++j)
        cur = lgfm_pass(cur, p, pass_prefix(index, j, dirs[j]), cfg, dirs[j], U, V, trace);
    return cur;
}

template <typename T>
Var<T> lgfn_forward(const Var<T>& f0, Index U, Index V, const ParamVars<T>& p, const LgfnConfig& cfg,
                    ForwardTrace<T>* trace) {
    cfg.validate();
    const Shape& s = f0.shape();
    if (s.size() != 4 || s[0] != 1 || s[1] != U * V)
        throw ShapeError("lgfn_forward: expected [1," + std::to_string(U * V) + ",H,W], got " + shape_str(s));
    const Index h = s[2], w = s[3], c = cfg.channels, r = cfg.scale, views = U * V;
    record(trace, "F_0", f0);

    const Var<T> f_init = conv3d_1xkxk(reshape(f0, {1, 1, views, h, w}), p["shallow.weight"], &p["shallow.bias"], 3);
    record(trace, "F_init", f_init);
    Var<T> deep = f_init;
    for (Index i = 0; i < cfg.num_lgfm; ++i) deep = lgfm_forward(deep, p, cfg, i, U, V, trace);
    const Var<T> f1 = add(deep, f_init);
    record(trace, "F_1", f1);
    const Var<T> fuse = conv3d_1xkxk(f1, p["fusion.weight"], &p["fusion.bias"], 3);
    record(trace, "F_fuse", fuse);

    const Var<T> per_view = reshape(permute(fuse, {0, 2, 1, 3, 4}), {views, c, h, w});
    Var<T> up = conv(per_view, p, "upsampler.expand", ConvSpec::same(1, 1));
    up = leaky_relu(pixel_shuffle(up, r));
    up = conv(up, p, "upsampler.out", ConvSpec::same(3, 3));
    const Var<T> detail = reshape(up, {1, views, r * h, r * w});
    record(trace, "F_up", detail);
    const Var<T> f_hr = add(detail, resize(f0, r * h, r * w, ResizeMode::bilinear));
    record(trace, "F_HR", f_hr);
    return f_hr;
}

LightField lgfn_forward(const LightField& lr, const ParamStore<float>& p, const LgfnConfig& cfg,
                        ForwardTrace<float>* trace) {
    const Var<float> out =
        lgfn_forward(Var<float>(to_feature_layout<float>(lr)), lr.U(), lr.V(), ParamVars<float>::constants(p), cfg, trace);
    return from_feature_layout(out.value(), lr.U(), lr.V());
}

#define LGFN_INSTANTIATE(T)                                                                                          \
    template class ParamVars<T>;                                                                                     \
    template struct ForwardTrace<T>;                                                                                 \
    template Var<T> dgce_forward(const Var<T>&, const ParamVars<T>&, const std::string&, const LgfnConfig&,          \
                                 ForwardTrace<T>*);                                                                  \
    template Var<T> esam_forward(const Var<T>&, const ParamVars<T>&, const std::string&, const LgfnConfig&,          \
                                 ForwardTrace<T>*);                                                                  \
    template Var<T> ecam_forward(const Var<T>&, const ParamVars<T>&, const std::string&, const LgfnConfig&,          \
                                 ForwardTrace<T>*);                                                                  \
    template Var<T> fold_views(const Var<T>&, Direction, Index, Index);                                              \
    template Var<T> unfold_views(const Var<T>&, Direction, Index, Index);                                            \
    template Var<T> lgfm_pass(const Var<T>&, const ParamVars<T>&, const std::string&, const LgfnConfig&, Direction,  \
                              Index, Index, ForwardTrace<T>*);                                                       \
    template Var<T> lgfm_forward(const Var<T>&, const ParamVars<T>&, const LgfnConfig&, Index, Index, Index,         \
                                 ForwardTrace<T>*);                                                                  \
    template Var<T> lgfn_forward(const Var<T>&, Index, Index, const ParamVars<T>&, const LgfnConfig&,                \
                                 ForwardTrace<T>*);

LGFN_INSTANTIATE(float)
LGFN_INSTANTIATE(double)

#undef LGFN_INSTANTIATE

} // namespace lgfn
