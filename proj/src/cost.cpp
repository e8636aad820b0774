#include "lgfn/cost.hpp"

#include "lgfn/kernels.hpp"
#include "lgfn/params.hpp"

namespace lgfn {

Index CostReport::group(const std::string& name) const {
    for (const auto& [g, n] : params_by_group)
        if (g == name) return n;
    throw InvalidInputError("no parameter group '" + name + "'");
}

CostReport count_params(const LgfnConfig& cfg) {
    CostReport rep;
    rep.params_by_group = {{"shallow", 0}, {"dgce", 0}, {"esam", 0}, {"ecam", 0}, {"fusion", 0}, {"upsampler", 0}};
    for (const ParamSpec& s : param_specs(cfg)) {
        const Index n = shape_numel(s.shape);
        const std::string g = param_group(s.name);
        for (auto& [name, total] : rep.params_by_group)
            if (name == g) total += n;
        rep.params_total += n;
    }
    rep.input = {cfg.angular, cfg.angular, 32, 32, cfg.scale};
    return rep;
}

namespace {

struct Tally {
    std::uint64_t macs = 0;
    std::uint64_t elem = 0;

    // Convolution over `planes` batch items producing cout x oh x ow each.
    void conv(Index planes, Index cout, Index oh, Index ow, Index cin_per_group, Index kh, Index kw) {
        macs += static_cast<std::uint64_t>(planes * cout * oh * ow * cin_per_group * kh * kw);
    }
    void ew(Index n) { elem += static_cast<std::uint64_t>(n); }
};

// Cost of one directional pass on a folded [n, c, a, b] tensor.
void pass_cost(Tally& t, const LgfnConfig& cfg, Index n, Index a, Index b) {
    const Index c = cfg.channels, full = n * c * a * b;
    if (cfg.enable_dgce) {
        const Index h = cfg.dgce_hidden(), half = n * h * a * b;
        t.conv(n, 2 * h, a, b, c, 1, 1);
        t.conv(n, h, a, b, 1, 3, 3);
        t.conv(n, h, a, b, 1, 3, 3);
        t.ew(2 * half);  // GELU
        t.ew(2 * half);  // gating products
        t.ew(half);      // sum of the two gated terms
        t.conv(n, c, a, b, h, 1, 1);
        t.ew(full);      // x + F_DGCE
        t.conv(n, c, a, b, c, 1, 1);
    }
    if (cfg.enable_esam) {
        const Index r = cfg.esam_channels();
        t.conv(n, r, a, b, c, 1, 1);
        const Index sa = kernels::conv_output_extent(a, 3, 2, 1, 1), sb = kernels::conv_output_extent(b, 3, 2, 1, 1);
        t.conv(n, r, sa, sb, 1, 3, 3);
        Index la = sa, lb = sb;
        const Index pool = cfg.esam_downscale / 2;
        if (pool > 1) {
            la = (sa - pool) / pool + 1;
            lb = (sb - pool) / pool + 1;
            t.ew(n * r * la * lb);
        }
        t.conv(n, r, la, lb, 1, cfg.lka_kernel, cfg.lka_kernel);
        t.conv(n, r, la, lb, 1, cfg.lka_dilated_kernel, cfg.lka_dilated_kernel);
        t.conv(n, r, la, lb, r, 1, 1);
        t.ew(n * r * a * b);  // bilinear restore
        t.ew(n * r * a * b);  // F25 + F27
        t.conv(n, c, a, b, r, 1, 1);
        t.ew(full);  // sigmoid
        t.ew(full);  // gate product
    }
    if (cfg.enable_ecam) {
        const Index k = cfg.ecam_kernel;
        t.ew(2 * n * c);                 // adaptive max and avg pooling
        t.macs += static_cast<std::uint64_t>(2 * n * c * k);
        t.ew(2 * n * c);                 // sigmoids
        t.ew(n * c);                     // gate sum
        t.ew(full);                      // channel gating
    }
    if (cfg.enable_esam && cfg.enable_ecam && cfg.attention_mode == AttentionMode::parallel) t.ew(2 * full);
    t.ew(full);  // pass residual
}

} // namespace

CostReport count_flops(const LgfnConfig& cfg, const InputSpec& in) {
    CostReport rep = count_params(cfg);
    rep.input = in;
    if (in.scale != cfg.scale)
        throw ConfigError("input scale " + std::to_string(in.scale) + " differs from configured scale " +
                          std::to_string(cfg.scale));
    if (in.U < 1 || in.V < 1 || in.H < 1 || in.W < 1) throw InvalidInputError("input extents must be >= 1");
    const Index c = cfg.channels, s = cfg.scale, views = in.U * in.V, pos = views * in.H * in.W;
    Tally t;
    t.conv(views, c, in.H, in.W, 1, 3, 3);
    const bool any_block = cfg.enable_dgce || cfg.enable_esam || cfg.enable_ecam;
    for (Index i = 0; i < cfg.num_lgfm && any_block; ++i)
        for (Direction d : cfg.directions(i)) {
            if (d == Direction::horizontal)
                pass_cost(t, cfg, in.U, in.H, in.V * in.W);
            else
                pass_cost(t, cfg, in.V, in.U * in.H, in.W);
        }
    t.ew(pos * c);  // DFEM skip
    t.conv(views, c, in.H, in.W, c, 3, 3);
    t.conv(views, c * s * s, in.H, in.W, c, 1, 1);
    t.ew(pos * c * s * s);  // LeakyReLU
    t.conv(views, 1, s * in.H, s * in.W, c, 3, 3);
    t.ew(pos * s * s);  // bilinear of the input
    t.ew(pos * s * s);  // residual sum
    rep.macs_total = t.macs;
    rep.flops_total = 2 * t.macs;
    rep.elementwise_total = t.elem;
    return rep;
}

std::vector<std::pair<std::string, LgfnConfig>> ablation_configs(const LgfnConfig& base) {
    std::vector<std::pair<std::string, LgfnConfig>> out;
    LgfnConfig c = base;
    c.enable_dgce = c.enable_esam = c.enable_ecam = true;
    c.attention_mode = AttentionMode::cascade;
    out.emplace_back("LGFN-C (cascade)", c);
    c.attention_mode = AttentionMode::parallel;
    out.emplace_back("LGFN-P (parallel, full)", c);
    LgfnConfig x = c;
    x.enable_ecam = false;
    out.emplace_back("w/o ECAM", x);
    x = c;
    x.enable_esam = false;
    out.emplace_back("w/o ESAM", x);
    x = c;
    x.enable_esam = x.enable_ecam = false;
    out.emplace_back("w/o ECAM and ESAM", x);
    x = c;
    x.enable_dgce = false;
    out.emplace_back("w/o DGCE", x);
    return out;
}

} // namespace lgfn
