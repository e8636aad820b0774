#include "temp_dir.hpp"

#include "lgfn/cost.hpp"
#include "lgfn/model.hpp"
#include "lgfn/params.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace lgfn;
using TD = Tensor<double>;

namespace {

ParamStore<double> zeroed(const LgfnConfig& cfg) {
    ParamStore<double> p = init_params(cfg, 0).cast<double>();
    for (auto& [name, t] : p.entries()) t.fill(0);
    return p;
}

LgfnConfig block_cfg() {
    LgfnConfig c = LgfnConfig::tiny();
    c.validate();
    return c;
}

} // namespace

TEST_SUITE("lgfn-model") {

TEST_CASE("config validation") {
    CHECK_NOTHROW(LgfnConfig{}.validate());
    LgfnConfig c;
    c.scale = 3;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LgfnConfig{};
    c.direction_schedule = {"HX"};
    c.num_lgfm = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = LgfnConfig{};
    c.channels = 2;
    c.esam_reduction = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("init_params determinism and self-consistency") {
    const LgfnConfig cfg;
    const auto a = init_params(cfg, 0), b = init_params(cfg, 0), c = init_params(cfg, 1);
    CHECK(a.bit_equal(b));
    CHECK_FALSE(a.bit_equal(c));
    CHECK(a.scalar_count() == count_params(cfg).params_total);
    for (const auto& spec : param_specs(cfg)) {
        const auto& t = a.get(spec.name);
        CHECK(t.shape() == spec.shape);
        const double bound = spec.fan_in ? 1.0 / std::sqrt(double(spec.fan_in)) : 0.0;
        for (float v : t.span()) CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("closed-form parameter counts") {
    const CostReport r = count_params(LgfnConfig{});
    CHECK(r.group("shallow") == 640);
    CHECK(r.group("fusion") == 36928);
    CHECK(r.group("ecam") == 14 * 8);
    CHECK(r.params_total == 456497);
    Index sum = 0;
    for (const auto& [g, n] : r.params_by_group) sum += n;
    CHECK(sum == r.params_total);
}

TEST_CASE("ablation variants keep the strict ordering") {
    const auto variants = ablation_configs(LgfnConfig{});
    REQUIRE(variants.size() == 6);
    const Index full = count_params(LgfnConfig{}).params_total;
    const auto& no_ecam = variants[2].second;
    const auto& no_esam = variants[3].second;
    CHECK_FALSE(no_ecam.enable_ecam);
    CHECK_FALSE(no_esam.enable_esam);
    const Index p_no_ecam = count_params(no_ecam).params_total, p_no_esam = count_params(no_esam).params_total;
    Index p_no_dgce = 0;
    for (const auto& [name, cfg] : variants)
        if (!cfg.enable_dgce) p_no_dgce = count_params(cfg).params_total;
    CHECK(full > p_no_ecam);
    CHECK(p_no_ecam > p_no_esam);
    CHECK(p_no_esam > p_no_dgce);
}

TEST_CASE("1x1 conv MACs follow the closed form") {
    OpCounter counter;
    kernels::conv2d<float>(Tensor<float>({25, 64, 32, 32}), Tensor<float>({64, 64, 1, 1}), nullptr, kernels::ConvSpec{});
    CHECK(counter.counts().macs == 64ull * 64 * 25 * 1024);
}

TEST_CASE("analyzer matches the runtime counter on the tiny config") {
    const LgfnConfig cfg = LgfnConfig::tiny();
    const CostReport r = count_flops(cfg, InputSpec{2, 2, 8, 8, cfg.scale});
    std::mt19937_64 rng(1);
    const LightField lr(Tensor<float>::uniform({2, 2, 1, 8, 8}, rng, 0.0, 1.0));
    OpCounter counter;
    lgfn_forward(lr, init_params(cfg, 0), cfg);
    CHECK(counter.counts().macs == r.macs_total);
    CHECK(counter.counts().elementwise == r.elementwise_total);
    CHECK(r.flops_total == 2 * r.macs_total);
    CHECK_THROWS_AS(count_flops(cfg, InputSpec{2, 2, 8, 8, 4}), ConfigError);
}

TEST_CASE("default FLOPs band") {
    const CostReport r = count_flops(LgfnConfig{}, InputSpec{});
    CHECK(r.flops_total >= 16'000'000'000ull);
    CHECK(r.flops_total <= 23'000'000'000ull);
}

TEST_CASE("DGCE: zero input and zero biases give zero output") {
    const LgfnConfig cfg = block_cfg();
    ParamStore<double> p = init_params(cfg, 2).cast<double>();
    const auto out = dgce_forward(Var<double>(TD({2, cfg.channels, 8, 8})), ParamVars<double>::constants(p), "lgfm0.h0", cfg);
    for (double v : out.value().span()) CHECK(v == 0);
    CHECK_THROWS_AS(dgce_forward(Var<double>(TD({2, cfg.channels + 1, 8, 8})), ParamVars<double>::constants(p), "lgfm0.h0", cfg),
                    ShapeError);
}

TEST_CASE("DGCE: swapping the two halves leaves the gated sum unchanged") {
    const LgfnConfig cfg = block_cfg();
    const ParamStore<double> p = init_params(cfg, 3).cast<double>();
    ParamStore<double> q = p;
    const Index h = cfg.dgce_hidden(), c = cfg.channels;
    const std::string pre = "lgfm0.h0.dgce.";
    auto& ew = q.get(pre + "expand.weight");
    const auto& ew0 = p.get(pre + "expand.weight");
    for (Index o = 0; o < 2 * h; ++o)
        for (Index i = 0; i < c; ++i) ew.at({o, i, 0, 0}) = ew0.at({(o + h) % (2 * h), i, 0, 0});
    std::mt19937_64 rng(4);
    Tensor<double>& eb = q.get(pre + "expand.bias");
    eb = TD::uniform({2 * h}, rng, -0.1, 0.1);
    ParamStore<double> pb = p;
    auto& pbb = pb.get(pre + "expand.bias");
    for (Index o = 0; o < 2 * h; ++o) pbb[o] = eb[(o + h) % (2 * h)];
    std::swap(q.get(pre + "dw_a.weight"), q.get(pre + "dw_b.weight"));
    std::swap(q.get(pre + "dw_a.bias"), q.get(pre + "dw_b.bias"));

    const Var<double> x(TD::uniform({2, c, 8, 8}, rng));
    ForwardTrace<double> ta, tb;
    dgce_forward(x, ParamVars<double>::constants(pb), "lgfm0.h0", cfg, &ta);
    dgce_forward(x, ParamVars<double>::constants(q), "lgfm0.h0", cfg, &tb);
    CHECK(ta.get("lgfm0.h0.F_21") == tb.get("lgfm0.h0.F_22"));
    CHECK(ta.get("lgfm0.h0.F_23") == tb.get("lgfm0.h0.F_23"));
    CHECK(ta.get("lgfm0.h0.F_23").shape() == Shape{2, h, 8, 8});
}

TEST_CASE("ESAM: zero attention weights give the neutral half gate") {
    const LgfnConfig cfg = block_cfg();
    const ParamStore<double> p = zeroed(cfg);
    std::mt19937_64 rng(5);
    const TD x = TD::uniform({2, cfg.channels, 16, 16}, rng);
    const auto y = esam_forward(Var<double>(x), ParamVars<double>::constants(p), "lgfm0.h0", cfg);
    REQUIRE(y.shape() == x.shape());
    for (Index i = 0; i < x.numel(); ++i) CHECK(y.value()[i] == 0.5 * x[i]);
    CHECK_THROWS_AS(esam_forward(Var<double>(TD({1, cfg.channels, 6, 8})), ParamVars<double>::constants(p), "lgfm0.h0", cfg),
                    ShapeError);
}

TEST_CASE("ESAM: large-kernel stack reaches 23 low-resolution pixels") {
    LgfnConfig cfg = block_cfg();
    ParamStore<double> p = zeroed(cfg);
    for (auto& [name, t] : p.entries())
        if (name.find(".esam.") != std::string::npos && name.find(".weight") != std::string::npos) t.fill(0.1);
    TD x({1, cfg.channels, 128, 128});
    for (Index c = 0; c < cfg.channels; ++c) x.at({0, c, 64, 64}) = 1;
    ForwardTrace<double> trace;
    esam_forward(Var<double>(x), ParamVars<double>::constants(p), "lgfm0.h0", cfg, &trace);
    const TD& f26 = trace.get("lgfm0.h0.F_26");
    const TD& f27 = trace.get("lgfm0.h0.F_27");
    REQUIRE(f26.shape() == Shape{1, cfg.esam_channels(), 32, 32});
    Index low = 0, full = 0;
    for (Index j = 0; j < 32; ++j) low += f26.at({0, 0, 16, j}) != 0;
    CHECK(low == 1);
    const Index reach = cfg.lka_kernel + (cfg.lka_dilated_kernel - 1) * cfg.lka_dilation;
    CHECK(reach == 23);
    for (Index j = 0; j < 128; ++j) full += f27.at({0, 0, 64, j}) != 0;
    CHECK(full >= reach * cfg.esam_downscale);
}

TEST_CASE("ECAM: zero weights are the identity and the gate is spatially constant") {
    const LgfnConfig cfg = block_cfg();
    std::mt19937_64 rng(6);
    const TD x = TD::uniform({2, cfg.channels, 8, 8}, rng, 0.1, 1.0);
    const auto y0 = ecam_forward(Var<double>(x), ParamVars<double>::constants(zeroed(cfg)), "lgfm0.h0", cfg);
    CHECK(y0.value() == x);

    const ParamStore<double> p = init_params(cfg, 7).cast<double>();
    const TD y = ecam_forward(Var<double>(x), ParamVars<double>::constants(p), "lgfm0.h0", cfg).value();
    for (Index n = 0; n < 2; ++n)
        for (Index c = 0; c < cfg.channels; ++c) {
            const double g = y.at({n, c, 0, 0}) / x.at({n, c, 0, 0});
            CHECK(g > 0);
            CHECK(g < 2);
            for (Index i = 0; i < 8; ++i)
                for (Index j = 0; j < 8; ++j) CHECK(y.at({n, c, i, j}) / x.at({n, c, i, j}) == doctest::Approx(g).epsilon(1e-12));
        }
    CHECK(p.get("lgfm0.h0.ecam.max.weight").numel() + p.get("lgfm0.h0.ecam.max.bias").numel() +
              p.get("lgfm0.h0.ecam.avg.weight").numel() + p.get("lgfm0.h0.ecam.avg.bias").numel() ==
          8);
}

TEST_CASE("fold and unfold are inverse for both directions") {
    std::mt19937_64 rng(8);
    const Var<double> x(TD::uniform({1, 3, 6, 4, 5}, rng));
    for (const auto d : {Direction::horizontal, Direction::vertical}) {
        const auto f = fold_views(x, d, 2, 3);
        CHECK(f.shape() == (d == Direction::horizontal ? Shape{2, 3, 4, 15} : Shape{3, 3, 8, 5}));
        CHECK(unfold_views(f, d, 2, 3).value() == x.value());
    }
    // Horizontal fold places view (u, v) at row block u, column block v.
    const auto h = fold_views(x, Direction::horizontal, 2, 3).value();
    CHECK(h.at({1, 2, 3, 2 * 5 + 4}) == x.value().at({0, 2, 1 * 3 + 2, 3, 4}));
    const auto v = fold_views(x, Direction::vertical, 2, 3).value();
    CHECK(v.at({2, 1, 1 * 4 + 3, 0}) == x.value().at({0, 1, 1 * 3 + 2, 3, 0}));
}

TEST_CASE("every block disabled makes a pass the identity") {
    LgfnConfig cfg = block_cfg();
    cfg.enable_dgce = cfg.enable_esam = cfg.enable_ecam = false;
    std::mt19937_64 rng(9);
    const Var<double> x(TD::uniform({1, cfg.channels, 4, 8, 8}, rng));
    const auto p = ParamVars<double>::constants(init_params(cfg, 0).cast<double>());
    CHECK(lgfm_forward(x, p, cfg, 0, 2, 2).value().bit_equal(x.value()));
}

TEST_CASE("zeroed final upsampler conv leaves the bilinear residual") {
    const LgfnConfig cfg = LgfnConfig::tiny();
    ParamStore<double> p = init_params(cfg, 10).cast<double>();
    p.get("upsampler.out.weight").fill(0);
    p.get("upsampler.out.bias").fill(0);
    std::mt19937_64 rng(11);
    const TD f0 = TD::uniform({1, 4, 8, 8}, rng, 0.0, 1.0);
    const auto y = lgfn_forward(Var<double>(f0), 2, 2, ParamVars<double>::constants(p), cfg);
    CHECK(y.value() == kernels::resize(f0, 16, 16, ResizeMode::bilinear));
}

TEST_CASE("forward shapes, trace and errors") {
    const LgfnConfig cfg = LgfnConfig::tiny();
    const auto p = init_params(cfg, 12);
    std::mt19937_64 rng(12);
    const LightField lr(Tensor<float>::uniform({2, 2, 1, 8, 12}, rng, 0.0, 1.0));
    ForwardTrace<float> trace;
    const LightField sr = lgfn_forward(lr, p, cfg, &trace);
    CHECK(sr.data.shape() == Shape{2, 2, 1, 16, 24});
    for (const char* k : {"F_0", "F_init", "F_1", "F_fuse", "F_up", "F_HR", "lgfm0.h0.F_24", "lgfm0.v1.out"})
        CHECK(trace.contains(k));
    CHECK(trace.get("F_init").shape() == Shape{1, cfg.channels, 4, 8, 12});
    CHECK_THROWS_AS(lgfn_forward(Var<float>(Tensor<float>({1, 3, 8, 8})), 2, 2, ParamVars<float>::constants(p), cfg),
                    ShapeError);
}

TEST_CASE("parameter binding errors") {
    CHECK_THROWS_AS(ParamVars<double>::bind({"a", "a"}, {Var<double>(TD({1})), Var<double>(TD({1}))}), ConfigError);
    CHECK_THROWS_AS(ParamVars<double>::bind({"a"}, {}), ConfigError);
    const auto pv = ParamVars<double>::bind({"a"}, {Var<double>(TD({1}))});
    CHECK_THROWS_AS(pv["b"], ConfigError);
}

TEST_CASE("checkpoint round trip and mismatch diagnostics") {
    test_util::TempDir dir;
    const LgfnConfig cfg = LgfnConfig::tiny();
    const auto p = init_params(cfg, 13);
    checkpoint_save(p, dir / "p.lgfn");
    CHECK(checkpoint_load(dir / "p.lgfn").bit_equal(p));
    CHECK(checkpoint_load(dir / "p.lgfn", cfg).bit_equal(p));
    CHECK(std::filesystem::file_size(dir / "p.lgfn") == checkpoint_size_bytes(p));

    LgfnConfig other = cfg;
    other.channels = 12;
    try {
        checkpoint_load(dir / "p.lgfn", other);
        FAIL("expected a checkpoint error");
    } catch (const CheckpointError& e) {
        CHECK(std::string(e.what()).find("shallow.weight") != std::string::npos);
    }
    {
        std::ofstream out(dir / "junk.lgfn", std::ios::binary);
        out << "nonsense";
    }
    CHECK_THROWS_AS(checkpoint_load(dir / "junk.lgfn"), CheckpointError);
}

}
