#include "temp_dir.hpp"

#include "lgfn/losses.hpp"
#include "lgfn/train.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace lgfn;
using TD = Tensor<double>;

TEST_SUITE("train-loss") {

TEST_CASE("L1 loss values") {
    std::mt19937_64 rng(1);
    const TD a = TD::uniform({2, 3, 4}, rng);
    TD b = a;
    for (double& v : b.span()) v += 1;
    CHECK(l1_loss(Var<double>(a), Var<double>(a)).value()[0] == 0);
    CHECK(l1_loss(Var<double>(b), Var<double>(a)).value()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(l1_loss(Var<double>(a), Var<double>(TD({2, 3, 5}))), ShapeError);
}

TEST_CASE("FFT Charbonnier floor and DC-only closed form") {
    std::mt19937_64 rng(2);
    const Index H = 6, W = 5;
    const double eps = 1e-3, c = 0.2;
    const TD hr = TD::uniform({1, 2, H, W}, rng);
    TD sr = hr;
    for (double& v : sr.span()) v += c;
    CHECK(fft_charbonnier_loss(Var<double>(hr), Var<double>(hr), eps).value()[0] == doctest::Approx(eps).epsilon(1e-12));
    const double hw = double(H * W);
    const double want = (std::sqrt(c * hw * c * hw + eps * eps) + (hw - 1) * eps) / hw;
    CHECK(fft_charbonnier_loss(Var<double>(sr), Var<double>(hr), eps).value()[0] == doctest::Approx(want).epsilon(1e-9));
    CHECK_THROWS_AS(fft_charbonnier_loss(Var<double>(hr), Var<double>(TD({1, 2, H, W + 1}))), ShapeError);
}

TEST_CASE("combined loss weights") {
    std::mt19937_64 rng(3);
    const TD hr = TD::uniform({1, 1, 4, 4}, rng);
    TD sr = TD::uniform({1, 1, 4, 4}, rng);
    const auto same = combined_loss(Var<double>(hr), Var<double>(hr));
    CHECK(same.total.value()[0] == doctest::Approx(1e-3).epsilon(1e-12));
    const auto t = combined_loss(Var<double>(sr), Var<double>(hr), LossWeights{0.01, 1.0, 1e-3});
    CHECK(t.total.value()[0] ==
          doctest::Approx(0.01 * t.l1.value()[0] + t.fft_charbonnier.value()[0]).epsilon(1e-12));
    CHECK_THROWS_AS(combined_loss(Var<double>(sr), Var<double>(hr), LossWeights{-1, 1, 1e-3}), InvalidInputError);
}

TEST_CASE("learning-rate halving schedule") {
    const TrainConfig cfg;
    CHECK(lr_at(0, cfg) == 2e-4);
    CHECK(lr_at(14, cfg) == 2e-4);
    CHECK(lr_at(15, cfg) == 1e-4);
    CHECK(lr_at(30, cfg) == 5e-5);
    CHECK(lr_at(45, cfg) == doctest::Approx(2.5e-5).epsilon(1e-15));
    CHECK_THROWS_AS(lr_at(-1, cfg), InvalidInputError);
}

TEST_CASE("Adam: zero gradients and the first step") {
    TrainConfig cfg;
    ParamStore<double> p;
    p.add("w", TD({1}, 0.5));
    OptimState<double> st;
    adam_step(p, {TD({1}, 0.0)}, st, 1e-3, cfg);
    CHECK(p.get("w")[0] == 0.5);
    CHECK(st.t == 1);

    ParamStore<double> q;
    q.add("w", TD({1}, 0.5));
    OptimState<double> s2;
    adam_step(q, {TD({1}, 1.0)}, s2, 1e-3, cfg);
    CHECK(q.get("w")[0] == doctest::Approx(0.5 - 1e-3 / (1 + cfg.adam_eps)).epsilon(1e-15));
    CHECK_THROWS_AS(adam_step(q, {TD({2}, 1.0)}, s2, 1e-3, cfg), ShapeError);
}

TEST_CASE("Adam matches a hand-rolled update over several steps") {
    TrainConfig cfg;
    std::mt19937_64 rng(4);
    ParamStore<double> p;
    p.add("a", TD::uniform({3}, rng));
    TD x = p.get("a"), m({3}), v({3});
    OptimState<double> st;
    for (int t = 1; t <= 5; ++t) {
        const TD g = TD::uniform({3}, rng);
        adam_step(p, {g}, st, 1e-2, cfg);
        for (Index i = 0; i < 3; ++i) {
            m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1 - cfg.beta2) * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(cfg.beta1, t)), vh = v[i] / (1 - std::pow(cfg.beta2, t));
            x[i] -= 1e-2 * mh / (std::sqrt(vh) + cfg.adam_eps);
        }
    }
    CHECK(max_abs_diff(p.get("a"), x) < 1e-14);
}

TEST_CASE("training is deterministic and writes its outputs") {
    test_util::TempDir dir;
    const LgfnConfig cfg = LgfnConfig::tiny();
    const LightField hr = disparity_field(2, 2, 16, 16);
    const SamplePair pair{degrade_bicubic(hr, 2), hr, 2};
    TrainConfig t;
    t.epochs = 2;
    t.steps_per_epoch = 3;
    t.seed = 5;
    const auto a = train_loop({pair}, cfg, t, init_params(cfg, 1), {dir / "log.jsonl", dir.path()});
    const auto b = train_loop({pair}, cfg, t, init_params(cfg, 1));
    REQUIRE(a.steps.size() == 6);
    for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].total == b.steps[i].total);
    CHECK(a.params.bit_equal(b.params));
    CHECK(a.epoch_mean_loss.size() == 2);
    CHECK(a.steps[0].lr == 2e-4);

    std::ifstream log(dir / "log.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) lines += !line.empty();
    CHECK(lines == 6);
    CHECK(std::filesystem::exists(dir / "epoch_2.lgfn"));

    TrainConfig bad = t;
    bad.batch = 2;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    CHECK_THROWS_AS(train_loop({}, cfg, t, init_params(cfg, 1)), InvalidInputError);
    SamplePair wrong_scale{degrade_bicubic(disparity_field(2, 2, 16, 16), 4), disparity_field(2, 2, 16, 16), 4};
    CHECK_THROWS_AS(train_loop({wrong_scale}, cfg, t, init_params(cfg, 1)), InvalidInputError);
}

}
