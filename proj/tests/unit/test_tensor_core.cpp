#include "../support/oracle_trials.hpp"

#include "lgfn/autograd.hpp"
#include "lgfn/gradcheck.hpp"
#include "lgfn/kernels.hpp"

#include <doctest.h>

#include <cmath>

using namespace lgfn;
using oracle::TD;

namespace {

TD iota_tensor(Shape s, double start = 1.0) {
    TD t(std::move(s));
    for (Index i = 0; i < t.numel(); ++i) t[i] = start + double(i);
    return t;
}

} // namespace

TEST_SUITE("tensor-core") {

TEST_CASE("tensor construction and indexing") {
    CHECK_THROWS_AS(TD({0, 3}), ShapeError);
    CHECK_THROWS_AS(TD({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
    TD t = iota_tensor({2, 3}, 0);
    CHECK(t.at({1, 2}) == 5);
    CHECK(t.dim(-1) == 3);
    CHECK_THROWS_AS(t.at({2, 0}), BoundsError);
    CHECK_THROWS_AS(t.reshaped({4}), ShapeError);
    CHECK(t.reshaped({3, 2}).at({2, 1}) == 5);

    TD pz({1}, 0.0), nz({1}, -0.0);
    CHECK(pz == nz);
    CHECK_FALSE(pz.bit_equal(nz));
}

TEST_CASE("uniform draws are seed-reproducible") {
    std::mt19937_64 a(7), b(7);
    CHECK(TD::uniform({4, 4}, a).bit_equal(TD::uniform({4, 4}, b)));
}

TEST_CASE("conv2d identity 1x1") {
    std::mt19937_64 rng(1);
    const TD x = TD::uniform({2, 3, 4, 5}, rng);
    TD w({3, 3, 1, 1});
    for (Index i = 0; i < 3; ++i) w.at({i, i, 0, 0}) = 1;
    CHECK(kernels::conv2d<double>(x, w, nullptr, kernels::ConvSpec{}) == x);
}

TEST_CASE("depthwise all-ones 3x3 on 1..9") {
    const TD x = iota_tensor({1, 1, 3, 3});
    const TD w({1, 1, 3, 3}, 1.0);
    const TD y = kernels::conv2d<double>(x, w, nullptr, kernels::ConvSpec::same(3, 3));
    CHECK(y.at({0, 0, 1, 1}) == 45);
    CHECK(y.at({0, 0, 0, 0}) == 12);
    CHECK(y.at({0, 0, 2, 2}) == 28);
}

TEST_CASE("dilated impulse response lands on multiples of the dilation") {
    TD x({1, 1, 13, 13});
    x.at({0, 0, 6, 6}) = 1;
    std::mt19937_64 rng(3);
    const TD w = TD::uniform({1, 1, 3, 3}, rng, 0.5, 1.0);
    const TD y = kernels::conv2d<double>(x, w, nullptr, kernels::ConvSpec::same(3, 3, 3));
    const TD want = oracle::conv2d(x, w, nullptr, 1, 3, 1, 3, 3);
    CHECK(oracle::max_rel_diff(y, want) < 1e-12);
    for (Index i = 0; i < 13; ++i)
        for (Index j = 0; j < 13; ++j) {
            const bool on_grid = std::abs(i - 6) % 3 == 0 && std::abs(j - 6) % 3 == 0 && std::abs(i - 6) <= 3 &&
                                 std::abs(j - 6) <= 3;
            CHECK((y.at({0, 0, i, j}) != 0) == on_grid);
        }
}

TEST_CASE("conv2d errors") {
    const TD x({1, 2, 4, 4});
    CHECK_THROWS_AS(kernels::conv2d<double>(x, TD({1, 3, 1, 1}), nullptr, kernels::ConvSpec{}), ShapeError);
    kernels::ConvSpec bad;
    bad.kernel_h = 0;
    CHECK_THROWS_AS(bad.validate(), InvalidSpecError);
    CHECK_THROWS_AS(kernels::conv2d<double>(x, TD({1, 2, 7, 7}), nullptr, kernels::ConvSpec{7, 7}), ShapeError);
}

TEST_CASE("conv2d matches the direct-loop oracle") {
    oracle::Rng rng(11);
    for (int i = 0; i < 30; ++i) CHECK(oracle::conv2d_trial(rng) <= 1e-12);
}

TEST_CASE("conv3d 1xkxk matches slice-wise oracle and the 1->64 parameter count") {
    oracle::Rng rng(12);
    for (int i = 0; i < 20; ++i) CHECK(oracle::conv3d_trial(rng) <= 1e-12);
    const TD w({64, 1, 1, 3, 3}), b({64});
    CHECK(w.numel() + b.numel() == 640);
}

TEST_CASE("pool2d single-window examples") {
    const TD x({1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
    CHECK(kernels::pool2d(x, PoolKind::max, 2, 2, 0, nullptr)[0] == 4);
    CHECK(kernels::pool2d(x, PoolKind::avg, 2, 2, 0, nullptr)[0] == 2.5);
    CHECK_THROWS_AS(kernels::pool2d(x, PoolKind::max, 3, 1, 0, nullptr), InvalidSpecError);
}

TEST_CASE("adaptive pooling examples") {
    CHECK(kernels::adaptive_pool2d(TD({1, 1, 5, 7}, 0.3), PoolKind::avg, 1, 1, nullptr)[0] == doctest::Approx(0.3));
    CHECK(kernels::adaptive_pool2d(iota_tensor({1, 1, 3, 3}), PoolKind::max, 1, 1, nullptr)[0] == 9);
    CHECK_THROWS_AS(kernels::adaptive_pool2d(TD({1, 1, 2, 2}), PoolKind::avg, 3, 1, nullptr), InvalidSpecError);
}

TEST_CASE("pooling matches the window-scan oracle") {
    oracle::Rng rng(13);
    for (int i = 0; i < 30; ++i) CHECK(oracle::pool_trial(rng) <= 1e-12);
}

TEST_CASE("pixel shuffle index map") {
    const TD x({1, 4, 1, 1}, std::vector<double>{10, 20, 30, 40});
    const TD y = kernels::pixel_shuffle(x, 2);
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    CHECK(y.vec() == std::vector<double>{10, 20, 30, 40});
    CHECK(kernels::pixel_shuffle(x, 1) == x);
    CHECK_THROWS_AS(kernels::pixel_shuffle(TD({1, 3, 2, 2}), 2), InvalidSpecError);
    oracle::Rng rng(14);
    for (int i = 0; i < 20; ++i) CHECK(oracle::pixel_shuffle_trial(rng) == 0);
}

TEST_CASE("resize reproduces constants and is monotone along a ramp") {
    for (const auto mode : {ResizeMode::bilinear, ResizeMode::bicubic})
        for (const auto& [oh, ow] : {std::pair<Index, Index>{14, 10}, {3, 2}, {7, 7}}) {
            const TD y = kernels::resize(TD({2, 7, 5}, 0.625), oh, ow, mode);
            for (double v : y.vec()) CHECK(v == doctest::Approx(0.625).epsilon(1e-12));
        }
    const TD y = kernels::resize(TD({1, 2}, std::vector<double>{0, 1}), 2, 4, ResizeMode::bilinear);
    for (Index j = 1; j < 4; ++j) CHECK(y.at({0, j}) >= y.at({0, j - 1}));
    CHECK_THROWS_AS(kernels::resize(TD({2, 2}), 0, 4, ResizeMode::bilinear), InvalidSpecError);
    CHECK_THROWS_AS(kernels::scaled_extent(4, 0, 1), InvalidSpecError);
}

TEST_CASE("resize superposition") {
    std::mt19937_64 rng(15);
    const TD a = TD::uniform({2, 6, 5}, rng), b = TD::uniform({2, 6, 5}, rng);
    TD ab(a.shape());
    for (Index i = 0; i < a.numel(); ++i) ab[i] = 2 * a[i] - 3 * b[i];
    for (const auto mode : {ResizeMode::bilinear, ResizeMode::bicubic}) {
        const TD ya = kernels::resize(a, 12, 3, mode), yb = kernels::resize(b, 12, 3, mode);
        const TD yab = kernels::resize(ab, 12, 3, mode);
        for (Index i = 0; i < yab.numel(); ++i) CHECK(std::abs(yab[i] - (2 * ya[i] - 3 * yb[i])) < 1e-9);
    }
}

TEST_CASE("resize matches the kernel-summation oracle") {
    oracle::Rng rng(16);
    for (int i = 0; i < 30; ++i) CHECK(oracle::resize_trial(rng) <= 1e-12);
}

TEST_CASE("activation values") {
    CHECK(kernels::activate(Activation::sigmoid, 0) == 0.5);
    CHECK(kernels::activate(Activation::leaky_relu, -2) == doctest::Approx(-0.2));
    CHECK(kernels::activate(Activation::leaky_relu, 3) == 3);
    CHECK(kernels::activate(Activation::gelu, 0) == 0);
    CHECK(kernels::activate(Activation::gelu, 20) == doctest::Approx(20));
    CHECK(std::abs(kernels::activate(Activation::gelu, -20)) < 1e-12);
    const double x = 0.7, e = 1e-6;
    for (const auto k : {Activation::gelu, Activation::leaky_relu, Activation::sigmoid})
        CHECK(kernels::activate_grad(k, x) ==
              doctest::Approx((kernels::activate(k, x + e) - kernels::activate(k, x - e)) / (2 * e)).epsilon(1e-7));
}

TEST_CASE("fft2d DC bin and DFT oracle") {
    const TD x({6, 5}, 0.3);
    const auto [re, im] = kernels::fft2d(x);
    CHECK(re[0] == doctest::Approx(0.3 * 30));
    for (Index i = 1; i < re.numel(); ++i) {
        CHECK(std::abs(re[i]) < 1e-9);
        CHECK(std::abs(im[i]) < 1e-9);
    }
    oracle::Rng rng(17);
    for (int i = 0; i < 20; ++i) CHECK(oracle::fft2d_trial(rng) <= 1e-10);
}

TEST_CASE("permute and its inverse") {
    const TD x = iota_tensor({2, 3, 4});
    const TD y = kernels::permute(x, {2, 0, 1});
    CHECK(y.shape() == Shape{4, 2, 3});
    CHECK(y.at({3, 1, 2}) == x.at({1, 2, 3}));
    CHECK(kernels::permute(y, kernels::inverse_permutation({2, 0, 1})) == x);
    CHECK_THROWS_AS(kernels::permute(x, {0, 0, 1}), InvalidSpecError);
}

TEST_CASE("tape gradients of simple expressions") {
    GradTape<double> tape;
    const Var<double> a = tape.parameter(TD({3}, std::vector<double>{1, -2, 3}));
    const Var<double> b = tape.parameter(TD({3}, std::vector<double>{4, 5, -6}));
    const Var<double> y = sum(mul(a, b));
    tape.backward(y);
    CHECK(y.value()[0] == 1 * 4 - 2 * 5 - 3 * 6);
    CHECK(a.grad() == b.value());
    CHECK(b.grad() == a.value());
    CHECK_THROWS_AS(tape.backward(a), ShapeError);
}

TEST_CASE("gradcheck of a linear function is exact") {
    std::mt19937_64 rng(18);
    const ScalarFn f = [](const std::vector<Var<double>>& in) { return sum(in[0]); };
    CHECK(gradcheck(f, {TD::uniform({3, 4}, rng)}) < 1e-10);
    const ScalarFn bad = [](const std::vector<Var<double>>& in) { return scale(sum(in[0]), INFINITY); };
    CHECK_THROWS_AS(gradcheck(bad, {TD({2}, 1.0)}), EvaluationError);
}

TEST_CASE("op counter sees convolution MACs") {
    OpCounter counter;
    kernels::conv2d<double>(TD({1, 4, 5, 5}), TD({3, 4, 3, 3}), nullptr, kernels::ConvSpec::same(3, 3));
    CHECK(counter.counts().macs == 3u * 25u * 9u * 4u);
}

TEST_CASE("gradient suite passes without the model case") {
    for (const auto& c : run_gradcheck_suite(3, false)) {
        INFO(c.name << " err " << c.max_rel_error);
        CHECK(c.passed());
    }
}

}
