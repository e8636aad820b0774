#include "../support/epi_commutation.hpp"
#include "temp_dir.hpp"

#include "lgfn/light_field.hpp"

#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

using namespace lgfn;

namespace {

LightField random_field(Index U, Index V, Index C, Index H, Index W, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return LightField(Tensor<float>::uniform({U, V, C, H, W}, rng, 0.0, 1.0));
}

void write_pgm(const std::filesystem::path& p, Index w, Index h, unsigned char value) {
    std::ofstream out(p, std::ios::binary);
    out << "P5\n" << w << " " << h << "\n255\n";
    out << std::string(static_cast<std::size_t>(w * h), static_cast<char>(value));
}

} // namespace

TEST_SUITE("lf-data") {

TEST_CASE("lf4 round trip is bit-exact") {
    test_util::TempDir dir;
    const LightField lf = random_field(5, 5, 1, 32, 32, 1);
    lf_store(lf, dir / "a.lf4");
    CHECK(lf_load(dir / "a.lf4").data.bit_equal(lf.data));
}

TEST_CASE("lf4 size arithmetic and negative cases") {
    test_util::TempDir dir;
    lf_store(random_field(2, 2, 3, 4, 4, 2), dir / "b.lf4");
    CHECK(std::filesystem::file_size(dir / "b.lf4") == 2 * 2 * 3 * 4 * 4 * 4 + kLf4HeaderBytes);

    {
        std::ofstream out(dir / "bad.lf4", std::ios::binary);
        out << "XXXX" << std::string(40, '\0');
    }
    CHECK_THROWS_AS(lf_load(dir / "bad.lf4"), FormatError);

    std::filesystem::resize_file(dir / "b.lf4", std::filesystem::file_size(dir / "b.lf4") - 4);
    CHECK_THROWS_AS(lf_load(dir / "b.lf4"), CorruptionError);
}

TEST_CASE("import_views maps 8-bit samples and names bad files") {
    test_util::TempDir dir;
    for (Index u = 0; u < 5; ++u)
        for (Index v = 0; v < 5; ++v)
            write_pgm(dir / ("view_" + std::to_string(u) + "_" + std::to_string(v) + ".pgm"), 32, 32, 128);
    const LightField lf = import_views(dir.path(), 5, 5);
    CHECK(lf.data.shape() == Shape{5, 5, 1, 32, 32});
    for (float x : lf.data.span()) CHECK(x == 128.0f / 255.0f);

    write_pgm(dir / "view_3_1.pgm", 31, 32, 128);
    try {
        import_views(dir.path(), 5, 5);
        FAIL("expected an ingest error");
    } catch (const IngestError& e) {
        CHECK(std::string(e.what()).find("view_3_1.pgm") != std::string::npos);
    }
    std::filesystem::remove(dir / "view_3_1.pgm");
    CHECK_THROWS_AS(import_views(dir.path(), 5, 5), IngestError);
}

TEST_CASE("rgb_to_y values") {
    CHECK(luma_bt601(0, 0, 0) == doctest::Approx(16.0 / 255));
    CHECK(luma_bt601(1, 1, 1) == doctest::Approx(235.0 / 255));
    CHECK(luma_bt601(1, 0, 0) == doctest::Approx((65.481 + 16) / 255));
    CHECK_THROWS_AS(rgb_to_y(LightField(1, 1, 1, 2, 2)), InvalidInputError);
    LightField rgb(1, 1, 3, 1, 1);
    rgb.at(0, 0, 0, 0, 0) = 1;
    CHECK(rgb_to_y(rgb).at(0, 0, 0, 0, 0) == doctest::Approx((65.481 + 16) / 255));
}

TEST_CASE("EPI shapes, degenerate angular and bounds") {
    const LightField lf = random_field(3, 4, 1, 5, 6, 3);
    CHECK(extract_epi(lf, EpiOrientation::horizontal, 1, 2).pixels.shape() == Shape{4, 6});
    CHECK(extract_epi(lf, EpiOrientation::vertical, 1, 2).pixels.shape() == Shape{3, 5});
    CHECK_THROWS_AS(extract_epi(lf, EpiOrientation::horizontal, 3, 0), BoundsError);

    const LightField single = random_field(1, 1, 1, 5, 6, 4);
    const auto row = extract_epi(single, EpiOrientation::horizontal, 0, 2).pixels;
    for (Index w = 0; w < 6; ++w) CHECK(row[w] == single.at(0, 0, 0, 2, w));
}

TEST_CASE("horizontal EPI of a shifted ramp has slope d") {
    const Index V = 5, W = 40, d = 2;
    LightField lf(1, V, 1, 3, W);
    for (Index v = 0; v < V; ++v)
        for (Index w = 0; w < W; ++w) lf.at(0, v, 0, 1, w) = float(std::clamp<Index>(w - d * v, 0, 30)) / 30.0f;
    const auto epi = extract_epi(lf, EpiOrientation::horizontal, 0, 1).pixels;
    for (Index v = 1; v < V; ++v)
        for (Index w = d * V; w < 30; ++w) CHECK(epi.at({v, w}) == epi.at({v - 1, w - d}));
}

TEST_CASE("degrade_bicubic") {
    const LightField c(2, 2, 1, 8, 8, 0.4f);
    const LightField small = degrade_bicubic(c, 2);
    CHECK(small.data.shape() == Shape{2, 2, 1, 4, 4});
    for (float x : small.data.span()) CHECK(x == doctest::Approx(0.4f).epsilon(1e-6));
    const LightField lf = random_field(2, 2, 1, 6, 6, 5);
    CHECK(max_abs_diff(degrade_bicubic(lf, 1).data, lf.data) <= 1e-6);
    CHECK_THROWS_AS(degrade_bicubic(lf, 4), InvalidInputError);
}

TEST_CASE("patch extraction counts and tiling") {
    SamplePair one{random_field(2, 2, 1, 32, 32, 6), random_field(2, 2, 1, 64, 64, 7), 2};
    CHECK(extract_patches(one, 32, 32).size() == 1);

    SamplePair big{random_field(2, 2, 1, 64, 64, 8), random_field(2, 2, 1, 128, 128, 9), 2};
    const auto patches = extract_patches(big, 32, 32);
    REQUIRE(patches.size() == 4);
    for (const auto& p : patches) CHECK_NOTHROW(p.validate());
    CHECK(patches[3].lr.at(1, 0, 0, 0, 0) == big.lr.at(1, 0, 0, 32, 32));
    CHECK(patches[1].hr.at(0, 1, 0, 5, 7) == big.hr.at(0, 1, 0, 5, 64 + 7));
    CHECK(extract_patches(big, 16, 8).size() == std::size_t(patch_grid_count(64, 16, 8) * patch_grid_count(64, 16, 8)));
    CHECK_THROWS_AS(extract_patches(one, 33, 32), InvalidInputError);

    SamplePair wrong{random_field(2, 2, 1, 32, 32, 6), random_field(2, 2, 1, 60, 64, 7), 2};
    CHECK_THROWS_AS(wrong.validate(), InvalidInputError);
}

TEST_CASE("augmentation group structure") {
    const LightField lf = disparity_field(3, 3, 8, 8);
    CHECK(augment(lf, 0).data.bit_equal(lf.data));
    CHECK(augment(augment(lf, 1), 1).data.bit_equal(lf.data));
    std::set<std::vector<float>> distinct;
    for (int c = 0; c < 8; ++c) {
        const LightField moved = augment(lf, c);
        distinct.insert(moved.data.vec());
        CHECK(augment(moved, inverse_code(c)).data.bit_equal(lf.data));
    }
    CHECK(distinct.size() == 8);
    CHECK_THROWS_AS(augment(LightField(2, 3, 1, 4, 4), 4), InvalidInputError);
    CHECK_NOTHROW(augment(LightField(2, 3, 1, 4, 5), 3));
    CHECK_THROWS_AS(augment(lf, 8), InvalidInputError);
}

TEST_CASE("EPI extraction commutes with every augmentation") {
    const LightField lf = disparity_field(5, 5, 12, 12, 1.0, 3.0);
    for (int c = 0; c < 8; ++c) {
        INFO("code " << c);
        CHECK(epi_oracle::commutes(lf, c));
    }
}

TEST_CASE("feature layout index map and round trip") {
    const LightField lf = random_field(5, 5, 1, 4, 3, 10);
    const Tensor<float> t = to_feature_layout(lf);
    CHECK(t.shape() == Shape{1, 25, 4, 3});
    for (Index u = 0; u < 5; ++u)
        for (Index v = 0; v < 5; ++v)
            for (Index h = 0; h < 4; ++h)
                for (Index w = 0; w < 3; ++w) CHECK(t.at({0, u * 5 + v, h, w}) == lf.at(u, v, 0, h, w));
    CHECK(from_feature_layout(t, 5, 5).data.bit_equal(lf.data));
    const LightField one = random_field(1, 1, 1, 4, 3, 11);
    CHECK(to_feature_layout(one).vec() == one.data.vec());
    CHECK_THROWS_AS(to_feature_layout(random_field(1, 1, 3, 2, 2, 12)), InvalidInputError);
}

TEST_CASE("disparity field shifts by d between neighbouring views") {
    const LightField lf = disparity_field(3, 3, 24, 24, 1.0, 0.0);
    for (Index y = 0; y < 24; ++y)
        for (Index x = 1; x < 24; ++x) CHECK(lf.at(1, 2, 0, y, x) == doctest::Approx(lf.at(1, 1, 0, y, x - 1)).epsilon(1e-6));
}

TEST_CASE("netpbm round trip at 8-bit precision") {
    test_util::TempDir dir;
    std::mt19937_64 rng(13);
    const Tensor<float> img = Tensor<float>::uniform({3, 5, 4}, rng, 0.0, 1.0);
    write_netpbm(img, dir / "x.ppm");
    const Tensor<float> back = read_netpbm(dir / "x.ppm");
    CHECK(back.shape() == img.shape());
    CHECK(max_abs_diff(back, img) <= 0.5 / 255 + 1e-7);
}

}
