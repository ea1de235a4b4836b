#include <doctest.h>

#include <cmath>

#include "sgreg/volume.hpp"
#include "support.hpp"

using namespace sgreg;
using namespace testsup;

namespace {

Volume ramp_volume(const Dims &dims, int axis, double slope = 1.0) {
    Volume v = make_volume(dims);
    std::size_t n = 0;
    for (std::int64_t k = 0; k < dims[2]; ++k)
        for (std::int64_t j = 0; j < dims[1]; ++j)
            for (std::int64_t i = 0; i < dims[0]; ++i, ++n) {
                const std::int64_t x[3] = {i, j, k};
                v.data[n] = slope * static_cast<double>(x[axis]);
            }
    return v;
}

DisplacementField constant_field(const Dims &dims, const Vec3 &t) {
    DisplacementField f = make_field(dims);
    for (std::int64_t v = 0; v < f.voxel_count(); ++v)
        for (int c = 0; c < 3; ++c)
            f.vectors[static_cast<std::size_t>(3 * v + c)] = t[static_cast<std::size_t>(c)];
    return f;
}

} // namespace

TEST_CASE("trilinear sampling preserves linear ramps") {
    const Volume v = ramp_volume({6, 4, 4}, 0);
    CHECK(trilinear_sample(v, {2.5, 1.0, 1.0}) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("trilinear sampling is exact at grid nodes") {
    const Volume v = random_volume({5, 6, 7}, 101);
    for (std::int64_t k = 0; k < 7; k += 3)
        for (std::int64_t j = 0; j < 6; j += 2)
            for (std::int64_t i = 0; i < 5; i += 2) {
                const double got = trilinear_sample(
                    v, {static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)});
                CHECK(got == v.at(i, j, k));
            }
}

TEST_CASE("trilinear midpoint of a 2^3 cell is the corner mean") {
    Volume v = make_volume({2, 2, 2});
    double expected = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        v.data[i] = static_cast<double>(i);
        expected += static_cast<double>(i) / 8.0;
    }
    CHECK(trilinear_sample(v, {0.5, 0.5, 0.5}) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("trilinear sampling clamps to the border") {
    const Volume v = ramp_volume({4, 4, 4}, 0);
    CHECK(trilinear_sample(v, {-3.0, 1.0, 1.0}) == 0.0);
    CHECK(trilinear_sample(v, {9.5, 1.0, 1.0}) == 3.0);
}

TEST_CASE("trilinear sampling rejects bad inputs") {
    const Volume v = ramp_volume({4, 4, 4}, 0);
    CHECK_THROWS_AS(trilinear_sample(v, {std::nan(""), 0, 0}), Error);
    Volume lab = make_volume({4, 4, 4}, VoxelKind::label);
    CHECK_THROWS_AS(trilinear_sample(lab, {1, 1, 1}), Error);
}

TEST_CASE("warp with a zero field is the identity, bit-exactly") {
    for (VoxelKind kind : {VoxelKind::intensity, VoxelKind::label}) {
        const Volume v = kind == VoxelKind::label
                             ? random_label_volume({5, 4, 6}, 7, {1, 2})
                             : random_volume({5, 4, 6}, 7);
        const Volume w = warp(v, make_field(v.dims));
        CHECK(w.data == v.data);
        CHECK(w.kind == v.kind);
    }
}

TEST_CASE("warping a ramp by a unit translation shifts it") {
    const Volume v = ramp_volume({8, 4, 4}, 0);
    const Volume w = warp(v, constant_field(v.dims, {1, 0, 0}));
    for (std::int64_t i = 0; i < 7; ++i) // interior along the shifted axis
        CHECK(w.at(i, 2, 2) == doctest::Approx(static_cast<double>(i) + 1.0).epsilon(1e-15));
}

TEST_CASE("integer translation matches the index-shift oracle") {
    const Volume v = random_volume({8, 8, 8}, 42);
    const Volume w = warp(v, constant_field(v.dims, {2, 0, 0}));
    for (std::int64_t k = 0; k < 8; ++k)
        for (std::int64_t j = 0; j < 8; ++j)
            for (std::int64_t i = 0; i < 8; ++i) {
                const std::int64_t src = std::min<std::int64_t>(i + 2, 7); // border replicate
                CHECK(w.at(i, j, k) == v.at(src, j, k));
            }
}

TEST_CASE("warp rejects mismatched grids with both shapes named") {
    const Volume v = random_volume({4, 4, 4}, 1);
    try {
        warp(v, make_field({4, 4, 5}));
        FAIL("expected an error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
        CHECK(std::string(e.what()).find("4x4x4") != std::string::npos);
        CHECK(std::string(e.what()).find("4x4x5") != std::string::npos);
    }
}

TEST_CASE("warp is linear in the volume") {
    const Volume a = random_volume({6, 5, 7}, 11);
    const Volume b = random_volume({6, 5, 7}, 12);
    const DisplacementField f = smooth_random_field({6, 5, 7}, 13, 1.5);

    Volume combo = a;
    for (std::size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = 0.7 * a.data[i] - 1.3 * b.data[i];

    const Volume wa = warp(a, f);
    const Volume wb = warp(b, f);
    const Volume wc = warp(combo, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < wc.data.size(); ++i)
        worst = std::max(worst, std::fabs(wc.data[i] - (0.7 * wa.data[i] - 1.3 * wb.data[i])));
    CHECK(worst < 1e-12);
}

TEST_CASE("label warping emits only input label values") {
    const Volume lab = random_label_volume({6, 6, 6}, 3, {1, 2, 5});
    const Volume w = warp(lab, smooth_random_field({6, 6, 6}, 4, 2.0));
    for (double v : w.data) {
        bool present = false;
        for (double s : lab.data)
            if (s == v) {
                present = true;
                break;
            }
        CHECK(present);
    }
}

TEST_CASE("compose with a zero u returns v exactly") {
    const DisplacementField v = smooth_random_field({5, 5, 5}, 21, 1.0);
    const DisplacementField w = compose(make_field({5, 5, 5}), v);
    CHECK(w.vectors == v.vectors);
}

TEST_CASE("constant fields compose additively away from borders") {
    const DisplacementField u = constant_field({8, 8, 8}, {1, 0, 0});
    const DisplacementField v = constant_field({8, 8, 8}, {0, 1, 0});
    const DisplacementField w = compose(u, v);
    for (std::int64_t k = 2; k < 6; ++k)
        for (std::int64_t j = 2; j < 6; ++j)
            for (std::int64_t i = 2; i < 6; ++i) {
                const Vec3 got = w.at(i, j, k);
                CHECK(got[0] == doctest::Approx(1.0).epsilon(1e-15));
                CHECK(got[1] == doctest::Approx(1.0).epsilon(1e-15));
                CHECK(got[2] == doctest::Approx(0.0).epsilon(1e-15));
            }
}

TEST_CASE("opposite constant fields cancel on the interior") {
    const DisplacementField v = constant_field({8, 8, 8}, {1.5, -0.5, 0});
    DisplacementField u = v;
    for (double &x : u.vectors) x = -x;
    const DisplacementField w = compose(u, v);
    for (std::int64_t k = 2; k < 6; ++k)
        for (std::int64_t j = 2; j < 6; ++j)
            for (std::int64_t i = 2; i < 6; ++i) {
                const Vec3 got = w.at(i, j, k);
                for (int c = 0; c < 3; ++c) CHECK(std::fabs(got[c]) < 1e-12);
            }
}

TEST_CASE("double warp equals the composed warp for constant fields") {
    const Volume vol = random_volume({8, 8, 8}, 31);
    const DisplacementField u = constant_field(vol.dims, {1.25, 0, 0});
    const DisplacementField v = constant_field(vol.dims, {0, -0.75, 0.5});

    const Volume twice = warp(warp(vol, u), v);
    const Volume once = warp(vol, compose(u, v));
    // x + v(x) + u(x+v(x)) stays in bounds on this interior block
    for (std::int64_t k = 2; k < 6; ++k)
        for (std::int64_t j = 2; j < 6; ++j)
            for (std::int64_t i = 2; i < 5; ++i)
                CHECK(std::fabs(twice.at(i, j, k) - once.at(i, j, k)) < 1e-12);
}

TEST_CASE("compose rejects mismatched grids") {
    CHECK_THROWS_AS(compose(make_field({4, 4, 4}), make_field({4, 5, 4})), Error);
}

TEST_CASE("single-level pyramid returns the input") {
    const Volume v = random_volume({8, 8, 8}, 51);
    const auto pyr = resample_pyramid(v, 1);
    REQUIRE(pyr.size() == 1);
    CHECK(pyr[0].data == v.data);
}

TEST_CASE("pyramid of a constant volume stays constant with halving dims") {
    const Volume v = make_volume({16, 16, 16}, VoxelKind::intensity, 0.625);
    const auto pyr = resample_pyramid(v, 3);
    REQUIRE(pyr.size() == 3);
    CHECK(pyr[1].dims == Dims{8, 8, 8});
    CHECK(pyr[2].dims == Dims{4, 4, 4});
    CHECK(pyr[1].spacing[0] == 2.0);
    CHECK(pyr[2].spacing[0] == 4.0);
    for (int l = 1; l < 3; ++l)
        for (double x : pyr[static_cast<std::size_t>(l)].data)
            CHECK(x == doctest::Approx(0.625).epsilon(1e-14));
}

TEST_CASE("pyramid downsampling doubles the per-voxel slope of a ramp") {
    const Volume v = ramp_volume({16, 16, 16}, 0);
    const auto pyr = resample_pyramid(v, 2);
    REQUIRE(pyr.size() == 2);
    REQUIRE(pyr[1].dims == Dims{8, 8, 8});
    // away from the border the presmoothing leaves the linear ramp intact and
    // subsampling doubles the slope per index
    for (std::int64_t i = 2; i < 6; ++i)
        CHECK(pyr[1].at(i, 4, 4) == doctest::Approx(2.0 * static_cast<double>(i)).epsilon(1e-12));
}

TEST_CASE("pyramid rejects volumes that get too coarse") {
    const Volume v = random_volume({8, 8, 8}, 61);
    CHECK_THROWS_AS(resample_pyramid(v, 3), Error); // 8 -> 4 -> 2
    CHECK_THROWS_AS(resample_pyramid(v, 0), Error);
    const Volume lab = random_label_volume({8, 8, 8}, 62, {1});
    CHECK_THROWS_AS(resample_pyramid(lab, 2), Error);
}

TEST_CASE("upsampling a constant field keeps direction and doubles magnitude exactly") {
    const DisplacementField coarse = constant_field({5, 5, 5}, {0.25, -1.5, 3.0});
    const DisplacementField fine = upsample_doubled(coarse, {9, 9, 9}, {1, 1, 1});
    for (std::int64_t v = 0; v < fine.voxel_count(); ++v) {
        CHECK(fine.vectors[static_cast<std::size_t>(3 * v)] == 0.5);
        CHECK(fine.vectors[static_cast<std::size_t>(3 * v + 1)] == -3.0);
        CHECK(fine.vectors[static_cast<std::size_t>(3 * v + 2)] == 6.0);
    }
}

TEST_CASE("minmax normalization maps constants to zero and spans [0,1]") {
    const Volume c = make_volume({4, 4, 4}, VoxelKind::intensity, 7.5);
    for (double x : minmax_normalize(c).data) CHECK(x == 0.0);

    const Volume r = random_volume({6, 6, 6}, 71, VoxelKind::intensity, -3.0, 12.0);
    const Volume n = minmax_normalize(r);
    double lo = 1e9, hi = -1e9;
    for (double x : n.data) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
}

TEST_CASE("volume validation enforces the type invariants") {
    Volume v = random_volume({4, 4, 4}, 81);
    v.data.pop_back();
    CHECK_THROWS_AS(validate(v), Error);

    Volume s = random_volume({4, 4, 4}, 82);
    s.spacing[1] = 0.0;
    CHECK_THROWS_AS(validate(s), Error);

    Volume lab = make_volume({4, 4, 4}, VoxelKind::label);
    lab.data[3] = 1.5;
    CHECK_THROWS_AS(validate(lab), Error);
    lab.data[3] = -2.0;
    CHECK_THROWS_AS(validate(lab), Error);
}

TEST_CASE("resample_to maps through world coordinates") {
    // source grid: spacing 2, origin 0; reference: spacing 1, origin 1
    Volume src = ramp_volume({6, 6, 6}, 0); // I = i, world x = 2i
    src.spacing = {2, 2, 2};
    Volume ref = make_volume({4, 4, 4});
    ref.origin = {1, 1, 1};
    const Volume out = resample_to(src, ref);
    // world x = 1 + i_ref, so source coordinate = (1 + i_ref)/2 and the ramp
    // value equals that coordinate
    for (std::int64_t i = 0; i < 4; ++i)
        CHECK(out.at(i, 1, 1) ==
              doctest::Approx(0.5 * (1.0 + static_cast<double>(i))).epsilon(1e-14));
}
