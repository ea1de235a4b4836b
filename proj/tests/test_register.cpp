#include <doctest.h>

#include <cmath>

#include "sgreg/optim.hpp"
#include "sgreg/phantom.hpp"
#include "support.hpp"

using namespace sgreg;
using namespace testsup;

namespace {

double mean_norm(const DisplacementField &f) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 2 < f.vectors.size(); i += 3)
        acc += std::sqrt(f.vectors[i] * f.vectors[i] + f.vectors[i + 1] * f.vectors[i + 1] +
                         f.vectors[i + 2] * f.vectors[i + 2]);
    return acc / static_cast<double>(f.voxel_count());
}

} // namespace

TEST_CASE("registering a volume to itself keeps the fields near zero") {
    PhantomSpec spec;
    spec.dims = {16, 16, 16};
    const Volume vol = generate_pair(spec).fixed;

    RegistrationConfig cfg;
    cfg.levels = 2;
    cfg.iters_per_level = 60;
    const RegistrationResult r = register_volumes(vol, vol, cfg);
    CHECK(mean_norm(r.forward) < 0.1);
    CHECK(mean_norm(r.backward) < 0.1);
}

TEST_CASE("config validation rejects a zero iteration budget") {
    const Volume vol = gradcheck_volume({8, 8, 8}, 301);
    RegistrationConfig cfg;
    cfg.iters_per_level = 0;
    CHECK_THROWS_AS(register_volumes(vol, vol, cfg), Error);
    cfg.iters_per_level = 200;
    cfg.levels = 0;
    CHECK_THROWS_AS(register_volumes(vol, vol, cfg), Error);
    cfg.levels = 3;
    cfg.sigmas.clear();
    CHECK_THROWS_AS(register_volumes(vol, vol, cfg), Error);
}

TEST_CASE("a single iteration takes exactly one recorded step per level") {
    const Volume a = gradcheck_volume({12, 12, 12}, 302);
    const Volume b = gradcheck_volume({12, 12, 12}, 303);
    RegistrationConfig cfg;
    cfg.levels = 2;
    cfg.iters_per_level = 1;
    const RegistrationResult r = register_volumes(a, b, cfg);
    CHECK(r.trace.records.size() == 2);
    CHECK(r.trace.records[0].level == 1);
    CHECK(r.trace.records[1].level == 0);
    // one Adam step moved the field off zero
    double norm = 0.0;
    for (double x : r.forward.vectors) norm += x * x;
    CHECK(norm > 0.0);
}

TEST_CASE("iteration indices increase within each level") {
    const Volume a = gradcheck_volume({12, 12, 12}, 304);
    const Volume b = gradcheck_volume({12, 12, 12}, 305);
    RegistrationConfig cfg;
    cfg.levels = 2;
    cfg.iters_per_level = 4;
    const RegistrationResult r = register_volumes(a, b, cfg);
    int last_level = -1, last_iter = -1;
    for (const TraceRecord &rec : r.trace.records) {
        if (rec.level != last_level) {
            last_level = rec.level;
            last_iter = -1;
        }
        CHECK(rec.iteration == last_iter + 1);
        last_iter = rec.iteration;
    }
}

TEST_CASE("an inverted-contrast translation is recovered by the backward field") {
    // sized so the coarsest pyramid level still has real structure and a
    // sub-voxel version of the 3-voxel translation
    PhantomSpec spec;
    spec.dims = {32, 32, 32};
    spec.remap = ModalityRemap::invert;
    spec.deformation = DeformationKind::translation;
    spec.translation = {3.0, 0.0, 0.0};
    spec.seed = 5;
    const PhantomPair pair = generate_pair(spec);

    RegistrationConfig cfg;
    cfg.iters_per_level = 150;
    const RegistrationResult r = register_volumes(pair.moving, pair.fixed, cfg);

    // the generative field is the exact optimum for the backward direction:
    // warp(fixed, truth) reproduces the moving image up to the remap
    const double err = endpoint_error(r.backward, pair.truth, pair.fixed_label);
    CHECK(err < 0.5);
}

TEST_CASE("registration is deterministic") {
    PhantomSpec spec;
    spec.dims = {12, 12, 12};
    spec.deformation = DeformationKind::translation;
    spec.translation = {1.0, 0.0, 0.0};
    spec.noise_sigma = 0.01;
    spec.seed = 9;
    const PhantomPair pair = generate_pair(spec);

    RegistrationConfig cfg;
    cfg.levels = 2;
    cfg.iters_per_level = 10;
    const RegistrationResult a = register_volumes(pair.moving, pair.fixed, cfg);
    const RegistrationResult b = register_volumes(pair.moving, pair.fixed, cfg);
    CHECK(a.forward.vectors == b.forward.vectors);
    CHECK(a.backward.vectors == b.backward.vectors);
    REQUIRE(a.trace.records.size() == b.trace.records.size());
    for (std::size_t i = 0; i < a.trace.records.size(); ++i) {
        CHECK(a.trace.records[i].loss.total == b.trace.records[i].loss.total);
        CHECK(a.trace.records[i].max_displacement == b.trace.records[i].max_displacement);
    }
}

TEST_CASE("optimization improves the best-seen loss on seeded phantoms") {
    int improved = 0;
    const int runs = 5;
    for (int run = 0; run < runs; ++run) {
        PhantomSpec spec;
        spec.dims = {12, 12, 12};
        spec.deformation = DeformationKind::translation;
        spec.translation = {1.0 + 0.25 * run, 0.0, 0.0};
        spec.noise_sigma = 0.005;
        spec.seed = static_cast<std::uint64_t>(400 + run);
        const PhantomPair pair = generate_pair(spec);

        RegistrationConfig cfg;
        cfg.levels = 2;
        cfg.iters_per_level = 30;
        const RegistrationResult r = register_volumes(pair.moving, pair.fixed, cfg);

        double best = r.trace.records.front().loss.total;
        for (const TraceRecord &rec : r.trace.records) best = std::min(best, rec.loss.total);
        if (best < r.trace.records.front().loss.total) ++improved;
    }
    CHECK(improved >= static_cast<int>(0.95 * runs));
}

TEST_CASE("register requires a shared grid and intensity volumes") {
    const Volume a = gradcheck_volume({12, 12, 12}, 320);
    const Volume b = gradcheck_volume({12, 12, 16}, 321);
    RegistrationConfig cfg;
    CHECK_THROWS_AS(register_volumes(a, b, cfg), Error);

    const Volume lab = random_label_volume({12, 12, 12}, 322, {1});
    CHECK_THROWS_AS(register_volumes(lab, a, cfg), Error);
}
