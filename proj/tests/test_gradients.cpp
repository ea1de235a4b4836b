#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "sgreg/optim.hpp"
#include "sgreg/phantom.hpp"
#include "support.hpp"

using namespace sgreg;
using namespace testsup;

TEST_CASE("the self-aligned configuration is a stationary point") {
    PhantomSpec spec;
    spec.dims = {16, 16, 16};
    const Volume vol = generate_pair(spec).fixed;

    RegistrationConfig cfg;
    const DisplacementField zero = make_field(vol.dims);
    const LossGradient g = loss_gradient(vol, vol, zero, zero, cfg);

    double worst = 0.0;
    for (double x : g.d_u.vectors) worst = std::max(worst, std::fabs(x));
    for (double x : g.d_v.vectors) worst = std::max(worst, std::fabs(x));
    CHECK(worst < 1e-8);
}

TEST_CASE("a constant fixed image silences the similarity gradient") {
    // segi of a constant image is zero everywhere, the cosine guard makes
    // every voxel contribute the constant 0, and its gradient vanishes
    const Volume moving = gradcheck_volume({12, 12, 12}, 201);
    const Volume fixed = make_volume({12, 12, 12}, VoxelKind::intensity, 0.5);
    RegistrationConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    cfg.sigmas = {1.5};
    const DisplacementField u = smooth_random_field(moving.dims, 202, 1.0);
    const DisplacementField v = make_field(moving.dims);
    const LossGradient g = loss_gradient(moving, fixed, u, v, cfg);
    CHECK(g.total == 0.0);
    for (double x : g.d_u.vectors) CHECK(x == 0.0);
}

TEST_CASE("term gradients match finite differences on a random instance") {
    const Dims dims{12, 12, 12};
    const Volume moving = gradcheck_volume(dims, 211);
    const Volume fixed = gradcheck_volume(dims, 212);
    const DisplacementField u = smooth_random_field(dims, 213, 1.2);
    const DisplacementField v = smooth_random_field(dims, 214, 1.2);

    RegistrationConfig cfg;
    const LossGradients terms = loss_gradient_terms(moving, fixed, u, v, cfg);

    SUBCASE("similarity term") {
        const auto r = check_gradient(
            moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.l_sg; },
            terms.sg_u, terms.sg_v, 8, 215);
        INFO(r.worst_where);
        CHECK(r.worst_rel < 1e-4);
    }
    SUBCASE("cycle term") {
        const auto r = check_gradient(
            moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.l_cc; },
            terms.cc_u, terms.cc_v, 8, 216);
        INFO(r.worst_where);
        CHECK(r.worst_rel < 1e-4);
    }
    SUBCASE("smoothness terms") {
        const auto ru = check_gradient(
            moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.psi_u; },
            terms.psi_u, make_field(dims), 8, 217);
        INFO(ru.worst_where);
        CHECK(ru.worst_rel < 1e-4);
        const auto rv = check_gradient(
            moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.psi_v; },
            make_field(dims), terms.psi_v, 8, 218);
        INFO(rv.worst_where);
        CHECK(rv.worst_rel < 1e-4);
    }
    SUBCASE("weighted total") {
        const LossGradient g = loss_gradient(moving, fixed, u, v, cfg);
        const auto r = check_gradient(
            moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.total; }, g.d_u,
            g.d_v, 8, 219);
        INFO(r.worst_where);
        CHECK(r.worst_rel < 1e-4);
    }
}

TEST_CASE("the flipped canonical-sign branch also matches finite differences") {
    // a falling ramp makes every unit gradient canonicalize through the
    // sign-flip branch
    const Dims dims{12, 12, 12};
    Volume moving = gradcheck_volume(dims, 221);
    Volume fixed = gradcheck_volume(dims, 222);
    for (double &x : moving.data) x = 1.0 - x;
    for (double &x : fixed.data) x = 1.2 - x;
    const DisplacementField u = smooth_random_field(dims, 223, 1.0);
    const DisplacementField v = smooth_random_field(dims, 224, 1.0);

    RegistrationConfig cfg;
    cfg.lambda1 = 0.0;
    cfg.lambda2 = 0.0;
    const LossGradients terms = loss_gradient_terms(moving, fixed, u, v, cfg);
    const auto r = check_gradient(
        moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.l_sg; }, terms.sg_u,
        terms.sg_v, 8, 227);
    INFO(r.worst_where);
    CHECK(r.worst_rel < 1e-4);
}

TEST_CASE("symmetric similarity gradients flow into the backward field") {
    const Dims dims{12, 12, 12};
    const Volume moving = gradcheck_volume(dims, 231);
    const Volume fixed = gradcheck_volume(dims, 232);
    const DisplacementField u = smooth_random_field(dims, 233, 1.0);
    const DisplacementField v = smooth_random_field(dims, 234, 1.0);

    RegistrationConfig cfg;
    cfg.symmetric_similarity = true;
    const LossGradients terms = loss_gradient_terms(moving, fixed, u, v, cfg);

    double vnorm = 0.0;
    for (double x : terms.sg_v.vectors) vnorm += x * x;
    CHECK(vnorm > 0.0);

    const auto r = check_gradient(
        moving, fixed, u, v, cfg, [](const LossBreakdown &b) { return b.l_sg; }, terms.sg_u,
        terms.sg_v, 8, 235);
    INFO(r.worst_where);
    CHECK(r.worst_rel < 1e-4);
}

TEST_CASE("loss_gradient totals agree with total_loss") {
    const Dims dims{12, 12, 12};
    const Volume moving = gradcheck_volume(dims, 241);
    const Volume fixed = gradcheck_volume(dims, 242);
    const DisplacementField u = smooth_random_field(dims, 243, 1.0);
    const DisplacementField v = smooth_random_field(dims, 244, 1.0);
    RegistrationConfig cfg;

    const LossGradient g = loss_gradient(moving, fixed, u, v, cfg);
    const LossBreakdown bd = total_loss(moving, fixed, u, v, cfg);
    CHECK(g.breakdown.l_sg == bd.l_sg);
    CHECK(g.breakdown.l_cc == bd.l_cc);
    CHECK(g.breakdown.psi_u == bd.psi_u);
    CHECK(g.breakdown.psi_v == bd.psi_v);
    CHECK(g.total == bd.total);
}

TEST_CASE("loss_gradient rejects non-finite fields and bad grids") {
    const Volume m = gradcheck_volume({8, 8, 8}, 251);
    RegistrationConfig cfg;
    DisplacementField u = make_field(m.dims);
    u.vectors[5] = std::nan("");
    CHECK_THROWS_AS(loss_gradient(m, m, u, make_field(m.dims), cfg), Error);
    CHECK_THROWS_AS(loss_gradient(m, m, make_field({8, 8, 7}), make_field(m.dims), cfg), Error);
}
