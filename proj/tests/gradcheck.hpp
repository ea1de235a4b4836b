#pragma once

// Central finite-difference verification of the analytic loss gradients.
// Each probe perturbs one displacement component by +-h and re-evaluates the
// loss term through the public total_loss path, so the check is independent
// of the adjoint code it validates.

#include <cmath>
#include <functional>
#include <string>

#include "sgreg/losses.hpp"
#include "sgreg/optim.hpp"
#include "support.hpp"

namespace testsup {

using TermValue = std::function<double(const LossBreakdown &)>;

struct GradCheckResult {
    double worst_rel = 0.0;
    std::int64_t checked = 0;
    std::string worst_where;
};

// Relative error with an absolute floor: components below the floor are
// treated as zero against finite-difference noise.
inline double rel_error(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-8});
    return std::fabs(analytic - fd) / denom;
}

// Probes `probes_per_field` random components of each field. `value` extracts
// the term under test from a LossBreakdown; `grad_u`/`grad_v` are the
// matching analytic term gradients.
inline GradCheckResult check_gradient(const Volume &moving, const Volume &fixed,
                                      const DisplacementField &u, const DisplacementField &v,
                                      const RegistrationConfig &cfg, const TermValue &value,
                                      const DisplacementField &grad_u,
                                      const DisplacementField &grad_v, int probes_per_field,
                                      std::uint64_t seed, double h = 1e-3) {
    Rng rng(seed);
    GradCheckResult result;

    DisplacementField ut = u;
    DisplacementField vt = v;
    for (int field_index = 0; field_index < 2; ++field_index) {
        DisplacementField &target = field_index == 0 ? ut : vt;
        const DisplacementField &analytic_grad = field_index == 0 ? grad_u : grad_v;

        for (int p = 0; p < probes_per_field; ++p) {
            const std::size_t idx = static_cast<std::size_t>(
                rng.integer(0, static_cast<std::int64_t>(u.vectors.size()) - 1));
            const double saved = target.vectors[idx];

            target.vectors[idx] = saved + h;
            const double plus = value(total_loss(moving, fixed, ut, vt, cfg));
            target.vectors[idx] = saved - h;
            const double minus = value(total_loss(moving, fixed, ut, vt, cfg));
            target.vectors[idx] = saved;

            const double fd = (plus - minus) / (2.0 * h);
            const double analytic = analytic_grad.vectors[idx];
            const double err = rel_error(analytic, fd);
            ++result.checked;
            if (err > result.worst_rel) {
                result.worst_rel = err;
                result.worst_where = std::string(field_index == 0 ? "u" : "v") + "[" +
                                     std::to_string(idx) + "] analytic=" +
                                     std::to_string(analytic) + " fd=" + std::to_string(fd);
            }
        }
    }
    return result;
}

} // namespace testsup
