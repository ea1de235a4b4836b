#include "sgreg/losses.hpp"

#include <cmath>
#include <string>

#include "sgreg/optim.hpp"

namespace sgreg {

double cycle_loss(const Volume &moving, const DisplacementField &u,
                  const DisplacementField &v) {
    if (moving.dims != u.dims || moving.dims != v.dims)
        raise(ErrorCode::dimension_mismatch, "cycle_loss: volume and field grids differ");
    const Volume restored = warp(warp(moving, u), v);
    const std::int64_t n = moving.voxel_count();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i)
        acc += std::fabs(restored.data[static_cast<std::size_t>(i)] -
                         moving.data[static_cast<std::size_t>(i)]);
    return acc / static_cast<double>(n);
}

double smoothness(const DisplacementField &field) {
    const Dims &d = field.dims;
    for (int a = 0; a < 3; ++a)
        if (d[a] < 2)
            raise(ErrorCode::invalid_argument,
                  "smoothness: every dim must be >= 2, axis " + std::to_string(a) +
                      " has " + std::to_string(d[a]));

    const std::int64_t step[3] = {1, d[0], d[0] * d[1]};
    double acc = 0.0;
    std::int64_t v = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++v) {
                const std::int64_t x[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    if (x[a] == d[a] - 1) continue; // forward difference undefined at far slice
                    const std::size_t here = static_cast<std::size_t>(3 * v);
                    const std::size_t next = static_cast<std::size_t>(3 * (v + step[a]));
                    for (int c = 0; c < 3; ++c) {
                        const double diff = field.vectors[next + c] - field.vectors[here + c];
                        acc += diff * diff;
                    }
                }
            }
    return acc / static_cast<double>(field.voxel_count());
}

LossBreakdown total_loss(const Volume &moving, const Volume &fixed,
                         const DisplacementField &u, const DisplacementField &v,
                         const RegistrationConfig &cfg) {
    validate(cfg);
    if (moving.dims != fixed.dims || moving.dims != u.dims || moving.dims != v.dims)
        raise(ErrorCode::dimension_mismatch, "total_loss: inputs must share one grid");

    LossBreakdown out;
    out.lambda1 = cfg.lambda1;
    out.lambda2 = cfg.lambda2;

    const SegiField fixed_sg = segi(fixed, cfg.sigmas, cfg.grad_eps);
    const SegiField moved_sg = segi(warp(moving, u), cfg.sigmas, cfg.grad_eps);
    out.l_sg = segi_loss(moved_sg, fixed_sg, cfg.cos_eps);
    if (cfg.symmetric_similarity) {
        const SegiField moving_sg = segi(moving, cfg.sigmas, cfg.grad_eps);
        const SegiField moved_back_sg = segi(warp(fixed, v), cfg.sigmas, cfg.grad_eps);
        out.l_sg = 0.5 * (out.l_sg + segi_loss(moved_back_sg, moving_sg, cfg.cos_eps));
    }

    out.l_cc = cycle_loss(moving, u, v);
    out.psi_u = smoothness(u);
    out.psi_v = smoothness(v);
    out.total = out.l_sg + cfg.lambda1 * out.l_cc + cfg.lambda2 * (out.psi_u + out.psi_v);
    if (!std::isfinite(out.total))
        raise(ErrorCode::numeric_failure, "total_loss: non-finite value");
    return out;
}

} // namespace sgreg
