#include "sgreg/optim.hpp"

#include <cmath>
#include <random>
#include <string>

#include "sgreg/filtering.hpp"
#include "sgreg/segi.hpp"

namespace sgreg {

void validate(const RegistrationConfig &cfg) {
    if (cfg.sigmas.empty())
        raise(ErrorCode::invalid_argument, "config: sigma list must be nonempty");
    for (double s : cfg.sigmas)
        if (!(s > 0.0))
            raise(ErrorCode::invalid_argument, "config: sigmas must be positive");
    if (cfg.lambda1 < 0.0 || cfg.lambda2 < 0.0)
        raise(ErrorCode::invalid_argument, "config: lambdas must be nonnegative");
    if (cfg.levels < 1)
        raise(ErrorCode::invalid_argument, "config: levels must be >= 1");
    if (cfg.iters_per_level < 1)
        raise(ErrorCode::invalid_argument, "config: iters_per_level must be >= 1");
    if (!(cfg.step_size > 0.0))
        raise(ErrorCode::invalid_argument, "config: step_size must be positive");
    if (!(cfg.grad_eps > 0.0))
        raise(ErrorCode::invalid_argument, "config: grad_eps must be positive");
    if (cfg.update_sigma < 0.0)
        raise(ErrorCode::invalid_argument, "config: update_sigma must be nonnegative");
    if (cfg.presmooth_sigma < 0.0)
        raise(ErrorCode::invalid_argument, "config: presmooth_sigma must be nonnegative");
    if (cfg.sample_jitter < 0.0)
        raise(ErrorCode::invalid_argument, "config: sample_jitter must be nonnegative");
    if (!(cfg.cos_eps > 0.0))
        raise(ErrorCode::invalid_argument, "config: cos_eps must be positive");
}

namespace {

void check_finite(const double *data, std::size_t count, const char *stage) {
    for (std::size_t i = 0; i < count; ++i)
        if (!std::isfinite(data[i]))
            raise(ErrorCode::numeric_failure,
                  std::string("loss_gradient: non-finite value after stage '") + stage + "'");
}

// Transpose of image_gradient (central differences inside, one-sided at the
// two boundary slices per axis).
void image_gradient_adjoint(const VectorField &gbar, std::vector<double> &jbar) {
    const Dims &d = gbar.dims;
    const std::int64_t step[3] = {1, d[0], d[0] * d[1]};
    jbar.assign(static_cast<std::size_t>(voxel_count(d)), 0.0);

    std::int64_t v = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++v) {
                const std::int64_t x[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    const double g = gbar.vectors[static_cast<std::size_t>(3 * v + a)];
                    if (g == 0.0) continue;
                    if (x[a] == 0) {
                        jbar[static_cast<std::size_t>(v + step[a])] += g;
                        jbar[static_cast<std::size_t>(v)] -= g;
                    } else if (x[a] == d[a] - 1) {
                        jbar[static_cast<std::size_t>(v)] += g;
                        jbar[static_cast<std::size_t>(v - step[a])] -= g;
                    } else {
                        jbar[static_cast<std::size_t>(v + step[a])] += 0.5 * g;
                        jbar[static_cast<std::size_t>(v - step[a])] -= 0.5 * g;
                    }
                }
            }
}

// Scatter `value` onto the 8 clamped cell corners with trilinear weights.
void scatter_trilinear(const Dims &dims, const Vec3 &p, double value,
                       std::vector<double> &buf) {
    const InterpCell cell = interp_cell(dims, p);
    const double fx = cell.frac[0], fy = cell.frac[1], fz = cell.frac[2];
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    const double wz[2] = {1.0 - fz, fz};
    const std::int64_t ix[2] = {cell.lo[0], cell.hi[0]};
    const std::int64_t iy[2] = {cell.lo[1], cell.hi[1]};
    const std::int64_t iz[2] = {cell.lo[2], cell.hi[2]};
    for (int cz = 0; cz < 2; ++cz)
        for (int cy = 0; cy < 2; ++cy)
            for (int cx = 0; cx < 2; ++cx) {
                const std::size_t idx = static_cast<std::size_t>(
                    ix[cx] + dims[0] * (iy[cy] + dims[1] * iz[cz]));
                buf[idx] += value * wx[cx] * wy[cy] * wz[cz];
            }
}

// d(sampled volume)/d(field) gather: grad of the interpolant at x + field(x).
void accumulate_field_gradient(const Volume &src, const DisplacementField &field,
                               const std::vector<double> &vbar, double weight,
                               DisplacementField &out) {
    const Dims &d = field.dims;
    std::int64_t v = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++v) {
                const double w = weight * vbar[static_cast<std::size_t>(v)];
                if (w == 0.0) continue;
                const std::size_t b = static_cast<std::size_t>(3 * v);
                const Vec3 p{static_cast<double>(i) + field.vectors[b],
                             static_cast<double>(j) + field.vectors[b + 1],
                             static_cast<double>(k) + field.vectors[b + 2]};
                const SampleGrad s = trilinear_sample_grad(src, p);
                out.vectors[b] += w * s.grad[0];
                out.vectors[b + 1] += w * s.grad[1];
                out.vectors[b + 2] += w * s.grad[2];
            }
}

// Forward + reverse of the similarity term D between segi(warp(src, field))
// and a precomputed target SEGI. Returns the term value; adds
// weight * dD/dfield into grad_out.
double segi_term_with_gradient(const Volume &src, const DisplacementField &field,
                               const SegiField &target, const RegistrationConfig &cfg,
                               double weight, DisplacementField &grad_out) {
    const double eps = cfg.grad_eps;
    const std::size_t scales = cfg.sigmas.size();
    const std::int64_t n = voxel_count(src.dims);
    const auto nsz = static_cast<std::size_t>(n);

    // forward chain (intermediates kept for the reverse sweep)
    const Volume warped = warp(src, field);
    check_finite(warped.data.data(), nsz, "similarity warp");

    const VectorField grad = image_gradient(warped);
    check_finite(grad.vectors.data(), 3 * nsz, "similarity image gradient");

    // same arithmetic as normalize_gradient so values agree bit-for-bit
    std::vector<double> norms(nsz);
    VectorField unit = make_vector_field(src.dims);
    for (std::int64_t v = 0; v < n; ++v) {
        const double *g = &grad.vectors[static_cast<std::size_t>(3 * v)];
        const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        norms[static_cast<std::size_t>(v)] = norm;
        if (norm < eps) continue;
        double *u = &unit.vectors[static_cast<std::size_t>(3 * v)];
        u[0] = g[0] / norm;
        u[1] = g[1] / norm;
        u[2] = g[2] / norm;
    }
    const int orientation = field_orientation_sign(unit);
    if (orientation < 0)
        for (double &x : unit.vectors) x = -x;
    check_finite(unit.vectors.data(), 3 * nsz, "similarity normalize");

    std::vector<VectorField> smoothed;
    smoothed.reserve(scales);
    for (double s : cfg.sigmas) {
        smoothed.push_back(gaussian_smooth_field(unit, s));
        check_finite(smoothed.back().vectors.data(), 3 * nsz, "similarity gaussian smooth");
    }

    // cosine reduction, same statement order as segi_loss so values agree
    // bit-for-bit, plus the upstream derivative per scale
    const double cos_eps = cfg.cos_eps;
    double term = 0.0;
    VectorField unit_bar = make_vector_field(src.dims);
    std::vector<double> sbar(3 * nsz);
    const double coeff = -1.0 / (static_cast<double>(scales) * static_cast<double>(n));
    for (std::size_t sc = 0; sc < scales; ++sc) {
        const double *pa = smoothed[sc].vectors.data();
        const double *pb = target.fields[sc].vectors.data();
        std::fill(sbar.begin(), sbar.end(), 0.0);
        double cos_sum = 0.0;
        for (std::int64_t v = 0; v < n; ++v) {
            const double *a = pa + 3 * v;
            const double *b = pb + 3 * v;
            const double na = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
            const double nb = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
            if (na < cos_eps || nb < cos_eps) continue;
            const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
            const double cosv = dot / (na * nb);
            cos_sum += cosv;
            // d cos/da = b/(na*nb) - cos * a/na^2, scaled by -1/(K*N)
            const double inv_nanb = 1.0 / (na * nb);
            const double inv_na2 = 1.0 / (na * na);
            for (int c = 0; c < 3; ++c)
                sbar[static_cast<std::size_t>(3 * v + c)] =
                    coeff * (b[c] * inv_nanb - cosv * a[c] * inv_na2);
        }
        term += -cos_sum / static_cast<double>(n);

        // back through the Gaussian: transpose pass accumulates into unit_bar
        VectorField scratch = make_vector_field(src.dims);
        gaussian_smooth_adjoint(sbar.data(), scratch.vectors.data(), src.dims, 3,
                                cfg.sigmas[sc]);
        for (std::size_t i = 0; i < unit_bar.vectors.size(); ++i)
            unit_bar.vectors[i] += scratch.vectors[i];
    }
    term /= static_cast<double>(scales);
    check_finite(unit_bar.vectors.data(), 3 * nsz, "similarity cosine");

    // back through normalization: orientation * (I - u u^T)/norm per voxel,
    // zero under the guard; the projector is unchanged by the global flip
    VectorField grad_bar = make_vector_field(src.dims);
    for (std::int64_t v = 0; v < n; ++v) {
        const double norm = norms[static_cast<std::size_t>(v)];
        if (norm < eps) continue;
        const double *u = &unit.vectors[static_cast<std::size_t>(3 * v)];
        const double *ub = &unit_bar.vectors[static_cast<std::size_t>(3 * v)];
        const double proj = u[0] * ub[0] + u[1] * ub[1] + u[2] * ub[2];
        const double inv = static_cast<double>(orientation) / norm;
        double *gb = &grad_bar.vectors[static_cast<std::size_t>(3 * v)];
        for (int c = 0; c < 3; ++c) gb[c] = inv * (ub[c] - proj * u[c]);
    }
    check_finite(grad_bar.vectors.data(), 3 * nsz, "similarity normalize adjoint");

    std::vector<double> warped_bar;
    image_gradient_adjoint(grad_bar, warped_bar);

    accumulate_field_gradient(src, field, warped_bar, weight, grad_out);
    return term;
}

// Forward + reverse of the cycle term mean |warp(warp(m,u),v) - m|.
double cycle_term_with_gradient(const Volume &moving, const DisplacementField &u,
                                const DisplacementField &v, DisplacementField &gu,
                                DisplacementField &gv) {
    const Dims &d = moving.dims;
    const std::int64_t n = voxel_count(d);
    const auto nsz = static_cast<std::size_t>(n);

    const Volume m0 = warp(moving, u);
    const Volume m1 = warp(m0, v);
    check_finite(m1.data.data(), nsz, "cycle warp");

    double value = 0.0;
    std::vector<double> m1_bar(nsz);
    for (std::int64_t i = 0; i < n; ++i) {
        const double r = m1.data[static_cast<std::size_t>(i)] -
                         moving.data[static_cast<std::size_t>(i)];
        value += std::fabs(r);
        m1_bar[static_cast<std::size_t>(i)] =
            (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) / static_cast<double>(n);
    }
    value /= static_cast<double>(n);

    // dV: the second warp samples m0 at x + v(x)
    accumulate_field_gradient(m0, v, m1_bar, 1.0, gv);

    // dU: first push m1_bar back onto the m0 grid, then gather through the
    // first warp
    std::vector<double> m0_bar(nsz, 0.0);
    std::int64_t idx = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++idx) {
                const double w = m1_bar[static_cast<std::size_t>(idx)];
                if (w == 0.0) continue;
                const std::size_t b = static_cast<std::size_t>(3 * idx);
                const Vec3 p{static_cast<double>(i) + v.vectors[b],
                             static_cast<double>(j) + v.vectors[b + 1],
                             static_cast<double>(k) + v.vectors[b + 2]};
                scatter_trilinear(d, p, w, m0_bar);
            }
    accumulate_field_gradient(moving, u, m0_bar, 1.0, gu);
    return value;
}

// d Psi/d field: forward differences, transposed.
double smoothness_with_gradient(const DisplacementField &field, DisplacementField &grad) {
    const Dims &d = field.dims;
    const std::int64_t step[3] = {1, d[0], d[0] * d[1]};
    const double scale = 2.0 / static_cast<double>(field.voxel_count());
    double acc = 0.0;
    std::int64_t v = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++v) {
                const std::int64_t x[3] = {i, j, k};
                for (int a = 0; a < 3; ++a) {
                    if (x[a] == d[a] - 1) continue;
                    const std::size_t here = static_cast<std::size_t>(3 * v);
                    const std::size_t next = static_cast<std::size_t>(3 * (v + step[a]));
                    for (int c = 0; c < 3; ++c) {
                        const double diff = field.vectors[next + c] - field.vectors[here + c];
                        acc += diff * diff;
                        grad.vectors[next + c] += scale * diff;
                        grad.vectors[here + c] -= scale * diff;
                    }
                }
            }
    return acc / static_cast<double>(field.voxel_count());
}

struct SegiCaches {
    const SegiField *fixed_sg = nullptr;  // target of the forward term
    const SegiField *moving_sg = nullptr; // target of the backward term (symmetric only)
};

LossGradients gradient_terms_impl(const Volume &moving, const Volume &fixed,
                                  const DisplacementField &u, const DisplacementField &v,
                                  const RegistrationConfig &cfg, const SegiCaches &caches) {
    LossGradients out;
    out.breakdown.lambda1 = cfg.lambda1;
    out.breakdown.lambda2 = cfg.lambda2;
    out.sg_u = make_field(u.dims, u.spacing);
    out.sg_v = make_field(v.dims, v.spacing);
    out.cc_u = make_field(u.dims, u.spacing);
    out.cc_v = make_field(v.dims, v.spacing);
    out.psi_u = make_field(u.dims, u.spacing);
    out.psi_v = make_field(v.dims, v.spacing);

    const double sim_weight = cfg.symmetric_similarity ? 0.5 : 1.0;
    const double fwd =
        segi_term_with_gradient(moving, u, *caches.fixed_sg, cfg, sim_weight, out.sg_u);
    if (cfg.symmetric_similarity) {
        const double bwd = segi_term_with_gradient(fixed, v, *caches.moving_sg, cfg,
                                                   sim_weight, out.sg_v);
        out.breakdown.l_sg = 0.5 * (fwd + bwd);
    } else {
        out.breakdown.l_sg = fwd;
    }

    out.breakdown.l_cc = cycle_term_with_gradient(moving, u, v, out.cc_u, out.cc_v);
    out.breakdown.psi_u = smoothness_with_gradient(u, out.psi_u);
    out.breakdown.psi_v = smoothness_with_gradient(v, out.psi_v);
    out.breakdown.total = out.breakdown.l_sg + cfg.lambda1 * out.breakdown.l_cc +
                          cfg.lambda2 * (out.breakdown.psi_u + out.breakdown.psi_v);
    return out;
}

} // namespace

LossGradients loss_gradient_terms(const Volume &moving, const Volume &fixed,
                                  const DisplacementField &u, const DisplacementField &v,
                                  const RegistrationConfig &cfg) {
    validate(cfg);
    if (moving.dims != fixed.dims || moving.dims != u.dims || moving.dims != v.dims)
        raise(ErrorCode::dimension_mismatch, "loss_gradient: inputs must share one grid");
    if (!all_finite(u) || !all_finite(v))
        raise(ErrorCode::numeric_failure, "loss_gradient: non-finite displacement input");

    const SegiField fixed_sg = segi(fixed, cfg.sigmas, cfg.grad_eps);
    SegiCaches caches;
    caches.fixed_sg = &fixed_sg;
    SegiField moving_sg;
    if (cfg.symmetric_similarity) {
        moving_sg = segi(moving, cfg.sigmas, cfg.grad_eps);
        caches.moving_sg = &moving_sg;
    }
    return gradient_terms_impl(moving, fixed, u, v, cfg, caches);
}

LossGradient loss_gradient(const Volume &moving, const Volume &fixed,
                           const DisplacementField &u, const DisplacementField &v,
                           const RegistrationConfig &cfg) {
    LossGradients terms = loss_gradient_terms(moving, fixed, u, v, cfg);
    LossGradient out;
    out.breakdown = terms.breakdown;
    out.total = terms.breakdown.total;
    out.d_u = make_field(u.dims, u.spacing);
    out.d_v = make_field(v.dims, v.spacing);
    for (std::size_t i = 0; i < out.d_u.vectors.size(); ++i) {
        out.d_u.vectors[i] = terms.sg_u.vectors[i] + cfg.lambda1 * terms.cc_u.vectors[i] +
                             cfg.lambda2 * terms.psi_u.vectors[i];
        out.d_v.vectors[i] = terms.sg_v.vectors[i] + cfg.lambda1 * terms.cc_v.vectors[i] +
                             cfg.lambda2 * terms.psi_v.vectors[i];
    }
    return out;
}

namespace {

double max_norm3(const std::vector<double> &vectors) {
    double best = 0.0;
    for (std::size_t i = 0; i + 2 < vectors.size(); i += 3) {
        const double n2 = vectors[i] * vectors[i] + vectors[i + 1] * vectors[i + 1] +
                          vectors[i + 2] * vectors[i + 2];
        best = std::max(best, n2);
    }
    return std::sqrt(best);
}

// Per-field optimizer state. Both rules consume the Gaussian-smoothed
// gradient; they differ in how the step is scaled.
struct FieldUpdater {
    std::vector<double> m, v;
    std::int64_t t = 0;
    double peak_ref = 0.0;

    explicit FieldUpdater(std::size_t size) : m(size, 0.0), v(size, 0.0) {}

    // Writes the descent step into `step`.
    void compute_step(const std::vector<double> &g, const RegistrationConfig &cfg,
                      std::vector<double> &step) {
        ++t;
        if (cfg.optimizer == FieldOptimizer::adam) {
            const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (std::size_t i = 0; i < g.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                const double mhat = m[i] / c1;
                const double vhat = v[i] / c2;
                step[i] = cfg.step_size * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
            return;
        }
        // Normalized descent: bias-corrected momentum, scaled against the
        // largest momentum norm seen this level. The running-max gain keeps
        // the biggest voxel move at step_size early on and lets steps decay
        // as the gradient does, so the iteration can settle instead of
        // orbiting the minimum at constant speed.
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
        for (std::size_t i = 0; i < g.size(); ++i)
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        double peak = max_norm3(m) / c1;
        peak_ref = std::max(peak_ref, peak);
        const double scale = peak_ref > 0.0 ? cfg.step_size / (peak_ref * c1) : 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) step[i] = scale * m[i];
    }
};

double max_vector_norm(const DisplacementField &f) { return max_norm3(f.vectors); }

} // namespace

namespace {

Volume presmoothed(const Volume &vol, double sigma) {
    if (sigma <= 0.0) return vol;
    Volume out = vol;
    gaussian_smooth(vol.data.data(), out.data.data(), vol.dims, 1, sigma);
    return out;
}

} // namespace

RegistrationResult register_volumes(const Volume &moving, const Volume &fixed,
                                    const RegistrationConfig &cfg) {
    validate(cfg);
    validate(moving);
    validate(fixed);
    if (moving.kind != VoxelKind::intensity || fixed.kind != VoxelKind::intensity)
        raise(ErrorCode::invalid_argument, "register: intensity volumes required");
    if (moving.dims != fixed.dims)
        raise(ErrorCode::dimension_mismatch,
              "register: moving and fixed must share one grid (resample first)");

    const std::vector<Volume> pyr_m = resample_pyramid(minmax_normalize(moving), cfg.levels);
    const std::vector<Volume> pyr_f = resample_pyramid(minmax_normalize(fixed), cfg.levels);

    // fully specified by the standard, so seeded runs are bit-reproducible
    std::mt19937_64 rng(cfg.seed);
    auto jitter = [&]() -> Vec3 {
        if (cfg.sample_jitter <= 0.0) return {0.0, 0.0, 0.0};
        Vec3 j;
        for (int a = 0; a < 3; ++a) {
            const double unit = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
            j[static_cast<std::size_t>(a)] = cfg.sample_jitter * (2.0 * unit - 1.0);
        }
        return j;
    };

    RegistrationResult result;
    const int coarsest = cfg.levels - 1;
    DisplacementField u = make_field(pyr_m[static_cast<std::size_t>(coarsest)].dims,
                                     pyr_m[static_cast<std::size_t>(coarsest)].spacing);
    DisplacementField v = u;

    for (int level = coarsest; level >= 0; --level) {
        const Volume lm = presmoothed(pyr_m[static_cast<std::size_t>(level)], cfg.presmooth_sigma);
        const Volume lf = presmoothed(pyr_f[static_cast<std::size_t>(level)], cfg.presmooth_sigma);
        if (level != coarsest) {
            u = upsample_doubled(u, lm.dims, lm.spacing);
            v = upsample_doubled(v, lm.dims, lm.spacing);
        }

        const SegiField fixed_sg = segi(lf, cfg.sigmas, cfg.grad_eps);
        SegiField moving_sg;
        SegiCaches caches;
        caches.fixed_sg = &fixed_sg;
        if (cfg.symmetric_similarity) {
            moving_sg = segi(lm, cfg.sigmas, cfg.grad_eps);
            caches.moving_sg = &moving_sg;
        }

        FieldUpdater updater_u(u.vectors.size());
        FieldUpdater updater_v(v.vectors.size());
        std::vector<double> gu(u.vectors.size());
        std::vector<double> gv(v.vectors.size());
        std::vector<double> step(u.vectors.size());
        std::vector<double> smoothed(u.vectors.size());
        DisplacementField u_eval = u;
        DisplacementField v_eval = v;
        DisplacementField sg_u = make_field(u.dims, u.spacing);
        DisplacementField sg_v = make_field(v.dims, v.spacing);
        DisplacementField cc_u = make_field(u.dims, u.spacing);
        DisplacementField cc_v = make_field(v.dims, v.spacing);
        DisplacementField psi_u = make_field(u.dims, u.spacing);
        DisplacementField psi_v = make_field(v.dims, v.spacing);

        // smooth the raw gradient for spatial coherence, then let the update
        // rule scale it into a step
        auto apply_step = [&](FieldUpdater &updater, std::vector<double> &g,
                              std::vector<double> &field) {
            const double *grad = g.data();
            if (cfg.update_sigma > 0.0) {
                gaussian_smooth(g.data(), smoothed.data(), lm.dims, 3, cfg.update_sigma);
                grad = smoothed.data();
                g.swap(smoothed);
            }
            (void)grad;
            updater.compute_step(g, cfg, step);
            for (std::size_t i = 0; i < field.size(); ++i) field[i] -= step[i];
        };

        for (int iter = 0; iter < cfg.iters_per_level; ++iter) {
            // The similarity gradient is taken at a dithered copy of each
            // field: its lattice-locked interpolation wiggles average out
            // under the momentum. The cycle term measures a round trip, which
            // a net dither offset would corrupt, so it and the smoothness
            // term differentiate the undithered fields.
            const Vec3 ju = jitter();
            const Vec3 jv = jitter();
            for (std::size_t i = 0; i < u.vectors.size(); i += 3)
                for (std::size_t c = 0; c < 3; ++c) {
                    u_eval.vectors[i + c] = u.vectors[i + c] + ju[c];
                    v_eval.vectors[i + c] = v.vectors[i + c] + jv[c];
                }

            const double sim_weight = cfg.symmetric_similarity ? 0.5 : 1.0;
            std::fill(sg_u.vectors.begin(), sg_u.vectors.end(), 0.0);
            std::fill(sg_v.vectors.begin(), sg_v.vectors.end(), 0.0);
            double l_sg = segi_term_with_gradient(lm, u_eval, *caches.fixed_sg, cfg,
                                                  sim_weight, sg_u);
            if (cfg.symmetric_similarity) {
                const double bwd = segi_term_with_gradient(lf, v_eval, *caches.moving_sg, cfg,
                                                           sim_weight, sg_v);
                l_sg = 0.5 * (l_sg + bwd);
            }

            std::fill(cc_u.vectors.begin(), cc_u.vectors.end(), 0.0);
            std::fill(cc_v.vectors.begin(), cc_v.vectors.end(), 0.0);
            const double l_cc = cycle_term_with_gradient(lm, u, v, cc_u, cc_v);
            std::fill(psi_u.vectors.begin(), psi_u.vectors.end(), 0.0);
            std::fill(psi_v.vectors.begin(), psi_v.vectors.end(), 0.0);
            const double p_u = smoothness_with_gradient(u, psi_u);
            const double p_v = smoothness_with_gradient(v, psi_v);

            TraceRecord rec;
            rec.level = level;
            rec.iteration = iter;
            rec.loss.l_sg = l_sg;
            rec.loss.l_cc = l_cc;
            rec.loss.psi_u = p_u;
            rec.loss.psi_v = p_v;
            rec.loss.lambda1 = cfg.lambda1;
            rec.loss.lambda2 = cfg.lambda2;
            rec.loss.total = l_sg + cfg.lambda1 * l_cc + cfg.lambda2 * (p_u + p_v);
            rec.max_displacement = std::max(max_vector_norm(u), max_vector_norm(v));
            rec.step_size = cfg.step_size;
            result.trace.records.push_back(rec);

            if (!std::isfinite(rec.loss.total))
                throw DivergedError("register: total loss became non-finite at level " +
                                        std::to_string(level) + " iteration " +
                                        std::to_string(iter),
                                    result.trace);

            for (std::size_t i = 0; i < gu.size(); ++i) {
                gu[i] = sg_u.vectors[i] + cfg.lambda1 * cc_u.vectors[i] +
                        cfg.lambda2 * psi_u.vectors[i];
                gv[i] = sg_v.vectors[i] + cfg.lambda1 * cc_v.vectors[i] +
                        cfg.lambda2 * psi_v.vectors[i];
            }
            apply_step(updater_u, gu, u.vectors);
            apply_step(updater_v, gv, v.vectors);
        }
    }

    validate(u);
    validate(v);
    result.forward = std::move(u);
    result.backward = std::move(v);
    return result;
}

} // namespace sgreg
