#pragma once

#include <cstdint>
#include <vector>

#include "sgreg/losses.hpp"
#include "sgreg/volume.hpp"

namespace sgreg {

/// Field-update rules. The displacement gradient scales with local image
/// evidence; normalized_descent preserves that structure (momentum on the
/// smoothed gradient, step scaled so the largest voxel moves step_size).
/// Adam's per-component moment normalization is kept selectable for
/// comparison, but it erases the magnitude structure and stalls or drifts on
/// dense fields.
enum class FieldOptimizer { normalized_descent, adam };

struct RegistrationConfig {
    std::vector<double> sigmas{1.0, 1.5, 3.0};
    double lambda1 = 0.1;
    double lambda2 = 1.0;
    int levels = 3;
    int iters_per_level = 200;
    FieldOptimizer optimizer = FieldOptimizer::normalized_descent;
    double step_size = 0.05; // max voxel move per iteration (Adam: alpha), voxels
    double beta1 = 0.9;      // momentum in both update rules
    double beta2 = 0.999;    // Adam only
    double adam_eps = 1e-8;  // Adam only
    double grad_eps = 1e-6; // zero-gradient guard in normalize_gradient
    double cos_eps = 1e-2;  // norm floor in the cosine reduction
    // Gaussian preconditioning of the update field (voxels, 0 disables).
    // Raw per-voxel steps are spatially incoherent and stall in bad minima;
    // smoothing the descent direction is the standard dense-registration
    // remedy and does not change the objective or its reported gradients.
    double update_sigma = 1.0;
    // Per-level Gaussian presmoothing of both intensity volumes before the
    // loss pipeline (voxels, 0 disables). Resampling a crisp edge produces
    // lattice-locked metric artifacts that dominate the subvoxel gradient.
    double presmooth_sigma = 1.0;
    // Amplitude of the seeded per-iteration dither of both fields during
    // gradient evaluation (voxels, 0 disables). Interpolation wiggles in the
    // similarity are phase-locked to the voxel lattice; jittering the
    // evaluation point and letting momentum average makes the large-scale
    // slope visible to the per-voxel updates.
    double sample_jitter = 0.5;
    bool symmetric_similarity = false;
    std::uint64_t seed = 0;
};

/// Throws on invalid settings (empty/nonpositive sigmas, negative lambdas,
/// levels/iters below 1, nonpositive step size).
void validate(const RegistrationConfig &cfg);

struct TraceRecord {
    int level = 0;
    int iteration = 0;
    LossBreakdown loss;
    double max_displacement = 0.0; // max vector norm over both fields, voxels
    double step_size = 0.0;
};

struct OptimizationTrace {
    std::vector<TraceRecord> records;
};

/// Registration diverged (non-finite total loss); carries the trace up to the
/// failing iteration.
class DivergedError : public Error {
public:
    DivergedError(const std::string &what, OptimizationTrace trace)
        : Error(ErrorCode::numeric_failure, what), trace_(std::move(trace)) {}
    const OptimizationTrace &trace() const noexcept { return trace_; }

private:
    OptimizationTrace trace_;
};

/// Per-term gradients of the objective; the similarity term has a nonzero
/// d/dV part only under symmetric_similarity.
struct LossGradients {
    LossBreakdown breakdown;
    DisplacementField sg_u, sg_v;
    DisplacementField cc_u, cc_v;
    DisplacementField psi_u, psi_v; // d Psi(u)/du and d Psi(v)/dv
};

/// Reverse-mode gradients through warp -> central differences ->
/// normalization -> Gaussian smoothing -> cosine reduction, plus the cycle
/// and smoothness adjoints. Every stage output is checked finite; a
/// non-finite intermediate raises an error naming the stage.
LossGradients loss_gradient_terms(const Volume &moving, const Volume &fixed,
                                  const DisplacementField &u,
                                  const DisplacementField &v,
                                  const RegistrationConfig &cfg);

struct LossGradient {
    double total = 0.0;
    LossBreakdown breakdown;
    DisplacementField d_u;
    DisplacementField d_v;
};

/// Eq-10-style combination of the term gradients with cfg's lambdas.
LossGradient loss_gradient(const Volume &moving, const Volume &fixed,
                           const DisplacementField &u, const DisplacementField &v,
                           const RegistrationConfig &cfg);

struct RegistrationResult {
    DisplacementField forward;  // resamples moving toward fixed
    DisplacementField backward; // resamples fixed toward moving
    OptimizationTrace trace;
};

/// Joint coarse-to-fine Adam descent on both dense fields. Inputs must share
/// one grid; intensities are min-max normalized to [0,1] internally.
/// Deterministic: repeated runs produce bit-identical fields and traces.
RegistrationResult register_volumes(const Volume &moving, const Volume &fixed,
                                    const RegistrationConfig &cfg);

} // namespace sgreg
