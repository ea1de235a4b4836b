#pragma once

#include <vector>

#include "sgreg/volume.hpp"

namespace sgreg {

constexpr double kDefaultGradEps = 1e-6;

/// Floor on smoothed-field norms inside the cosine reduction. Well above
/// kDefaultGradEps on purpose: a smoothed unit-gradient field whose norm is
/// below ~1e-2 is cancellation residue whose direction is noise, and
/// 1/norm factors in the loss gradient would otherwise spike by orders of
/// magnitude there.
constexpr double kDefaultCosEps = 1e-2;

/// Per-voxel 3-vector field without grid metadata (gradients, unit-gradient
/// fields and their smoothed versions). Component fastest, like
/// DisplacementField.
struct VectorField {
    Dims dims{0, 0, 0};
    std::vector<double> vectors;

    std::int64_t voxel_count() const { return sgreg::voxel_count(dims); }

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
    }
    Vec3 at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        const std::size_t b = 3 * index(i, j, k);
        return {vectors[b], vectors[b + 1], vectors[b + 2]};
    }
};

/// One smoothed unit-gradient field per scale, all sharing dims.
struct SegiField {
    std::vector<double> sigmas;
    std::vector<VectorField> fields;
};

VectorField make_vector_field(const Dims &dims);

/// Central differences at interior voxels, one-sided at the two boundary
/// slices per axis; derivatives are per voxel step. Requires every dim >= 2.
VectorField image_gradient(const Volume &vol);

/// Unit-normalizes each vector; vectors with norm below eps become zero.
/// The whole field is then flipped, if needed, onto a canonical global
/// orientation (net-inward flux, falling back to a positive component sum),
/// so any strictly monotone intensity remap, increasing or decreasing,
/// produces the identical field while the per-voxel geometry keeps its full
/// inward/outward structure.
VectorField normalize_gradient(const VectorField &g, double eps = kDefaultGradEps);

/// Canonical global orientation of a unit-gradient field: -1 when the whole
/// field must be negated, +1 when it is already canonical.
int field_orientation_sign(const VectorField &unit);

/// Each component convolved with a separable Gaussian (stddev sigma in voxel
/// units, radius ceil(3*sigma), clamp-to-edge).
VectorField gaussian_smooth_field(const VectorField &f, double sigma);

/// smooth(normalize(gradient(vol))) per sigma, in the given sigma order.
SegiField segi(const Volume &vol, const std::vector<double> &sigmas,
               double eps = kDefaultGradEps);

/// (1/K) sum_k of -(1/|Omega|) sum_x cos(a_k(x), b_k(x)).
/// cos(A,B) = A.B/(|A||B|), taken as 0 when either norm is below eps.
/// Result lies in [-1, 1]; -1 means perfectly aligned fields.
double segi_loss(const SegiField &a, const SegiField &b,
                 double eps = kDefaultCosEps);

} // namespace sgreg
