#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sgreg/error.hpp"

namespace sgreg {

using Dims = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

enum class VoxelKind { intensity, label };

inline std::int64_t voxel_count(const Dims &d) { return d[0] * d[1] * d[2]; }

/// Scalar 3-D grid with voxel spacing (mm) and origin (mm).
/// Axis 0 is fastest in memory: index(i,j,k) = i + nx*(j + ny*k).
/// Label-kind volumes hold nonnegative integer values.
struct Volume {
    Dims dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    VoxelKind kind = VoxelKind::intensity;
    std::vector<double> data;

    std::int64_t voxel_count() const { return sgreg::voxel_count(dims); }

    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
    }
    double at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return data[index(i, j, k)];
    }
    double &at(std::int64_t i, std::int64_t j, std::int64_t k) {
        return data[index(i, j, k)];
    }
};

/// Per-voxel 3-vector displacement in VOXEL units, on the grid it displaces.
/// Component fastest: vectors[3*voxel + c].
struct DisplacementField {
    Dims dims{0, 0, 0};
    Vec3 spacing{1.0, 1.0, 1.0};
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

Volume make_volume(const Dims &dims, VoxelKind kind = VoxelKind::intensity,
                   double fill = 0.0, const Vec3 &spacing = {1, 1, 1},
                   const Vec3 &origin = {0, 0, 0});
DisplacementField make_field(const Dims &dims, const Vec3 &spacing = {1, 1, 1});

/// Throws on violated invariants (size mismatch, nonpositive spacing,
/// non-integer label values).
void validate(const Volume &vol);
void validate(const DisplacementField &field);

bool all_finite(const DisplacementField &field);

/// Trilinear interpolation at a continuous voxel coordinate. Coordinates are
/// clamped per axis to [0, dim-1] (border replicate). Intensity volumes only.
double trilinear_sample(const Volume &vol, const Vec3 &p);

/// Nearest-neighbor sample with the same clamping; used for label volumes.
double nearest_sample(const Volume &vol, const Vec3 &p);

struct SampleGrad {
    double value;
    Vec3 grad; // d(value)/dp; zero along axes where the clamp saturates
};
SampleGrad trilinear_sample_grad(const Volume &vol, const Vec3 &p);

/// Clamped interpolation cell of a continuous coordinate: lower/upper corner
/// indices and the fractional offset per axis.
struct InterpCell {
    std::array<std::int64_t, 3> lo;
    std::array<std::int64_t, 3> hi;
    Vec3 frac;
};
InterpCell interp_cell(const Dims &dims, const Vec3 &p);

/// out(x) = vol(x + ddf(x)); trilinear for intensity, nearest for labels.
Volume warp(const Volume &vol, const DisplacementField &ddf);

/// W with (I o u) o v == I o W: W(x) = v(x) + u sampled at x + v(x).
DisplacementField compose(const DisplacementField &u, const DisplacementField &v);

/// Level 0 is the input; each next level is Gaussian-presmoothed (sigma = 1
/// voxel) and subsampled by 2 per axis, spacing doubled. Intensity volumes
/// only; every dim of the coarsest level must be >= 4.
std::vector<Volume> resample_pyramid(const Volume &vol, int levels);

/// Trilinear upsampling of a coarse field onto `target` dims with vector
/// magnitudes scaled by 2 (coarse voxel c maps to fine voxel 2c).
DisplacementField upsample_doubled(const DisplacementField &coarse, const Dims &target,
                                   const Vec3 &target_spacing);

/// Regrid vol onto ref's grid through world (mm) coordinates.
Volume resample_to(const Volume &vol, const Volume &ref);

/// Affine rescale of intensities to [0,1]; constant volumes map to all zeros.
Volume minmax_normalize(const Volume &vol);

} // namespace sgreg
