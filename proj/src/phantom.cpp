#include "sgreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace sgreg {

namespace {

// mt19937_64 is fully specified by the standard; the Box-Muller transform
// below keeps the draw sequence independent of library distribution
// internals, so seeded phantoms are bit-reproducible.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

private:
    double uniform() { // [0, 1)
        return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    }
    std::mt19937_64 rng_;
};

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// 2-voxel transition band: exactly 0 one voxel outside the surface, exactly 1
// one voxel inside. SEGI needs resolvable edges; hard edges alias under
// warping.
double edge_profile(double inside_dist) {
    return smoothstep01(0.5 * (inside_dist + 1.0));
}

struct ShapeSample {
    double inside_dist; // positive inside the union
    std::int64_t label; // 0 outside
};

ShapeSample sample_shape(const PhantomSpec &spec, const Vec3 &x) {
    const Vec3 c{0.5 * static_cast<double>(spec.dims[0] - 1),
                 0.5 * static_cast<double>(spec.dims[1] - 1),
                 0.5 * static_cast<double>(spec.dims[2] - 1)};
    const double min_dim = static_cast<double>(std::min({spec.dims[0], spec.dims[1], spec.dims[2]}));

    auto sphere_dist = [&](const Vec3 &center, double radius) {
        const double dx = x[0] - center[0];
        const double dy = x[1] - center[1];
        const double dz = x[2] - center[2];
        return radius - std::sqrt(dx * dx + dy * dy + dz * dz);
    };

    switch (spec.shape) {
    case PhantomShape::sphere: {
        const double d = sphere_dist(c, 0.30 * min_dim);
        return {d, d > 0.0 ? 1 : 0};
    }
    case PhantomShape::two_spheres: {
        const double r = 0.18 * min_dim;
        const double off = 0.24 * static_cast<double>(spec.dims[0]);
        const double d1 = sphere_dist({c[0] - off, c[1], c[2]}, r);
        const double d2 = sphere_dist({c[0] + off, c[1], c[2]}, r);
        const double d = std::max(d1, d2);
        std::int64_t label = 0;
        if (d > 0.0) label = d1 >= d2 ? 1 : 2;
        return {d, label};
    }
    case PhantomShape::cuboid_with_notch: {
        const Vec3 half{0.30 * static_cast<double>(spec.dims[0]),
                        0.30 * static_cast<double>(spec.dims[1]),
                        0.30 * static_cast<double>(spec.dims[2])};
        double box = half[0] - std::fabs(x[0] - c[0]);
        box = std::min(box, half[1] - std::fabs(x[1] - c[1]));
        box = std::min(box, half[2] - std::fabs(x[2] - c[2]));
        // notch cut into the +x face, central third of the face
        const double notch_depth = 0.5 * half[0];
        double notch = x[0] - (c[0] + half[0] - notch_depth);
        notch = std::min(notch, half[1] / 3.0 - std::fabs(x[1] - c[1]));
        notch = std::min(notch, half[2] / 3.0 - std::fabs(x[2] - c[2]));
        const double d = std::min(box, -notch);
        return {d, d > 0.0 ? 1 : 0};
    }
    }
    raise(ErrorCode::invalid_argument, "phantom: unknown shape");
}

Vec3 deformation_at(const PhantomSpec &spec, const Vec3 &center, const Vec3 &x) {
    switch (spec.deformation) {
    case DeformationKind::zero:
        return {0.0, 0.0, 0.0};
    case DeformationKind::translation:
        return spec.translation;
    case DeformationKind::gaussian_bump: {
        const double dx = x[0] - center[0];
        const double dy = x[1] - center[1];
        const double dz = x[2] - center[2];
        const double g = std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) /
                                  (spec.bump_sigma * spec.bump_sigma));
        return {spec.bump_amplitude[0] * g, spec.bump_amplitude[1] * g,
                spec.bump_amplitude[2] * g};
    }
    }
    raise(ErrorCode::invalid_argument, "phantom: unknown deformation");
}

double apply_remap(ModalityRemap remap, double v) {
    switch (remap) {
    case ModalityRemap::identity:
        return v;
    case ModalityRemap::invert:
        return 1.0 - v;
    case ModalityRemap::square:
        return v * v;
    case ModalityRemap::piecewise_monotone:
        if (v < 0.3) return 0.5 * v;
        if (v < 0.7) return 0.15 + 1.75 * (v - 0.3);
        return 0.85 + 0.5 * (v - 0.7);
    case ModalityRemap::contrast_fold:
        return v <= 0.5 ? 2.0 * v : 2.0 * (1.0 - v);
    }
    raise(ErrorCode::invalid_argument, "phantom: unknown remap");
}

} // namespace

PhantomPair generate_pair(const PhantomSpec &spec) {
    if (spec.dims[0] < 8 || spec.dims[1] < 8 || spec.dims[2] < 8)
        raise(ErrorCode::invalid_argument, "phantom: dims must be at least 8 per axis");
    if (spec.noise_sigma < 0.0)
        raise(ErrorCode::invalid_argument, "phantom: noise_sigma must be nonnegative");

    Vec3 bump_center = spec.bump_center;
    if (bump_center[0] == 0.0 && bump_center[1] == 0.0 && bump_center[2] == 0.0)
        bump_center = {0.5 * static_cast<double>(spec.dims[0] - 1),
                       0.5 * static_cast<double>(spec.dims[1] - 1),
                       0.5 * static_cast<double>(spec.dims[2] - 1)};

    if (spec.deformation == DeformationKind::gaussian_bump) {
        if (!(spec.bump_sigma > 0.0))
            raise(ErrorCode::invalid_argument, "phantom: bump_sigma must be positive");
        // max |dW_c/dx| of an isotropic Gaussian profile is |a_c| e^{-1/2} / sigma
        const double max_amp = std::max({std::fabs(spec.bump_amplitude[0]),
                                         std::fabs(spec.bump_amplitude[1]),
                                         std::fabs(spec.bump_amplitude[2])});
        const double max_slope = max_amp * std::exp(-0.5) / spec.bump_sigma;
        if (max_slope >= 1.0)
            raise(ErrorCode::invalid_argument,
                  "phantom: gaussian bump folds (max |dW/dx| = " + std::to_string(max_slope) +
                      " >= 1); lower the amplitude or widen the bump");
    }

    Volume base = make_volume(spec.dims, VoxelKind::intensity, 0.0, spec.spacing);
    Volume fixed_label = make_volume(spec.dims, VoxelKind::label, 0.0, spec.spacing);
    DisplacementField truth = make_field(spec.dims, spec.spacing);

    std::size_t n = 0;
    for (std::int64_t k = 0; k < spec.dims[2]; ++k)
        for (std::int64_t j = 0; j < spec.dims[1]; ++j)
            for (std::int64_t i = 0; i < spec.dims[0]; ++i, ++n) {
                const Vec3 x{static_cast<double>(i), static_cast<double>(j),
                             static_cast<double>(k)};
                const ShapeSample s = sample_shape(spec, x);
                base.data[n] = edge_profile(s.inside_dist);
                fixed_label.data[n] = static_cast<double>(s.label);
                const Vec3 w = deformation_at(spec, bump_center, x);
                truth.vectors[3 * n] = w[0];
                truth.vectors[3 * n + 1] = w[1];
                truth.vectors[3 * n + 2] = w[2];
            }

    PhantomPair pair;
    pair.moving = warp(base, truth);
    for (double &v : pair.moving.data) v = apply_remap(spec.remap, v);
    pair.moving_label = warp(fixed_label, truth);

    pair.fixed = base;
    if (spec.noise_sigma > 0.0) {
        GaussianSampler noise(spec.seed);
        for (double &v : pair.fixed.data) v += spec.noise_sigma * noise();
    }
    pair.fixed_label = std::move(fixed_label);
    pair.truth = std::move(truth);
    return pair;
}

double endpoint_error(const DisplacementField &estimate, const DisplacementField &truth,
                      const Volume &mask) {
    if (estimate.dims != truth.dims || estimate.dims != mask.dims)
        raise(ErrorCode::dimension_mismatch, "endpoint_error: grids differ");
    double sum = 0.0;
    std::int64_t count = 0;
    const std::int64_t n = mask.voxel_count();
    for (std::int64_t v = 0; v < n; ++v) {
        if (!(mask.data[static_cast<std::size_t>(v)] > 0.0)) continue;
        const std::size_t b = static_cast<std::size_t>(3 * v);
        const double dx = estimate.vectors[b] - truth.vectors[b];
        const double dy = estimate.vectors[b + 1] - truth.vectors[b + 1];
        const double dz = estimate.vectors[b + 2] - truth.vectors[b + 2];
        sum += std::sqrt(dx * dx + dy * dy + dz * dz);
        ++count;
    }
    if (count == 0)
        raise(ErrorCode::empty_structure, "endpoint_error: empty mask");
    return sum / static_cast<double>(count);
}

} // namespace sgreg
