#include "sgreg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sgreg/filtering.hpp"

namespace sgreg {

namespace {

std::string dims_str(const Dims &d) {
    return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

void require_same_grid(const Dims &a, const Dims &b, const char *op) {
    if (a != b) {
        raise(ErrorCode::dimension_mismatch,
              std::string(op) + ": grids differ, " + dims_str(a) + " vs " + dims_str(b));
    }
}

double clamp_coord(double x, std::int64_t n) {
    return std::clamp(x, 0.0, static_cast<double>(n - 1));
}

inline double lerp(double a, double b, double f) { return a + f * (b - a); }

} // namespace

Volume make_volume(const Dims &dims, VoxelKind kind, double fill,
                   const Vec3 &spacing, const Vec3 &origin) {
    Volume v;
    v.dims = dims;
    v.spacing = spacing;
    v.origin = origin;
    v.kind = kind;
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
        raise(ErrorCode::invalid_argument, "make_volume: dims must be positive, got " + dims_str(dims));
    v.data.assign(static_cast<std::size_t>(v.voxel_count()), fill);
    return v;
}

DisplacementField make_field(const Dims &dims, const Vec3 &spacing) {
    DisplacementField f;
    f.dims = dims;
    f.spacing = spacing;
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
        raise(ErrorCode::invalid_argument, "make_field: dims must be positive, got " + dims_str(dims));
    f.vectors.assign(static_cast<std::size_t>(3 * f.voxel_count()), 0.0);
    return f;
}

void validate(const Volume &vol) {
    if (vol.dims[0] < 1 || vol.dims[1] < 1 || vol.dims[2] < 1)
        raise(ErrorCode::invalid_argument, "volume: nonpositive dims " + dims_str(vol.dims));
    if (vol.data.size() != static_cast<std::size_t>(vol.voxel_count()))
        raise(ErrorCode::invalid_argument,
              "volume: data length " + std::to_string(vol.data.size()) +
                  " does not match dims " + dims_str(vol.dims));
    for (int a = 0; a < 3; ++a)
        if (!(vol.spacing[a] > 0.0))
            raise(ErrorCode::invalid_argument, "volume: spacing must be strictly positive");
    if (vol.kind == VoxelKind::label) {
        for (double v : vol.data)
            if (!(v >= 0.0) || v != std::floor(v))
                raise(ErrorCode::invalid_argument,
                      "volume: label values must be nonnegative integers, got " + std::to_string(v));
    }
}

void validate(const DisplacementField &field) {
    if (field.vectors.size() != static_cast<std::size_t>(3 * field.voxel_count()))
        raise(ErrorCode::invalid_argument,
              "field: vector count does not match dims " + dims_str(field.dims));
    if (!all_finite(field))
        raise(ErrorCode::numeric_failure, "field: non-finite displacement component");
}

bool all_finite(const DisplacementField &field) {
    for (double v : field.vectors)
        if (!std::isfinite(v)) return false;
    return true;
}

InterpCell interp_cell(const Dims &dims, const Vec3 &p) {
    InterpCell cell;
    for (int a = 0; a < 3; ++a) {
        const double q = clamp_coord(p[a], dims[a]);
        std::int64_t lo = static_cast<std::int64_t>(std::floor(q));
        lo = std::clamp<std::int64_t>(lo, 0, std::max<std::int64_t>(dims[a] - 2, 0));
        cell.lo[a] = lo;
        cell.hi[a] = std::min(lo + 1, dims[a] - 1);
        cell.frac[a] = dims[a] > 1 ? q - static_cast<double>(lo) : 0.0;
    }
    return cell;
}

double trilinear_sample(const Volume &vol, const Vec3 &p) {
    return trilinear_sample_grad(vol, p).value;
}

SampleGrad trilinear_sample_grad(const Volume &vol, const Vec3 &p) {
    if (vol.kind != VoxelKind::intensity)
        raise(ErrorCode::invalid_argument, "trilinear_sample: label volumes use nearest_sample");
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        raise(ErrorCode::invalid_argument, "trilinear_sample: non-finite coordinate");

    const Dims &d = vol.dims;
    const InterpCell cell = interp_cell(d, p);
    const double *f = cell.frac.data();
    bool interior[3];
    for (int a = 0; a < 3; ++a)
        interior[a] = p[a] > 0.0 && p[a] < static_cast<double>(d[a] - 1);

    const std::int64_t i0 = cell.lo[0], j0 = cell.lo[1], k0 = cell.lo[2];
    const std::int64_t i1 = cell.hi[0], j1 = cell.hi[1], k1 = cell.hi[2];

    const double c000 = vol.at(i0, j0, k0);
    const double c100 = vol.at(i1, j0, k0);
    const double c010 = vol.at(i0, j1, k0);
    const double c110 = vol.at(i1, j1, k0);
    const double c001 = vol.at(i0, j0, k1);
    const double c101 = vol.at(i1, j0, k1);
    const double c011 = vol.at(i0, j1, k1);
    const double c111 = vol.at(i1, j1, k1);

    // Factored lerps keep constants exact and integer nodes bit-identical.
    const double c00 = lerp(c000, c100, f[0]);
    const double c10 = lerp(c010, c110, f[0]);
    const double c01 = lerp(c001, c101, f[0]);
    const double c11 = lerp(c011, c111, f[0]);
    const double c0 = lerp(c00, c10, f[1]);
    const double c1 = lerp(c01, c11, f[1]);

    SampleGrad out;
    out.value = lerp(c0, c1, f[2]);

    const double gx0 = lerp(c100 - c000, c110 - c010, f[1]);
    const double gx1 = lerp(c101 - c001, c111 - c011, f[1]);
    out.grad[0] = interior[0] ? lerp(gx0, gx1, f[2]) : 0.0;

    const double gy0 = lerp(c010 - c000, c110 - c100, f[0]);
    const double gy1 = lerp(c011 - c001, c111 - c101, f[0]);
    out.grad[1] = interior[1] ? lerp(gy0, gy1, f[2]) : 0.0;

    const double gz0 = lerp(c001 - c000, c101 - c100, f[0]);
    const double gz1 = lerp(c011 - c010, c111 - c110, f[0]);
    out.grad[2] = interior[2] ? lerp(gz0, gz1, f[1]) : 0.0;
    return out;
}

double nearest_sample(const Volume &vol, const Vec3 &p) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2]))
        raise(ErrorCode::invalid_argument, "nearest_sample: non-finite coordinate");
    std::int64_t idx[3];
    for (int a = 0; a < 3; ++a) {
        const double q = clamp_coord(p[a], vol.dims[a]);
        idx[a] = std::llround(q);
        idx[a] = std::clamp<std::int64_t>(idx[a], 0, vol.dims[a] - 1);
    }
    return vol.at(idx[0], idx[1], idx[2]);
}

Volume warp(const Volume &vol, const DisplacementField &ddf) {
    require_same_grid(vol.dims, ddf.dims, "warp");
    Volume out = vol;
    const bool nearest = vol.kind == VoxelKind::label;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < vol.dims[2]; ++k)
        for (std::int64_t j = 0; j < vol.dims[1]; ++j)
            for (std::int64_t i = 0; i < vol.dims[0]; ++i, ++n) {
                const std::size_t b = 3 * n;
                const Vec3 p{static_cast<double>(i) + ddf.vectors[b],
                             static_cast<double>(j) + ddf.vectors[b + 1],
                             static_cast<double>(k) + ddf.vectors[b + 2]};
                out.data[n] = nearest ? nearest_sample(vol, p) : trilinear_sample(vol, p);
            }
    return out;
}

DisplacementField compose(const DisplacementField &u, const DisplacementField &v) {
    require_same_grid(u.dims, v.dims, "compose");
    DisplacementField w = make_field(u.dims, u.spacing);
    const Dims &d = u.dims;

    // Sample one component of u trilinearly at a clamped coordinate.
    auto sample_u = [&](const Vec3 &p, int c) {
        const InterpCell cell = interp_cell(d, p);
        const double *f = cell.frac.data();
        auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
            return u.vectors[3 * u.index(i, j, k) + c];
        };
        const std::int64_t i0 = cell.lo[0], j0 = cell.lo[1], k0 = cell.lo[2];
        const std::int64_t i1 = cell.hi[0], j1 = cell.hi[1], k1 = cell.hi[2];
        const double c00 = lerp(at(i0, j0, k0), at(i1, j0, k0), f[0]);
        const double c10 = lerp(at(i0, j1, k0), at(i1, j1, k0), f[0]);
        const double c01 = lerp(at(i0, j0, k1), at(i1, j0, k1), f[0]);
        const double c11 = lerp(at(i0, j1, k1), at(i1, j1, k1), f[0]);
        return lerp(lerp(c00, c10, f[1]), lerp(c01, c11, f[1]), f[2]);
    };

    std::size_t n = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++n) {
                const std::size_t b = 3 * n;
                const Vec3 p{static_cast<double>(i) + v.vectors[b],
                             static_cast<double>(j) + v.vectors[b + 1],
                             static_cast<double>(k) + v.vectors[b + 2]};
                for (int c = 0; c < 3; ++c)
                    w.vectors[b + c] = v.vectors[b + c] + sample_u(p, c);
            }
    validate(w);
    return w;
}

std::vector<Volume> resample_pyramid(const Volume &vol, int levels) {
    if (levels < 1)
        raise(ErrorCode::invalid_argument, "resample_pyramid: levels must be >= 1");
    if (vol.kind != VoxelKind::intensity)
        raise(ErrorCode::invalid_argument, "resample_pyramid: intensity volumes only");

    // ceil-halving per level; reject before doing any work
    Dims d = vol.dims;
    for (int l = 1; l < levels; ++l)
        for (int a = 0; a < 3; ++a) d[a] = (d[a] + 1) / 2;
    if (d[0] < 4 || d[1] < 4 || d[2] < 4)
        raise(ErrorCode::invalid_argument,
              "resample_pyramid: volume " + dims_str(vol.dims) + " too small for " +
                  std::to_string(levels) + " levels (coarsest " + dims_str(d) + ", need >= 4)");

    std::vector<Volume> pyr;
    pyr.reserve(static_cast<std::size_t>(levels));
    pyr.push_back(vol);
    for (int l = 1; l < levels; ++l) {
        const Volume &prev = pyr.back();
        Volume smoothed = prev;
        gaussian_smooth(prev.data.data(), smoothed.data.data(), prev.dims, 1, 1.0);

        Dims nd;
        for (int a = 0; a < 3; ++a) nd[a] = (prev.dims[a] + 1) / 2;
        Volume next = make_volume(nd, VoxelKind::intensity, 0.0,
                                  {prev.spacing[0] * 2, prev.spacing[1] * 2, prev.spacing[2] * 2},
                                  prev.origin);
        for (std::int64_t k = 0; k < nd[2]; ++k)
            for (std::int64_t j = 0; j < nd[1]; ++j)
                for (std::int64_t i = 0; i < nd[0]; ++i)
                    next.at(i, j, k) = smoothed.at(2 * i, 2 * j, 2 * k);
        pyr.push_back(std::move(next));
    }
    return pyr;
}

DisplacementField upsample_doubled(const DisplacementField &coarse, const Dims &target,
                                   const Vec3 &target_spacing) {
    DisplacementField fine = make_field(target, target_spacing);
    const Dims &cd = coarse.dims;

    auto sample = [&](const Vec3 &p, int c) {
        const InterpCell cell = interp_cell(cd, p);
        const double *f = cell.frac.data();
        auto at = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
            return coarse.vectors[3 * coarse.index(i, j, k) + c];
        };
        const std::int64_t i0 = cell.lo[0], j0 = cell.lo[1], k0 = cell.lo[2];
        const std::int64_t i1 = cell.hi[0], j1 = cell.hi[1], k1 = cell.hi[2];
        const double c00 = lerp(at(i0, j0, k0), at(i1, j0, k0), f[0]);
        const double c10 = lerp(at(i0, j1, k0), at(i1, j1, k0), f[0]);
        const double c01 = lerp(at(i0, j0, k1), at(i1, j0, k1), f[0]);
        const double c11 = lerp(at(i0, j1, k1), at(i1, j1, k1), f[0]);
        return lerp(lerp(c00, c10, f[1]), lerp(c01, c11, f[1]), f[2]);
    };

    std::size_t n = 0;
    for (std::int64_t k = 0; k < target[2]; ++k)
        for (std::int64_t j = 0; j < target[1]; ++j)
            for (std::int64_t i = 0; i < target[0]; ++i, ++n) {
                const Vec3 p{0.5 * static_cast<double>(i), 0.5 * static_cast<double>(j),
                             0.5 * static_cast<double>(k)};
                for (int c = 0; c < 3; ++c)
                    fine.vectors[3 * n + c] = 2.0 * sample(p, c);
            }
    return fine;
}

Volume resample_to(const Volume &vol, const Volume &ref) {
    Volume out = make_volume(ref.dims, vol.kind, 0.0, ref.spacing, ref.origin);
    const bool nearest = vol.kind == VoxelKind::label;
    std::size_t n = 0;
    for (std::int64_t k = 0; k < ref.dims[2]; ++k)
        for (std::int64_t j = 0; j < ref.dims[1]; ++j)
            for (std::int64_t i = 0; i < ref.dims[0]; ++i, ++n) {
                Vec3 p;
                const Vec3 x{static_cast<double>(i), static_cast<double>(j),
                             static_cast<double>(k)};
                for (int a = 0; a < 3; ++a) {
                    const double world = ref.origin[a] + ref.spacing[a] * x[a];
                    p[a] = (world - vol.origin[a]) / vol.spacing[a];
                }
                out.data[n] = nearest ? nearest_sample(vol, p) : trilinear_sample(vol, p);
            }
    return out;
}

Volume minmax_normalize(const Volume &vol) {
    if (vol.kind != VoxelKind::intensity)
        raise(ErrorCode::invalid_argument, "minmax_normalize: intensity volumes only");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : vol.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Volume out = vol;
    if (!(hi > lo)) {
        std::fill(out.data.begin(), out.data.end(), 0.0);
        return out;
    }
    const double scale = 1.0 / (hi - lo);
    for (double &v : out.data) v = (v - lo) * scale;
    return out;
}

} // namespace sgreg
