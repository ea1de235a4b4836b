#pragma once

// Shared generators and independent oracles for the test suites. Oracles here
// deliberately avoid the library's implementation paths (direct summation,
// dense convolution, exhaustive distance scans).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sgreg/eval.hpp"
#include "sgreg/filtering.hpp"
#include "sgreg/segi.hpp"
#include "sgreg/volume.hpp"

namespace testsup {

using namespace sgreg;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : rng_(seed) {}

    double uniform() { // [0, 1)
        return static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    }
    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::int64_t integer(std::int64_t lo, std::int64_t hi) { // inclusive
        return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::mt19937_64 rng_;
};

inline Volume random_volume(const Dims &dims, std::uint64_t seed,
                            VoxelKind kind = VoxelKind::intensity, double lo = 0.0,
                            double hi = 1.0) {
    Rng rng(seed);
    Volume v = make_volume(dims, kind);
    for (double &x : v.data)
        x = kind == VoxelKind::label ? std::floor(rng.range(lo, hi + 1.0)) : rng.range(lo, hi);
    return v;
}

// Smooth random intensity volume with a dominant ramp along axis 0. The ramp
// keeps unit-gradient directions stable, which finite-difference probing of
// the similarity term needs (the canonical sign choice is discontinuous where
// gradient components tie).
inline Volume gradcheck_volume(const Dims &dims, std::uint64_t seed) {
    Rng rng(seed);
    Volume noise = make_volume(dims, VoxelKind::intensity);
    for (double &x : noise.data) x = rng.range(-1.0, 1.0);
    Volume smooth = noise;
    gaussian_smooth(noise.data.data(), smooth.data.data(), dims, 1, 1.5);

    double peak = 0.0;
    for (double x : smooth.data) peak = std::max(peak, std::fabs(x));
    const double ramp_slope = 0.08;
    const double noise_scale = peak > 0.0 ? 0.35 * ramp_slope / peak : 0.0;

    Volume out = make_volume(dims, VoxelKind::intensity);
    std::size_t n = 0;
    for (std::int64_t k = 0; k < dims[2]; ++k)
        for (std::int64_t j = 0; j < dims[1]; ++j)
            for (std::int64_t i = 0; i < dims[0]; ++i, ++n)
                out.data[n] = ramp_slope * static_cast<double>(i) + noise_scale * smooth.data[n];
    return out;
}

// Smoothed random field scaled so the largest component magnitude is
// max_component.
inline DisplacementField smooth_random_field(const Dims &dims, std::uint64_t seed,
                                             double max_component) {
    Rng rng(seed);
    DisplacementField f = make_field(dims);
    for (double &x : f.vectors) x = rng.range(-1.0, 1.0);
    std::vector<double> smoothed(f.vectors.size());
    gaussian_smooth(f.vectors.data(), smoothed.data(), dims, 3, 2.0);
    double peak = 0.0;
    for (double x : smoothed) peak = std::max(peak, std::fabs(x));
    const double scale = peak > 0.0 ? max_component / peak : 0.0;
    for (std::size_t i = 0; i < f.vectors.size(); ++i) f.vectors[i] = scale * smoothed[i];
    return f;
}

// Dense (non-separable) 3-D Gaussian convolution with clamp-to-edge borders:
// the oracle for the separable implementation.
inline VectorField dense_gaussian_oracle(const VectorField &f, double sigma) {
    const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> taps1(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::int64_t j = -radius; j <= radius; ++j) {
        taps1[static_cast<std::size_t>(j + radius)] =
            std::exp(-0.5 * static_cast<double>(j * j) / (sigma * sigma));
        sum += taps1[static_cast<std::size_t>(j + radius)];
    }
    for (double &w : taps1) w /= sum;

    const Dims &d = f.dims;
    VectorField out = make_vector_field(d);
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0.0;
                    for (std::int64_t dk = -radius; dk <= radius; ++dk)
                        for (std::int64_t dj = -radius; dj <= radius; ++dj)
                            for (std::int64_t di = -radius; di <= radius; ++di) {
                                const std::int64_t ii = std::clamp<std::int64_t>(i + di, 0, d[0] - 1);
                                const std::int64_t jj = std::clamp<std::int64_t>(j + dj, 0, d[1] - 1);
                                const std::int64_t kk = std::clamp<std::int64_t>(k + dk, 0, d[2] - 1);
                                acc += taps1[static_cast<std::size_t>(di + radius)] *
                                       taps1[static_cast<std::size_t>(dj + radius)] *
                                       taps1[static_cast<std::size_t>(dk + radius)] *
                                       f.vectors[3 * f.index(ii, jj, kk) + c];
                            }
                    out.vectors[3 * out.index(i, j, k) + c] = acc;
                }
    return out;
}

// Exhaustive surface extraction + all-pairs distance scan (the ASD oracle).
inline std::vector<std::array<std::int64_t, 3>> surface_oracle(const Volume &vol,
                                                               std::int64_t id) {
    std::vector<std::array<std::int64_t, 3>> out;
    const Dims &d = vol.dims;
    const double idv = static_cast<double>(id);
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i) {
                if (vol.at(i, j, k) != idv) continue;
                bool surf = false;
                const std::int64_t offs[6][3] = {{-1, 0, 0}, {1, 0, 0},  {0, -1, 0},
                                                 {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
                for (const auto &o : offs) {
                    const std::int64_t ii = i + o[0], jj = j + o[1], kk = k + o[2];
                    if (ii < 0 || jj < 0 || kk < 0 || ii >= d[0] || jj >= d[1] || kk >= d[2] ||
                        vol.at(ii, jj, kk) != idv) {
                        surf = true;
                        break;
                    }
                }
                if (surf) out.push_back({i, j, k});
            }
    return out;
}

inline double asd_oracle(const Volume &a, const Volume &b, std::int64_t id,
                         const Vec3 &spacing) {
    const auto sa = surface_oracle(a, id);
    const auto sb = surface_oracle(b, id);
    auto directed = [&](const auto &from, const auto &to) {
        double total = 0.0;
        for (const auto &p : from) {
            double best = -1.0;
            for (const auto &q : to) {
                const double dx = static_cast<double>(p[0] - q[0]) * spacing[0];
                const double dy = static_cast<double>(p[1] - q[1]) * spacing[1];
                const double dz = static_cast<double>(p[2] - q[2]) * spacing[2];
                const double d2 = dx * dx + dy * dy + dz * dz;
                if (best < 0.0 || d2 < best) best = d2;
            }
            total += std::sqrt(best);
        }
        return total;
    };
    return (directed(sa, sb) + directed(sb, sa)) /
           static_cast<double>(sa.size() + sb.size());
}

inline double dice_oracle(const Volume &a, const Volume &b, std::int64_t id) {
    const double idv = static_cast<double>(id);
    std::int64_t na = 0, nb = 0, inter = 0;
    for (std::int64_t v = 0; v < a.voxel_count(); ++v) {
        const bool ia = a.data[static_cast<std::size_t>(v)] == idv;
        const bool ib = b.data[static_cast<std::size_t>(v)] == idv;
        na += ia;
        nb += ib;
        inter += ia && ib;
    }
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

// Random label volume guaranteed to contain every id in `ids` (one solid box
// per id, later boxes overwrite earlier ones, plus a re-stamp of any id that
// got fully covered).
inline Volume random_label_volume(const Dims &dims, std::uint64_t seed,
                                  const std::vector<std::int64_t> &ids) {
    Rng rng(seed);
    Volume v = make_volume(dims, VoxelKind::label, 0.0);
    auto stamp = [&](std::int64_t id) {
        std::int64_t lo[3], hi[3];
        for (int a = 0; a < 3; ++a) {
            lo[a] = rng.integer(0, dims[a] - 1);
            hi[a] = rng.integer(lo[a], std::min(dims[a] - 1, lo[a] + dims[a] / 2));
        }
        for (std::int64_t k = lo[2]; k <= hi[2]; ++k)
            for (std::int64_t j = lo[1]; j <= hi[1]; ++j)
                for (std::int64_t i = lo[0]; i <= hi[0]; ++i)
                    v.at(i, j, k) = static_cast<double>(id);
    };
    for (std::int64_t id : ids) stamp(id);
    for (std::int64_t id : ids) {
        bool present = false;
        for (double x : v.data)
            if (x == static_cast<double>(id)) {
                present = true;
                break;
            }
        if (!present) {
            const std::int64_t i = rng.integer(0, dims[0] - 1);
            const std::int64_t j = rng.integer(0, dims[1] - 1);
            const std::int64_t k = rng.integer(0, dims[2] - 1);
            v.at(i, j, k) = static_cast<double>(id);
        }
    }
    return v;
}

inline double max_abs_diff(const std::vector<double> &a, const std::vector<double> &b) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        best = std::max(best, std::fabs(a[i] - b[i]));
    return best;
}

} // namespace testsup
