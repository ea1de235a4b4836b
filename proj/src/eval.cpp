#include "sgreg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sgreg {

namespace {

void require_label_pair(const Volume &a, const Volume &b, const char *op) {
    if (a.dims != b.dims)
        raise(ErrorCode::dimension_mismatch, std::string(op) + ": label grids differ");
}

struct SurfaceSet {
    std::vector<std::array<std::int64_t, 3>> voxels;
    std::vector<std::uint8_t> membership; // per flat voxel index
};

SurfaceSet extract_surface(const Volume &vol, std::int64_t id) {
    const Dims &d = vol.dims;
    SurfaceSet s;
    s.membership.assign(static_cast<std::size_t>(vol.voxel_count()), 0);
    const double idv = static_cast<double>(id);
    std::int64_t v = 0;
    for (std::int64_t k = 0; k < d[2]; ++k)
        for (std::int64_t j = 0; j < d[1]; ++j)
            for (std::int64_t i = 0; i < d[0]; ++i, ++v) {
                if (vol.data[static_cast<std::size_t>(v)] != idv) continue;
                // six-connected; the volume border counts as background
                bool surface = i == 0 || i == d[0] - 1 || j == 0 || j == d[1] - 1 ||
                               k == 0 || k == d[2] - 1;
                if (!surface)
                    surface = vol.at(i - 1, j, k) != idv || vol.at(i + 1, j, k) != idv ||
                              vol.at(i, j - 1, k) != idv || vol.at(i, j + 1, k) != idv ||
                              vol.at(i, j, k - 1) != idv || vol.at(i, j, k + 1) != idv;
                if (surface) {
                    s.voxels.push_back({i, j, k});
                    s.membership[static_cast<std::size_t>(v)] = 1;
                }
            }
    return s;
}

// Nearest squared distance (mm^2) from p to the target surface, searched over
// expanding Chebyshev shells. Computes the same dx*dx+dy*dy+dz*dz expression
// a brute-force scan would, so results agree bitwise.
double nearest_surface_dist2(const std::array<std::int64_t, 3> &p, const SurfaceSet &target,
                             const Dims &dims, const Vec3 &spacing) {
    const double min_sp = std::min({spacing[0], spacing[1], spacing[2]});
    const std::int64_t max_radius = std::max({dims[0], dims[1], dims[2]});
    double best = -1.0;

    auto consider = [&](std::int64_t i, std::int64_t j, std::int64_t k) {
        if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return;
        const std::size_t idx = static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
        if (!target.membership[idx]) return;
        const double dx = static_cast<double>(p[0] - i) * spacing[0];
        const double dy = static_cast<double>(p[1] - j) * spacing[1];
        const double dz = static_cast<double>(p[2] - k) * spacing[2];
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (best < 0.0 || d2 < best) best = d2;
    };

    for (std::int64_t r = 0; r <= max_radius; ++r) {
        if (best >= 0.0) {
            const double bound = static_cast<double>(r) * min_sp;
            if (bound * bound > best) break; // no farther shell can win
        }
        if (r == 0) {
            consider(p[0], p[1], p[2]);
            continue;
        }
        for (std::int64_t dj = -r; dj <= r; ++dj)
            for (std::int64_t dk = -r; dk <= r; ++dk) {
                consider(p[0] - r, p[1] + dj, p[2] + dk);
                consider(p[0] + r, p[1] + dj, p[2] + dk);
            }
        for (std::int64_t di = -r + 1; di <= r - 1; ++di)
            for (std::int64_t dk = -r; dk <= r; ++dk) {
                consider(p[0] + di, p[1] - r, p[2] + dk);
                consider(p[0] + di, p[1] + r, p[2] + dk);
            }
        for (std::int64_t di = -r + 1; di <= r - 1; ++di)
            for (std::int64_t dj = -r + 1; dj <= r - 1; ++dj) {
                consider(p[0] + di, p[1] + dj, p[2] - r);
                consider(p[0] + di, p[1] + dj, p[2] + r);
            }
    }
    return best;
}

} // namespace

std::vector<std::int64_t> surface_voxels(const Volume &vol, std::int64_t id) {
    const SurfaceSet s = extract_surface(vol, id);
    std::vector<std::int64_t> out;
    out.reserve(s.voxels.size());
    for (const auto &p : s.voxels)
        out.push_back(p[0] + vol.dims[0] * (p[1] + vol.dims[1] * p[2]));
    return out;
}

double dice(const Volume &a, const Volume &b, std::int64_t id) {
    require_label_pair(a, b, "dice");
    const double idv = static_cast<double>(id);
    std::int64_t na = 0, nb = 0, inter = 0;
    const std::int64_t n = a.voxel_count();
    for (std::int64_t v = 0; v < n; ++v) {
        const bool in_a = a.data[static_cast<std::size_t>(v)] == idv;
        const bool in_b = b.data[static_cast<std::size_t>(v)] == idv;
        na += in_a;
        nb += in_b;
        inter += in_a && in_b;
    }
    if (na == 0 && nb == 0)
        raise(ErrorCode::empty_structure,
              "dice: structure " + std::to_string(id) + " absent from both volumes");
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double asd(const Volume &a, const Volume &b, std::int64_t id, const Vec3 &spacing) {
    require_label_pair(a, b, "asd");
    const SurfaceSet sa = extract_surface(a, id);
    const SurfaceSet sb = extract_surface(b, id);
    if (sa.voxels.empty())
        raise(ErrorCode::empty_structure,
              "asd: structure " + std::to_string(id) + " empty in the first volume");
    if (sb.voxels.empty())
        raise(ErrorCode::empty_structure,
              "asd: structure " + std::to_string(id) + " empty in the second volume");

    // pooled symmetric mean over both directed distance sets; the directed
    // sums are accumulated separately so the result is exactly symmetric in
    // (a, b)
    double sum_ab = 0.0, sum_ba = 0.0;
    for (const auto &p : sa.voxels)
        sum_ab += std::sqrt(nearest_surface_dist2(p, sb, a.dims, spacing));
    for (const auto &p : sb.voxels)
        sum_ba += std::sqrt(nearest_surface_dist2(p, sa, a.dims, spacing));
    return (sum_ab + sum_ba) / static_cast<double>(sa.voxels.size() + sb.voxels.size());
}

EvalReport evaluate_labels(const Volume &a, const Volume &b,
                           const std::vector<std::int64_t> &ids) {
    if (ids.empty())
        raise(ErrorCode::invalid_argument, "evaluate_labels: no structure ids given");
    EvalReport report;
    for (std::int64_t id : ids) {
        EvalEntry e;
        e.structure_id = id;
        e.dice = dice(a, b, id);
        e.asd_mm = asd(a, b, id, a.spacing);
        report.entries.push_back(e);
    }
    const double n = static_cast<double>(report.entries.size());
    double dm = 0.0, am = 0.0;
    for (const EvalEntry &e : report.entries) {
        dm += e.dice;
        am += e.asd_mm;
    }
    dm /= n;
    am /= n;
    double dv = 0.0, av = 0.0;
    for (const EvalEntry &e : report.entries) {
        dv += (e.dice - dm) * (e.dice - dm);
        av += (e.asd_mm - am) * (e.asd_mm - am);
    }
    report.dice_mean = dm;
    report.dice_stddev = std::sqrt(dv / n);
    report.asd_mean = am;
    report.asd_stddev = std::sqrt(av / n);
    return report;
}

} // namespace sgreg
