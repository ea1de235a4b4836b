#pragma once

#include <cstdint>
#include <vector>

#include "sgreg/volume.hpp"

namespace sgreg {

/// Volumetric overlap 2|A^B| / (|A|+|B|) of voxels labeled `id`.
/// Error when the id is absent from both volumes (0/0 undefined).
double dice(const Volume &a, const Volume &b, std::int64_t id);

/// Average symmetric surface distance in mm. Surface voxels are structure
/// voxels with at least one six-connected background neighbor (the volume
/// border counts as background). Pooled mean of the directed nearest-surface
/// distances in both directions, spacing-weighted Euclidean between voxel
/// centers. Error when either structure is empty.
double asd(const Volume &a, const Volume &b, std::int64_t id, const Vec3 &spacing);

struct EvalEntry {
    std::int64_t structure_id = 0;
    double dice = 0.0;   // in [0,1]
    double asd_mm = 0.0; // >= 0
};

struct EvalReport {
    std::vector<EvalEntry> entries;
    double dice_mean = 0.0, dice_stddev = 0.0;
    double asd_mean = 0.0, asd_stddev = 0.0;
};

/// Dice/ASD per structure id plus population mean/stddev aggregates.
EvalReport evaluate_labels(const Volume &a, const Volume &b,
                           const std::vector<std::int64_t> &ids);

/// Surface voxel indices of structure `id` (flat voxel indices, ascending).
std::vector<std::int64_t> surface_voxels(const Volume &vol, std::int64_t id);

} // namespace sgreg
