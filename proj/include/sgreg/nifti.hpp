#pragma once

#include <array>
#include <string>

#include "sgreg/volume.hpp"

namespace sgreg {

/// Orientation metadata recorded from the header but never acted on (this
/// reader does not resample).
struct NiftiMeta {
    short datatype = 0;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    short qform_code = 0;
    short sform_code = 0;
    std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
    bool byte_swapped = false;
    bool gzipped = false;
};

/// Read-only NIfTI-1 subset: single-file "n+1" magic, 3-D dims, datatype in
/// {uint8, int16, float32, float64}, scl_slope/scl_inter applied, optional
/// gzip stream compression, byte-swapped files handled. Spacing comes from
/// pixdim, origin from the qform/sform offset when present.
Volume read_nifti(const std::string &path, NiftiMeta *meta = nullptr);

/// True when the file looks like NIfTI-1 (plain or gzipped) rather than the
/// native text-header format.
bool looks_like_nifti(const std::string &path);

} // namespace sgreg
