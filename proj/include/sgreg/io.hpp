#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sgreg/eval.hpp"
#include "sgreg/optim.hpp"
#include "sgreg/volume.hpp"

namespace sgreg {

/// Payload element types of the native format.
enum class ElemType { float32, float64, uint8, int16 };

/// Native format: a structured-text header file plus a raw little-endian
/// payload at "<path>.raw". Round trips are bit-exact for values
/// representable in the chosen element type.
void write_volume(const Volume &vol, const std::string &path,
                  ElemType elem = ElemType::float64);

/// Reads a volume: native headers, or a NIfTI-1 file (plain or
/// gzip-compressed) for ingestion. `kind` overrides the stored/default kind;
/// label volumes are checked for nonnegative integer values.
Volume read_volume(const std::string &path,
                   std::optional<VoxelKind> kind = std::nullopt);

void write_field(const DisplacementField &field, const std::string &path);
DisplacementField read_field(const std::string &path);

RegistrationConfig read_config(const std::string &path); // JSON
void write_config(const RegistrationConfig &cfg, const std::string &path);

/// Line-delimited JSON, one record per iteration.
void write_trace(const OptimizationTrace &trace, const std::string &path);

/// Table-style text report (DS %, ASD mm, two decimals, mean+-std row) and an
/// optional full-precision JSON record.
std::string format_eval_report(const EvalReport &report);
void write_eval_report(const EvalReport &report, const std::string &text_path,
                       const std::string &json_path);

enum class SlicePlane { axial, coronal, sagittal };

/// Binary PPM slice: intensity window [0,1] to 8-bit gray, label surface
/// voxels intersecting the slice drawn in distinct colors.
void emit_overlay(const Volume &fixed, const std::vector<const Volume *> &labels,
                  SlicePlane plane, std::int64_t index, const std::string &path);

/// Writes bytes via a temp file + rename so readers never see partial files.
void atomic_write(const std::string &path, const void *data, std::size_t size);

} // namespace sgreg
