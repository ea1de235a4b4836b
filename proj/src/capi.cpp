#include "sgreg/sgreg.h"

#include <cstring>
#include <exception>
#include <string>

#include <nlohmann/json.hpp>

#include "sgreg/eval.hpp"
#include "sgreg/io.hpp"
#include "sgreg/optim.hpp"
#include "sgreg/phantom.hpp"
#include "sgreg/segi.hpp"
#include "sgreg/volume.hpp"

using namespace sgreg;

struct sgreg_volume {
    Volume v;
};
struct sgreg_field {
    DisplacementField f;
};
struct sgreg_config {
    RegistrationConfig c;
};

namespace {

thread_local std::string g_last_error;

sgreg_status map_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return SGREG_ERR_INVALID_ARGUMENT;
    case ErrorCode::dimension_mismatch: return SGREG_ERR_DIMENSION_MISMATCH;
    case ErrorCode::io_failure: return SGREG_ERR_IO;
    case ErrorCode::bad_format: return SGREG_ERR_FORMAT;
    case ErrorCode::empty_structure: return SGREG_ERR_EMPTY_STRUCTURE;
    case ErrorCode::numeric_failure: return SGREG_ERR_NUMERIC;
    }
    return SGREG_ERR_UNKNOWN;
}

// Runs fn, translating exceptions into status codes + the thread-local
// message.
template <typename Fn> sgreg_status guarded(Fn &&fn) {
    try {
        fn();
        return SGREG_OK;
    } catch (const Error &e) {
        g_last_error = e.what();
        return map_code(e.code());
    } catch (const std::exception &e) {
        g_last_error = e.what();
        return SGREG_ERR_UNKNOWN;
    } catch (...) {
        g_last_error = "unknown error";
        return SGREG_ERR_UNKNOWN;
    }
}

sgreg_status invalid(const char *msg) {
    g_last_error = msg;
    return SGREG_ERR_INVALID_ARGUMENT;
}

VoxelKind kind_from(sgreg_kind kind) {
    return kind == SGREG_KIND_LABEL ? VoxelKind::label : VoxelKind::intensity;
}

} // namespace

extern "C" {

const char *sgreg_version(void) { return "0.1.0"; }

const char *sgreg_status_name(sgreg_status status) {
    switch (status) {
    case SGREG_OK: return "ok";
    case SGREG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SGREG_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case SGREG_ERR_IO: return "io error";
    case SGREG_ERR_FORMAT: return "format error";
    case SGREG_ERR_EMPTY_STRUCTURE: return "empty structure";
    case SGREG_ERR_NUMERIC: return "numeric error";
    case SGREG_ERR_UNKNOWN: return "unknown error";
    }
    return "?";
}

const char *sgreg_last_error(void) { return g_last_error.c_str(); }

/* ---- volumes ---- */

sgreg_status sgreg_volume_create(const int64_t dims[3], const double spacing[3],
                                 const double origin[3], sgreg_kind kind,
                                 const double *data, sgreg_volume **out) {
    if (!dims || !out) return invalid("sgreg_volume_create: null argument");
    return guarded([&] {
        Volume v = make_volume({dims[0], dims[1], dims[2]}, kind_from(kind), 0.0,
                               spacing ? Vec3{spacing[0], spacing[1], spacing[2]} : Vec3{1, 1, 1},
                               origin ? Vec3{origin[0], origin[1], origin[2]} : Vec3{0, 0, 0});
        if (data) std::memcpy(v.data.data(), data, v.data.size() * sizeof(double));
        validate(v);
        *out = new sgreg_volume{std::move(v)};
    });
}

void sgreg_volume_destroy(sgreg_volume *vol) { delete vol; }

sgreg_status sgreg_volume_read(const char *path, sgreg_kind kind, sgreg_volume **out) {
    if (!path || !out) return invalid("sgreg_volume_read: null argument");
    return guarded([&] {
        std::optional<VoxelKind> k;
        if (kind != SGREG_KIND_AUTO) k = kind_from(kind);
        *out = new sgreg_volume{read_volume(path, k)};
    });
}

sgreg_status sgreg_volume_write(const sgreg_volume *vol, const char *path) {
    if (!vol || !path) return invalid("sgreg_volume_write: null argument");
    return guarded([&] { write_volume(vol->v, path); });
}

sgreg_status sgreg_volume_dims(const sgreg_volume *vol, int64_t dims[3]) {
    if (!vol || !dims) return invalid("sgreg_volume_dims: null argument");
    for (int a = 0; a < 3; ++a) dims[a] = vol->v.dims[static_cast<std::size_t>(a)];
    return SGREG_OK;
}

sgreg_status sgreg_volume_spacing(const sgreg_volume *vol, double spacing[3]) {
    if (!vol || !spacing) return invalid("sgreg_volume_spacing: null argument");
    for (int a = 0; a < 3; ++a) spacing[a] = vol->v.spacing[static_cast<std::size_t>(a)];
    return SGREG_OK;
}

sgreg_status sgreg_volume_origin(const sgreg_volume *vol, double origin[3]) {
    if (!vol || !origin) return invalid("sgreg_volume_origin: null argument");
    for (int a = 0; a < 3; ++a) origin[a] = vol->v.origin[static_cast<std::size_t>(a)];
    return SGREG_OK;
}

sgreg_status sgreg_volume_kind(const sgreg_volume *vol, sgreg_kind *kind) {
    if (!vol || !kind) return invalid("sgreg_volume_kind: null argument");
    *kind = vol->v.kind == VoxelKind::label ? SGREG_KIND_LABEL : SGREG_KIND_INTENSITY;
    return SGREG_OK;
}

const double *sgreg_volume_data(const sgreg_volume *vol) {
    return vol ? vol->v.data.data() : nullptr;
}

/* ---- fields ---- */

sgreg_status sgreg_field_create(const int64_t dims[3], const double spacing[3],
                                const double *vectors, sgreg_field **out) {
    if (!dims || !out) return invalid("sgreg_field_create: null argument");
    return guarded([&] {
        DisplacementField f =
            make_field({dims[0], dims[1], dims[2]},
                       spacing ? Vec3{spacing[0], spacing[1], spacing[2]} : Vec3{1, 1, 1});
        if (vectors) std::memcpy(f.vectors.data(), vectors, f.vectors.size() * sizeof(double));
        validate(f);
        *out = new sgreg_field{std::move(f)};
    });
}

void sgreg_field_destroy(sgreg_field *field) { delete field; }

sgreg_status sgreg_field_read(const char *path, sgreg_field **out) {
    if (!path || !out) return invalid("sgreg_field_read: null argument");
    return guarded([&] { *out = new sgreg_field{read_field(path)}; });
}

sgreg_status sgreg_field_write(const sgreg_field *field, const char *path) {
    if (!field || !path) return invalid("sgreg_field_write: null argument");
    return guarded([&] { write_field(field->f, path); });
}

sgreg_status sgreg_field_dims(const sgreg_field *field, int64_t dims[3]) {
    if (!field || !dims) return invalid("sgreg_field_dims: null argument");
    for (int a = 0; a < 3; ++a) dims[a] = field->f.dims[static_cast<std::size_t>(a)];
    return SGREG_OK;
}

const double *sgreg_field_data(const sgreg_field *field) {
    return field ? field->f.vectors.data() : nullptr;
}

/* ---- config ---- */

sgreg_status sgreg_config_create(sgreg_config **out) {
    if (!out) return invalid("sgreg_config_create: null argument");
    return guarded([&] { *out = new sgreg_config{}; });
}

void sgreg_config_destroy(sgreg_config *cfg) { delete cfg; }

sgreg_status sgreg_config_load(const char *path, sgreg_config **out) {
    if (!path || !out) return invalid("sgreg_config_load: null argument");
    return guarded([&] { *out = new sgreg_config{read_config(path)}; });
}

sgreg_status sgreg_config_set_sigmas(sgreg_config *cfg, const double *sigmas, size_t count) {
    if (!cfg || !sigmas || count == 0) return invalid("sgreg_config_set_sigmas: null argument");
    cfg->c.sigmas.assign(sigmas, sigmas + count);
    return SGREG_OK;
}

sgreg_status sgreg_config_set_lambda1(sgreg_config *cfg, double value) {
    if (!cfg) return invalid("sgreg_config_set_lambda1: null config");
    cfg->c.lambda1 = value;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_lambda2(sgreg_config *cfg, double value) {
    if (!cfg) return invalid("sgreg_config_set_lambda2: null config");
    cfg->c.lambda2 = value;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_levels(sgreg_config *cfg, int levels) {
    if (!cfg) return invalid("sgreg_config_set_levels: null config");
    cfg->c.levels = levels;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_iters(sgreg_config *cfg, int iters_per_level) {
    if (!cfg) return invalid("sgreg_config_set_iters: null config");
    cfg->c.iters_per_level = iters_per_level;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_step_size(sgreg_config *cfg, double value) {
    if (!cfg) return invalid("sgreg_config_set_step_size: null config");
    cfg->c.step_size = value;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_symmetric(sgreg_config *cfg, int enabled) {
    if (!cfg) return invalid("sgreg_config_set_symmetric: null config");
    cfg->c.symmetric_similarity = enabled != 0;
    return SGREG_OK;
}

sgreg_status sgreg_config_set_seed(sgreg_config *cfg, uint64_t seed) {
    if (!cfg) return invalid("sgreg_config_set_seed: null config");
    cfg->c.seed = seed;
    return SGREG_OK;
}

/* ---- operations ---- */

sgreg_status sgreg_register(const sgreg_volume *moving, const sgreg_volume *fixed,
                            const sgreg_config *cfg, sgreg_field **out_forward,
                            sgreg_field **out_backward, const char *trace_path) {
    if (!moving || !fixed || !cfg || !out_forward || !out_backward)
        return invalid("sgreg_register: null argument");
    return guarded([&] {
        RegistrationResult r = register_volumes(moving->v, fixed->v, cfg->c);
        if (trace_path) write_trace(r.trace, trace_path);
        *out_forward = new sgreg_field{std::move(r.forward)};
        *out_backward = new sgreg_field{std::move(r.backward)};
    });
}

sgreg_status sgreg_warp(const sgreg_volume *vol, const sgreg_field *field, int nearest,
                        sgreg_volume **out) {
    if (!vol || !field || !out) return invalid("sgreg_warp: null argument");
    return guarded([&] {
        if (nearest && vol->v.kind == VoxelKind::intensity) {
            Volume as_label = vol->v; // nearest sampling via the label path
            as_label.kind = VoxelKind::label;
            Volume warped = warp(as_label, field->f);
            warped.kind = VoxelKind::intensity;
            *out = new sgreg_volume{std::move(warped)};
        } else {
            *out = new sgreg_volume{warp(vol->v, field->f)};
        }
    });
}

sgreg_status sgreg_resample_to(const sgreg_volume *vol, const sgreg_volume *ref,
                               sgreg_volume **out) {
    if (!vol || !ref || !out) return invalid("sgreg_resample_to: null argument");
    return guarded([&] { *out = new sgreg_volume{resample_to(vol->v, ref->v)}; });
}

sgreg_status sgreg_dice(const sgreg_volume *a, const sgreg_volume *b, int64_t id,
                        double *out) {
    if (!a || !b || !out) return invalid("sgreg_dice: null argument");
    return guarded([&] { *out = dice(a->v, b->v, id); });
}

sgreg_status sgreg_asd(const sgreg_volume *a, const sgreg_volume *b, int64_t id,
                       double *out) {
    if (!a || !b || !out) return invalid("sgreg_asd: null argument");
    return guarded([&] { *out = asd(a->v, b->v, id, a->v.spacing); });
}

sgreg_status sgreg_eval_report(const sgreg_volume *a, const sgreg_volume *b,
                               const int64_t *ids, size_t id_count,
                               const char *text_path, const char *json_path) {
    if (!a || !b || !ids || id_count == 0 || !text_path)
        return invalid("sgreg_eval_report: null argument");
    return guarded([&] {
        const std::vector<std::int64_t> id_list(ids, ids + id_count);
        const EvalReport report = evaluate_labels(a->v, b->v, id_list);
        write_eval_report(report, text_path, json_path ? json_path : "");
    });
}

/* ---- phantoms ---- */

void sgreg_phantom_spec_init(sgreg_phantom_spec *spec) {
    if (!spec) return;
    std::memset(spec, 0, sizeof *spec);
    spec->dims[0] = spec->dims[1] = spec->dims[2] = 48;
    spec->spacing[0] = spec->spacing[1] = spec->spacing[2] = 1.0;
    spec->bump_sigma = 6.0;
}

sgreg_status sgreg_phantom_generate(const sgreg_phantom_spec *spec, sgreg_volume **moving,
                                    sgreg_volume **fixed, sgreg_volume **moving_label,
                                    sgreg_volume **fixed_label, sgreg_field **truth) {
    if (!spec) return invalid("sgreg_phantom_generate: null spec");
    return guarded([&] {
        PhantomSpec s;
        s.dims = {spec->dims[0], spec->dims[1], spec->dims[2]};
        s.spacing = {spec->spacing[0], spec->spacing[1], spec->spacing[2]};
        if (spec->shape < 0 || spec->shape > 2)
            raise(ErrorCode::invalid_argument, "phantom: unknown shape code");
        if (spec->remap < 0 || spec->remap > 4)
            raise(ErrorCode::invalid_argument, "phantom: unknown remap code");
        if (spec->deform < 0 || spec->deform > 2)
            raise(ErrorCode::invalid_argument, "phantom: unknown deformation code");
        s.shape = static_cast<PhantomShape>(spec->shape);
        s.remap = static_cast<ModalityRemap>(spec->remap);
        s.deformation = static_cast<DeformationKind>(spec->deform);
        s.translation = {spec->translation[0], spec->translation[1], spec->translation[2]};
        s.bump_center = {spec->bump_center[0], spec->bump_center[1], spec->bump_center[2]};
        s.bump_amplitude = {spec->bump_amplitude[0], spec->bump_amplitude[1],
                            spec->bump_amplitude[2]};
        s.bump_sigma = spec->bump_sigma;
        s.noise_sigma = spec->noise_sigma;
        s.seed = spec->seed;

        PhantomPair pair = generate_pair(s);
        if (moving) *moving = new sgreg_volume{std::move(pair.moving)};
        if (fixed) *fixed = new sgreg_volume{std::move(pair.fixed)};
        if (moving_label) *moving_label = new sgreg_volume{std::move(pair.moving_label)};
        if (fixed_label) *fixed_label = new sgreg_volume{std::move(pair.fixed_label)};
        if (truth) *truth = new sgreg_field{std::move(pair.truth)};
    });
}

/* ---- inspection ---- */

sgreg_status sgreg_segi_dump(const sgreg_volume *vol, const double *sigmas,
                             size_t sigma_count, const char *out_path) {
    if (!vol || !sigmas || sigma_count == 0 || !out_path)
        return invalid("sgreg_segi_dump: null argument");
    return guarded([&] {
        const std::vector<double> sigma_list(sigmas, sigmas + sigma_count);
        const SegiField sg = segi(vol->v, sigma_list);

        nlohmann::json manifest;
        manifest["sigmas"] = sg.sigmas;
        manifest["eps"] = kDefaultGradEps;
        auto &files = manifest["fields"] = nlohmann::json::array();
        for (std::size_t k = 0; k < sg.fields.size(); ++k) {
            const std::string field_path =
                std::string(out_path) + ".sigma" + std::to_string(k) + ".sddf";
            DisplacementField as_field;
            as_field.dims = sg.fields[k].dims;
            as_field.spacing = vol->v.spacing;
            as_field.vectors = sg.fields[k].vectors;
            write_field(as_field, field_path);
            files.push_back(field_path);
        }
        const std::string text = manifest.dump(2) + "\n";
        atomic_write(out_path, text.data(), text.size());
    });
}

sgreg_status sgreg_overlay(const sgreg_volume *vol, const sgreg_volume *const *labels,
                           size_t label_count, sgreg_plane plane, int64_t index,
                           const char *path) {
    if (!vol || !path || (label_count > 0 && !labels))
        return invalid("sgreg_overlay: null argument");
    return guarded([&] {
        std::vector<const Volume *> label_ptrs;
        label_ptrs.reserve(label_count);
        for (size_t i = 0; i < label_count; ++i) {
            if (!labels[i]) raise(ErrorCode::invalid_argument, "overlay: null label volume");
            label_ptrs.push_back(&labels[i]->v);
        }
        emit_overlay(vol->v, label_ptrs, static_cast<SlicePlane>(plane), index, path);
    });
}

} // extern "C"
