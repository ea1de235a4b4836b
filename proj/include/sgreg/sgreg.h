/* sgreg.h - C API for the sgreg deformable multi-modality registration
 * library.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Functions return SGREG_OK or an error code; sgreg_last_error() gives a
 * diagnostic for the most recent failure on the calling thread.
 */
#ifndef SGREG_H
#define SGREG_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgreg_status {
    SGREG_OK = 0,
    SGREG_ERR_INVALID_ARGUMENT = 1,
    SGREG_ERR_DIMENSION_MISMATCH = 2,
    SGREG_ERR_IO = 3,
    SGREG_ERR_FORMAT = 4,
    SGREG_ERR_EMPTY_STRUCTURE = 5,
    SGREG_ERR_NUMERIC = 6,
    SGREG_ERR_UNKNOWN = 7
} sgreg_status;

typedef enum sgreg_kind {
    SGREG_KIND_AUTO = 0,     /* keep the stored kind (reads only) */
    SGREG_KIND_INTENSITY = 1,
    SGREG_KIND_LABEL = 2
} sgreg_kind;

typedef struct sgreg_volume sgreg_volume;
typedef struct sgreg_field sgreg_field;
typedef struct sgreg_config sgreg_config;

const char *sgreg_version(void);
const char *sgreg_status_name(sgreg_status status);
/* Message for the last failing call on this thread; valid until the next
 * failing call. */
const char *sgreg_last_error(void);

/* ---- volumes ---- */

sgreg_status sgreg_volume_create(const int64_t dims[3], const double spacing[3],
                                 const double origin[3], sgreg_kind kind,
                                 const double *data /* dims product, may be NULL */,
                                 sgreg_volume **out);
void sgreg_volume_destroy(sgreg_volume *vol);

sgreg_status sgreg_volume_read(const char *path, sgreg_kind kind, sgreg_volume **out);
sgreg_status sgreg_volume_write(const sgreg_volume *vol, const char *path);

sgreg_status sgreg_volume_dims(const sgreg_volume *vol, int64_t dims[3]);
sgreg_status sgreg_volume_spacing(const sgreg_volume *vol, double spacing[3]);
sgreg_status sgreg_volume_origin(const sgreg_volume *vol, double origin[3]);
sgreg_status sgreg_volume_kind(const sgreg_volume *vol, sgreg_kind *kind);
/* Borrowed pointer, valid for the volume's lifetime. */
const double *sgreg_volume_data(const sgreg_volume *vol);

/* ---- displacement fields ---- */

sgreg_status sgreg_field_create(const int64_t dims[3], const double spacing[3],
                                const double *vectors /* 3 per voxel, may be NULL */,
                                sgreg_field **out);
void sgreg_field_destroy(sgreg_field *field);

sgreg_status sgreg_field_read(const char *path, sgreg_field **out);
sgreg_status sgreg_field_write(const sgreg_field *field, const char *path);

sgreg_status sgreg_field_dims(const sgreg_field *field, int64_t dims[3]);
const double *sgreg_field_data(const sgreg_field *field);

/* ---- registration configuration ---- */

sgreg_status sgreg_config_create(sgreg_config **out); /* defaults */
void sgreg_config_destroy(sgreg_config *cfg);
sgreg_status sgreg_config_load(const char *path, sgreg_config **out); /* JSON */

sgreg_status sgreg_config_set_sigmas(sgreg_config *cfg, const double *sigmas, size_t count);
sgreg_status sgreg_config_set_lambda1(sgreg_config *cfg, double value);
sgreg_status sgreg_config_set_lambda2(sgreg_config *cfg, double value);
sgreg_status sgreg_config_set_levels(sgreg_config *cfg, int levels);
sgreg_status sgreg_config_set_iters(sgreg_config *cfg, int iters_per_level);
sgreg_status sgreg_config_set_step_size(sgreg_config *cfg, double value);
sgreg_status sgreg_config_set_symmetric(sgreg_config *cfg, int enabled);
sgreg_status sgreg_config_set_seed(sgreg_config *cfg, uint64_t seed);

/* ---- operations ---- */

/* Jointly optimizes the forward and backward dense displacement fields.
 * trace_path may be NULL; otherwise per-iteration records are written as
 * line-delimited JSON. */
sgreg_status sgreg_register(const sgreg_volume *moving, const sgreg_volume *fixed,
                            const sgreg_config *cfg, sgreg_field **out_forward,
                            sgreg_field **out_backward, const char *trace_path);

/* nearest != 0 forces nearest-neighbor sampling (label volumes always use it). */
sgreg_status sgreg_warp(const sgreg_volume *vol, const sgreg_field *field,
                        int nearest, sgreg_volume **out);

sgreg_status sgreg_resample_to(const sgreg_volume *vol, const sgreg_volume *ref,
                               sgreg_volume **out);

sgreg_status sgreg_dice(const sgreg_volume *a, const sgreg_volume *b, int64_t id,
                        double *out);
sgreg_status sgreg_asd(const sgreg_volume *a, const sgreg_volume *b, int64_t id,
                       double *out);

/* Writes the per-structure Dice/ASD table to text_path and, when json_path is
 * not NULL, a full-precision JSON record. */
sgreg_status sgreg_eval_report(const sgreg_volume *a, const sgreg_volume *b,
                               const int64_t *ids, size_t id_count,
                               const char *text_path, const char *json_path);

/* ---- synthetic phantoms ---- */

typedef enum sgreg_phantom_shape {
    SGREG_SHAPE_SPHERE = 0,
    SGREG_SHAPE_TWO_SPHERES = 1,
    SGREG_SHAPE_CUBOID_NOTCH = 2
} sgreg_phantom_shape;

typedef enum sgreg_remap {
    SGREG_REMAP_IDENTITY = 0,
    SGREG_REMAP_INVERT = 1,
    SGREG_REMAP_SQUARE = 2,
    SGREG_REMAP_PIECEWISE_MONOTONE = 3,
    SGREG_REMAP_CONTRAST_FOLD = 4
} sgreg_remap;

typedef enum sgreg_deform {
    SGREG_DEFORM_ZERO = 0,
    SGREG_DEFORM_TRANSLATION = 1,
    SGREG_DEFORM_GAUSSIAN_BUMP = 2
} sgreg_deform;

typedef struct sgreg_phantom_spec {
    int64_t dims[3];
    double spacing[3];
    int shape;  /* sgreg_phantom_shape */
    int remap;  /* sgreg_remap */
    int deform; /* sgreg_deform */
    double translation[3];    /* voxels */
    double bump_center[3];    /* voxel coords; zeros mean the grid center */
    double bump_amplitude[3]; /* voxels */
    double bump_sigma;        /* voxels */
    double noise_sigma;
    uint64_t seed;
} sgreg_phantom_spec;

void sgreg_phantom_spec_init(sgreg_phantom_spec *spec); /* defaults */

/* Any output pointer may be NULL to skip that product. */
sgreg_status sgreg_phantom_generate(const sgreg_phantom_spec *spec,
                                    sgreg_volume **moving, sgreg_volume **fixed,
                                    sgreg_volume **moving_label,
                                    sgreg_volume **fixed_label,
                                    sgreg_field **truth);

/* ---- inspection outputs ---- */

/* Writes one native field file per sigma plus a JSON manifest at out_path. */
sgreg_status sgreg_segi_dump(const sgreg_volume *vol, const double *sigmas,
                             size_t sigma_count, const char *out_path);

typedef enum sgreg_plane {
    SGREG_PLANE_AXIAL = 0,
    SGREG_PLANE_CORONAL = 1,
    SGREG_PLANE_SAGITTAL = 2
} sgreg_plane;

sgreg_status sgreg_overlay(const sgreg_volume *vol, const sgreg_volume *const *labels,
                           size_t label_count, sgreg_plane plane, int64_t index,
                           const char *path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SGREG_H */
