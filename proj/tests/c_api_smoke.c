/* Exercises the shared library from plain C: handle lifecycle, a tiny
 * registration, and error reporting. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "sgreg/sgreg.h"

static int fail(const char *what) {
    fprintf(stderr, "c_api_smoke: %s: %s\n", what, sgreg_last_error());
    return 1;
}

int main(void) {
    if (strcmp(sgreg_version(), "") == 0) return 1;

    sgreg_phantom_spec spec;
    sgreg_phantom_spec_init(&spec);
    spec.dims[0] = spec.dims[1] = spec.dims[2] = 16;
    spec.shape = SGREG_SHAPE_SPHERE;
    spec.remap = SGREG_REMAP_INVERT;
    spec.deform = SGREG_DEFORM_TRANSLATION;
    spec.translation[0] = 1.0;
    spec.seed = 11;

    sgreg_volume *moving = NULL, *fixed = NULL, *mlab = NULL, *flab = NULL;
    sgreg_field *truth = NULL;
    if (sgreg_phantom_generate(&spec, &moving, &fixed, &mlab, &flab, &truth) != SGREG_OK)
        return fail("phantom");

    int64_t dims[3];
    if (sgreg_volume_dims(moving, dims) != SGREG_OK) return fail("dims");
    if (dims[0] != 16 || dims[1] != 16 || dims[2] != 16) return 1;

    sgreg_config *cfg = NULL;
    if (sgreg_config_create(&cfg) != SGREG_OK) return fail("config");
    if (sgreg_config_set_levels(cfg, 2) != SGREG_OK) return fail("config levels");
    if (sgreg_config_set_iters(cfg, 5) != SGREG_OK) return fail("config iters");

    sgreg_field *fwd = NULL, *bwd = NULL;
    if (sgreg_register(moving, fixed, cfg, &fwd, &bwd, NULL) != SGREG_OK)
        return fail("register");

    sgreg_volume *moved = NULL;
    if (sgreg_warp(moving, fwd, 0, &moved) != SGREG_OK) return fail("warp");

    double ds = 0.0;
    if (sgreg_dice(mlab, flab, 1, &ds) != SGREG_OK) return fail("dice");
    if (!(ds > 0.0 && ds <= 1.0)) return 1;

    /* deliberate failure: mismatched grids must give a typed status and a
     * nonempty message */
    {
        int64_t small[3] = {4, 4, 4};
        sgreg_volume *tiny = NULL;
        if (sgreg_volume_create(small, NULL, NULL, SGREG_KIND_INTENSITY, NULL, &tiny) != SGREG_OK)
            return fail("create");
        sgreg_volume *out = NULL;
        sgreg_status st = sgreg_warp(tiny, fwd, 0, &out);
        if (st != SGREG_ERR_DIMENSION_MISMATCH) return 1;
        if (strlen(sgreg_last_error()) == 0) return 1;
        sgreg_volume_destroy(tiny);
    }

    sgreg_volume_destroy(moved);
    sgreg_field_destroy(fwd);
    sgreg_field_destroy(bwd);
    sgreg_config_destroy(cfg);
    sgreg_volume_destroy(moving);
    sgreg_volume_destroy(fixed);
    sgreg_volume_destroy(mlab);
    sgreg_volume_destroy(flab);
    sgreg_field_destroy(truth);
    printf("c_api_smoke: ok\n");
    return 0;
}
