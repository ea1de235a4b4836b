// sgreg command-line front end. Talks to the engine exclusively through the
// C API in sgreg/sgreg.h.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sgreg/sgreg.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct VolumeDeleter {
    void operator()(sgreg_volume *v) const { sgreg_volume_destroy(v); }
};
struct FieldDeleter {
    void operator()(sgreg_field *f) const { sgreg_field_destroy(f); }
};
struct ConfigDeleter {
    void operator()(sgreg_config *c) const { sgreg_config_destroy(c); }
};
using VolumePtr = std::unique_ptr<sgreg_volume, VolumeDeleter>;
using FieldPtr = std::unique_ptr<sgreg_field, FieldDeleter>;
using ConfigPtr = std::unique_ptr<sgreg_config, ConfigDeleter>;

struct CliError {
    std::string stage;
    std::string message;
};

void check(sgreg_status status, const std::string &stage) {
    if (status != SGREG_OK)
        throw CliError{stage, std::string(sgreg_status_name(status)) + ": " + sgreg_last_error()};
}

// Relative output paths land under $SGREG_OUT_DIR when it is set.
std::string out_path(const std::string &path) {
    const char *base = std::getenv("SGREG_OUT_DIR");
    if (!base || !*base) return path;
    fs::path p(path);
    if (p.is_absolute()) return path;
    fs::path full = fs::path(base) / p;
    if (full.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(full.parent_path(), ec);
    }
    return full.string();
}

std::vector<double> parse_number_list(const std::string &text, const std::string &what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (...) {
            throw CliError{"arguments", "bad " + what + " entry '" + item + "'"};
        }
    }
    if (out.empty()) throw CliError{"arguments", what + " list is empty"};
    return out;
}

std::vector<int64_t> parse_id_list(const std::string &text) {
    std::vector<int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stoll(item));
        } catch (...) {
            throw CliError{"arguments", "bad structure id '" + item + "'"};
        }
    }
    if (out.empty()) throw CliError{"arguments", "id list is empty"};
    return out;
}

VolumePtr load_volume(const std::string &path, sgreg_kind kind, const std::string &stage) {
    sgreg_volume *raw = nullptr;
    check(sgreg_volume_read(path.c_str(), kind, &raw), stage);
    return VolumePtr(raw);
}

int run_register(const std::string &moving_path, const std::string &fixed_path,
                 const std::string &out_fwd, const std::string &out_bwd,
                 const std::string &out_moved, const std::string &config_path,
                 const std::string &sigmas, double lambda1, double lambda2, int levels,
                 int iters, std::uint64_t seed, bool symmetric, bool resample,
                 const std::string &trace_path, const CLI::App &cmd) {
    ConfigPtr cfg;
    {
        sgreg_config *raw = nullptr;
        if (!config_path.empty())
            check(sgreg_config_load(config_path.c_str(), &raw), "config");
        else
            check(sgreg_config_create(&raw), "config");
        cfg.reset(raw);
    }
    if (cmd.count("--sigmas")) {
        const std::vector<double> s = parse_number_list(sigmas, "sigma");
        check(sgreg_config_set_sigmas(cfg.get(), s.data(), s.size()), "config");
    }
    if (cmd.count("--lambda1")) check(sgreg_config_set_lambda1(cfg.get(), lambda1), "config");
    if (cmd.count("--lambda2")) check(sgreg_config_set_lambda2(cfg.get(), lambda2), "config");
    if (cmd.count("--levels")) check(sgreg_config_set_levels(cfg.get(), levels), "config");
    if (cmd.count("--iters")) check(sgreg_config_set_iters(cfg.get(), iters), "config");
    if (cmd.count("--seed")) check(sgreg_config_set_seed(cfg.get(), seed), "config");
    if (symmetric) check(sgreg_config_set_symmetric(cfg.get(), 1), "config");

    VolumePtr moving = load_volume(moving_path, SGREG_KIND_INTENSITY, "read moving");
    VolumePtr fixed = load_volume(fixed_path, SGREG_KIND_INTENSITY, "read fixed");

    if (resample) {
        sgreg_volume *resampled = nullptr;
        check(sgreg_resample_to(moving.get(), fixed.get(), &resampled), "resample");
        moving.reset(resampled);
    }

    sgreg_field *fwd_raw = nullptr, *bwd_raw = nullptr;
    const std::string trace = trace_path.empty() ? "" : out_path(trace_path);
    check(sgreg_register(moving.get(), fixed.get(), cfg.get(), &fwd_raw, &bwd_raw,
                         trace.empty() ? nullptr : trace.c_str()),
          "register");
    FieldPtr fwd(fwd_raw), bwd(bwd_raw);

    check(sgreg_field_write(fwd.get(), out_path(out_fwd).c_str()), "write forward ddf");
    check(sgreg_field_write(bwd.get(), out_path(out_bwd).c_str()), "write backward ddf");

    sgreg_volume *moved_raw = nullptr;
    check(sgreg_warp(moving.get(), fwd.get(), 0, &moved_raw), "warp moving");
    VolumePtr moved(moved_raw);
    check(sgreg_volume_write(moved.get(), out_path(out_moved).c_str()), "write moved");
    return 0;
}

int run_warp(const std::string &in_path, const std::string &ddf_path,
             const std::string &output, bool nearest) {
    VolumePtr vol = load_volume(in_path, SGREG_KIND_AUTO, "read input");
    sgreg_field *field_raw = nullptr;
    check(sgreg_field_read(ddf_path.c_str(), &field_raw), "read ddf");
    FieldPtr field(field_raw);

    sgreg_volume *warped_raw = nullptr;
    check(sgreg_warp(vol.get(), field.get(), nearest ? 1 : 0, &warped_raw), "warp");
    VolumePtr warped(warped_raw);
    check(sgreg_volume_write(warped.get(), out_path(output).c_str()), "write output");
    return 0;
}

int run_eval(const std::string &a_path, const std::string &b_path, const std::string &ids_text,
             const std::string &report_path) {
    VolumePtr a = load_volume(a_path, SGREG_KIND_LABEL, "read labels a");
    VolumePtr b = load_volume(b_path, SGREG_KIND_LABEL, "read labels b");
    const std::vector<int64_t> ids = parse_id_list(ids_text);

    const std::string text_out = out_path(report_path);
    const std::string json_out = text_out + ".json";
    check(sgreg_eval_report(a.get(), b.get(), ids.data(), ids.size(), text_out.c_str(),
                            json_out.c_str()),
          "evaluate");

    std::ifstream in(text_out);
    std::cout << in.rdbuf();
    return 0;
}

sgreg_phantom_spec parse_phantom_spec(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw CliError{"read spec", path + ": cannot open"};
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw CliError{"read spec", path + ": invalid JSON: " + e.what()};
    }

    sgreg_phantom_spec spec;
    sgreg_phantom_spec_init(&spec);

    auto triple = [&](const json &value, double out[3], const std::string &key) {
        if (!value.is_array() || value.size() != 3)
            throw CliError{"read spec", key + " must be an array of 3 numbers"};
        for (int i = 0; i < 3; ++i) out[i] = value[static_cast<std::size_t>(i)].get<double>();
    };

    try {
        for (const auto &[key, value] : j.items()) {
            if (key == "dims") {
                if (!value.is_array() || value.size() != 3)
                    throw CliError{"read spec", "dims must be an array of 3 integers"};
                for (int i = 0; i < 3; ++i)
                    spec.dims[i] = value[static_cast<std::size_t>(i)].get<int64_t>();
            } else if (key == "spacing") {
                triple(value, spec.spacing, key);
            } else if (key == "shape") {
                const std::string s = value.get<std::string>();
                if (s == "sphere") spec.shape = SGREG_SHAPE_SPHERE;
                else if (s == "two-spheres") spec.shape = SGREG_SHAPE_TWO_SPHERES;
                else if (s == "cuboid-with-notch") spec.shape = SGREG_SHAPE_CUBOID_NOTCH;
                else throw CliError{"read spec", "unknown shape '" + s + "'"};
            } else if (key == "remap") {
                const std::string s = value.get<std::string>();
                if (s == "identity") spec.remap = SGREG_REMAP_IDENTITY;
                else if (s == "invert") spec.remap = SGREG_REMAP_INVERT;
                else if (s == "square") spec.remap = SGREG_REMAP_SQUARE;
                else if (s == "piecewise-monotone") spec.remap = SGREG_REMAP_PIECEWISE_MONOTONE;
                else if (s == "contrast-fold") spec.remap = SGREG_REMAP_CONTRAST_FOLD;
                else throw CliError{"read spec", "unknown remap '" + s + "'"};
            } else if (key == "deformation") {
                const std::string s = value.get<std::string>();
                if (s == "zero") spec.deform = SGREG_DEFORM_ZERO;
                else if (s == "translation") spec.deform = SGREG_DEFORM_TRANSLATION;
                else if (s == "gaussian-bump") spec.deform = SGREG_DEFORM_GAUSSIAN_BUMP;
                else throw CliError{"read spec", "unknown deformation '" + s + "'"};
            } else if (key == "translation") {
                triple(value, spec.translation, key);
            } else if (key == "bump_center") {
                triple(value, spec.bump_center, key);
            } else if (key == "bump_amplitude") {
                triple(value, spec.bump_amplitude, key);
            } else if (key == "bump_sigma") {
                spec.bump_sigma = value.get<double>();
            } else if (key == "noise_sigma") {
                spec.noise_sigma = value.get<double>();
            } else if (key == "seed") {
                spec.seed = value.get<uint64_t>();
            } else {
                throw CliError{"read spec", "unknown spec key '" + key + "'"};
            }
        }
    } catch (const json::exception &e) {
        throw CliError{"read spec", path + ": bad value: " + e.what()};
    }
    return spec;
}

int run_phantom(const std::string &spec_path, const std::string &out_dir) {
    const sgreg_phantom_spec spec = parse_phantom_spec(spec_path);

    const fs::path dir = out_path(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw CliError{"output", dir.string() + ": cannot create: " + ec.message()};

    sgreg_volume *moving = nullptr, *fixed = nullptr, *mlabel = nullptr, *flabel = nullptr;
    sgreg_field *truth = nullptr;
    check(sgreg_phantom_generate(&spec, &moving, &fixed, &mlabel, &flabel, &truth), "generate");
    VolumePtr pm(moving), pf(fixed), pml(mlabel), pfl(flabel);
    FieldPtr pt(truth);

    check(sgreg_volume_write(pm.get(), (dir / "moving.vol").string().c_str()), "write moving");
    check(sgreg_volume_write(pf.get(), (dir / "fixed.vol").string().c_str()), "write fixed");
    check(sgreg_volume_write(pml.get(), (dir / "moving_label.vol").string().c_str()),
          "write moving label");
    check(sgreg_volume_write(pfl.get(), (dir / "fixed_label.vol").string().c_str()),
          "write fixed label");
    check(sgreg_field_write(pt.get(), (dir / "truth.ddf").string().c_str()), "write truth");
    return 0;
}

int run_segi_dump(const std::string &in_path, const std::string &sigmas_text,
                  const std::string &output) {
    VolumePtr vol = load_volume(in_path, SGREG_KIND_INTENSITY, "read input");
    const std::vector<double> sigmas = parse_number_list(sigmas_text, "sigma");
    check(sgreg_segi_dump(vol.get(), sigmas.data(), sigmas.size(), out_path(output).c_str()),
          "segi dump");
    return 0;
}

int run_overlay(const std::string &in_path, const std::string &labels_text,
                const std::string &plane_name, int64_t index, const std::string &output) {
    VolumePtr vol = load_volume(in_path, SGREG_KIND_INTENSITY, "read input");

    std::vector<VolumePtr> labels;
    std::vector<const sgreg_volume *> label_ptrs;
    if (!labels_text.empty()) {
        std::stringstream ss(labels_text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            labels.push_back(load_volume(item, SGREG_KIND_LABEL, "read label"));
            label_ptrs.push_back(labels.back().get());
        }
    }

    sgreg_plane plane;
    if (plane_name == "axial") plane = SGREG_PLANE_AXIAL;
    else if (plane_name == "coronal") plane = SGREG_PLANE_CORONAL;
    else if (plane_name == "sagittal") plane = SGREG_PLANE_SAGITTAL;
    else throw CliError{"arguments", "unknown plane '" + plane_name + "'"};

    check(sgreg_overlay(vol.get(), label_ptrs.empty() ? nullptr : label_ptrs.data(),
                        label_ptrs.size(), plane, index, out_path(output).c_str()),
          "overlay");
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"sgreg - deformable multi-modality 3-D registration"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(sgreg_version()));

    // register
    auto *reg = app.add_subcommand("register", "Optimize forward/backward DDFs for a pair");
    std::string moving, fixed, out_fwd, out_bwd, out_moved, config, sigmas, trace;
    double lambda1 = 0.1, lambda2 = 1.0;
    int levels = 3, iters = 200;
    std::uint64_t seed = 0;
    bool symmetric = false, resample = false;
    reg->add_option("--moving", moving, "Moving intensity volume")->required();
    reg->add_option("--fixed", fixed, "Fixed intensity volume")->required();
    reg->add_option("--out-ddf-forward", out_fwd, "Output forward field")->required();
    reg->add_option("--out-ddf-backward", out_bwd, "Output backward field")->required();
    reg->add_option("--out-moved", out_moved, "Output warped moving volume")->required();
    reg->add_option("--config", config, "JSON config file");
    reg->add_option("--sigmas", sigmas, "Comma-separated SEGI scales (default 1,1.5,3)");
    reg->add_option("--lambda1", lambda1, "Cycle-consistency weight (default 0.1)");
    reg->add_option("--lambda2", lambda2, "Smoothness weight (default 1; use 10 for cardiac-like data)");
    reg->add_option("--levels", levels, "Pyramid levels (default 3)");
    reg->add_option("--iters", iters, "Iterations per level (default 200)");
    reg->add_option("--seed", seed, "Seed recorded with the run");
    reg->add_flag("--symmetric", symmetric, "Also drive the backward field by similarity");
    reg->add_flag("--resample-to-fixed", resample, "Trilinearly regrid moving onto fixed first");
    reg->add_option("--trace", trace, "Write per-iteration JSON records here");

    // warp
    auto *wrp = app.add_subcommand("warp", "Apply a displacement field to a volume");
    std::string warp_in, warp_ddf, warp_out;
    bool nearest = false;
    wrp->add_option("--in", warp_in, "Input volume")->required();
    wrp->add_option("--ddf", warp_ddf, "Displacement field")->required();
    wrp->add_option("--out", warp_out, "Output volume")->required();
    wrp->add_flag("--nearest", nearest, "Force nearest-neighbor sampling");

    // eval
    auto *evl = app.add_subcommand("eval", "Dice/ASD between two label volumes");
    std::string eval_a, eval_b, eval_ids, eval_out;
    evl->add_option("--a", eval_a, "First label volume")->required();
    evl->add_option("--b", eval_b, "Second label volume")->required();
    evl->add_option("--ids", eval_ids, "Comma-separated structure ids")->required();
    evl->add_option("--out", eval_out, "Report path (JSON twin written alongside)")->required();

    // phantom
    auto *phm = app.add_subcommand("phantom", "Generate a synthetic ground-truth pair");
    std::string phantom_spec, phantom_dir;
    phm->add_option("--spec", phantom_spec, "Phantom spec JSON")->required();
    phm->add_option("--out-dir", phantom_dir, "Output directory")->required();

    // segi-dump
    auto *dump = app.add_subcommand("segi-dump", "Write the SEGI fields of a volume");
    std::string dump_in, dump_sigmas = "1,1.5,3", dump_out;
    dump->add_option("--in", dump_in, "Input intensity volume")->required();
    dump->add_option("--sigmas", dump_sigmas, "Comma-separated scales");
    dump->add_option("--out", dump_out, "Manifest path; fields written alongside")->required();

    // overlay
    auto *ovl = app.add_subcommand("overlay", "Slice image with label contours");
    std::string ovl_in, ovl_labels, ovl_plane = "axial", ovl_out;
    std::int64_t ovl_index = 0;
    ovl->add_option("--in", ovl_in, "Background intensity volume")->required();
    ovl->add_option("--labels", ovl_labels, "Comma-separated label volumes");
    ovl->add_option("--plane", ovl_plane, "axial | coronal | sagittal");
    ovl->add_option("--index", ovl_index, "Slice index")->required();
    ovl->add_option("--out", ovl_out, "Output PPM image")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (reg->parsed())
            return run_register(moving, fixed, out_fwd, out_bwd, out_moved, config, sigmas,
                                lambda1, lambda2, levels, iters, seed, symmetric, resample,
                                trace, *reg);
        if (wrp->parsed()) return run_warp(warp_in, warp_ddf, warp_out, nearest);
        if (evl->parsed()) return run_eval(eval_a, eval_b, eval_ids, eval_out);
        if (phm->parsed()) return run_phantom(phantom_spec, phantom_dir);
        if (dump->parsed()) return run_segi_dump(dump_in, dump_sigmas, dump_out);
        if (ovl->parsed()) return run_overlay(ovl_in, ovl_labels, ovl_plane, ovl_index, ovl_out);
    } catch (const CliError &e) {
        std::cerr << "sgreg: " << e.stage << ": " << e.message << "\n";
        return 2;
    }
    return 0;
}
