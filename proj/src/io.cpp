#include "sgreg/io.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sgreg/nifti.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace sgreg {

namespace {

constexpr const char *kVolumeMagic = "svol 1";
constexpr const char *kFieldMagic = "sddf 1";

const char *elem_name(ElemType t) {
    switch (t) {
    case ElemType::float32: return "float32";
    case ElemType::float64: return "float64";
    case ElemType::uint8: return "uint8";
    case ElemType::int16: return "int16";
    }
    return "?";
}

std::size_t elem_size(ElemType t) {
    switch (t) {
    case ElemType::float32: return 4;
    case ElemType::float64: return 8;
    case ElemType::uint8: return 1;
    case ElemType::int16: return 2;
    }
    return 0;
}

ElemType elem_from_name(const std::string &name, const std::string &path) {
    if (name == "float32") return ElemType::float32;
    if (name == "float64") return ElemType::float64;
    if (name == "uint8") return ElemType::uint8;
    if (name == "int16") return ElemType::int16;
    raise(ErrorCode::bad_format, path + ": unsupported dtype '" + name + "'");
}

std::vector<std::uint8_t> encode_payload(const std::vector<double> &data, ElemType t,
                                         const std::string &path) {
    std::vector<std::uint8_t> bytes(data.size() * elem_size(t));
    std::uint8_t *out = bytes.data();
    for (double v : data) {
        switch (t) {
        case ElemType::float64: {
            std::memcpy(out, &v, 8);
            out += 8;
            break;
        }
        case ElemType::float32: {
            const float f = static_cast<float>(v);
            std::memcpy(out, &f, 4);
            out += 4;
            break;
        }
        case ElemType::uint8: {
            if (v != std::floor(v) || v < 0.0 || v > 255.0)
                raise(ErrorCode::invalid_argument,
                      path + ": value " + std::to_string(v) + " not representable as uint8");
            *out++ = static_cast<std::uint8_t>(v);
            break;
        }
        case ElemType::int16: {
            if (v != std::floor(v) || v < -32768.0 || v > 32767.0)
                raise(ErrorCode::invalid_argument,
                      path + ": value " + std::to_string(v) + " not representable as int16");
            const std::int16_t s = static_cast<std::int16_t>(v);
            std::memcpy(out, &s, 2);
            out += 2;
            break;
        }
        }
    }
    return bytes;
}

void decode_payload(const std::vector<std::uint8_t> &bytes, ElemType t,
                    std::vector<double> &data) {
    const std::size_t es = elem_size(t);
    const std::size_t count = bytes.size() / es;
    data.resize(count);
    const std::uint8_t *in = bytes.data();
    for (std::size_t i = 0; i < count; ++i, in += es) {
        switch (t) {
        case ElemType::float64: {
            double v;
            std::memcpy(&v, in, 8);
            data[i] = v;
            break;
        }
        case ElemType::float32: {
            float f;
            std::memcpy(&f, in, 4);
            data[i] = static_cast<double>(f);
            break;
        }
        case ElemType::uint8:
            data[i] = static_cast<double>(*in);
            break;
        case ElemType::int16: {
            std::int16_t s;
            std::memcpy(&s, in, 2);
            data[i] = static_cast<double>(s);
            break;
        }
        }
    }
}

struct TextHeader {
    std::string magic;
    std::map<std::string, std::string> fields;
};

TextHeader parse_header(const std::string &path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, path + ": cannot open");
    TextHeader h;
    if (!std::getline(in, h.magic))
        raise(ErrorCode::bad_format, path + ": empty header");
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            raise(ErrorCode::bad_format, path + ": malformed header line '" + line + "'");
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        const auto start = value.find_first_not_of(' ');
        value = start == std::string::npos ? "" : value.substr(start);
        h.fields[key] = value;
    }
    return h;
}

const std::string &field(const TextHeader &h, const std::string &key, const std::string &path) {
    const auto it = h.fields.find(key);
    if (it == h.fields.end())
        raise(ErrorCode::bad_format, path + ": missing header field '" + key + "'");
    return it->second;
}

template <typename T>
std::array<T, 3> parse_triple(const std::string &text, const std::string &path,
                              const std::string &key) {
    std::istringstream ss(text);
    std::array<T, 3> out;
    if (!(ss >> out[0] >> out[1] >> out[2]))
        raise(ErrorCode::bad_format, path + ": bad '" + key + "' value '" + text + "'");
    return out;
}

std::vector<std::uint8_t> read_payload(const std::string &header_path,
                                       const std::string &payload_name,
                                       std::size_t expected_bytes) {
    const fs::path payload = fs::path(header_path).parent_path() / payload_name;
    std::ifstream in(payload, std::ios::binary);
    if (!in) raise(ErrorCode::io_failure, payload.string() + ": cannot open payload");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() != expected_bytes)
        raise(ErrorCode::bad_format,
              payload.string() + ": truncated payload, expected " +
                  std::to_string(expected_bytes) + " bytes, found " +
                  std::to_string(bytes.size()));
    return bytes;
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

bool file_starts_with(const std::string &path, const char *prefix) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::string buf(std::strlen(prefix), '\0');
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    return in.gcount() == static_cast<std::streamsize>(buf.size()) && buf == prefix;
}

} // namespace

void atomic_write(const std::string &path, const void *data, std::size_t size) {
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(ErrorCode::io_failure, tmp.string() + ": cannot open for writing");
        out.write(static_cast<const char *>(data), static_cast<std::streamsize>(size));
        if (!out) raise(ErrorCode::io_failure, tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) raise(ErrorCode::io_failure, path + ": rename failed: " + ec.message());
}

void write_volume(const Volume &vol, const std::string &path, ElemType elem) {
    validate(vol);
    const std::string payload_name = fs::path(path).filename().string() + ".raw";
    const std::vector<std::uint8_t> payload = encode_payload(vol.data, elem, path);

    std::ostringstream h;
    h << kVolumeMagic << "\n";
    h << "kind: " << (vol.kind == VoxelKind::label ? "label" : "intensity") << "\n";
    h << "dims: " << vol.dims[0] << " " << vol.dims[1] << " " << vol.dims[2] << "\n";
    h << "spacing: " << format_double(vol.spacing[0]) << " " << format_double(vol.spacing[1])
      << " " << format_double(vol.spacing[2]) << "\n";
    h << "origin: " << format_double(vol.origin[0]) << " " << format_double(vol.origin[1])
      << " " << format_double(vol.origin[2]) << "\n";
    h << "dtype: " << elem_name(elem) << "\n";
    h << "order: i-fastest little-endian\n";
    h << "payload: " << payload_name << "\n";
    h << "bytes: " << payload.size() << "\n";

    const fs::path payload_path = fs::path(path).parent_path() / payload_name;
    atomic_write(payload_path.string(), payload.data(), payload.size());
    const std::string header = h.str();
    atomic_write(path, header.data(), header.size());
}

Volume read_volume(const std::string &path, std::optional<VoxelKind> kind) {
    if (!fs::exists(path)) raise(ErrorCode::io_failure, path + ": no such file");

    Volume vol;
    if (file_starts_with(path, kVolumeMagic)) {
        const TextHeader h = parse_header(path);
        const auto dims = parse_triple<std::int64_t>(field(h, "dims", path), path, "dims");
        const auto spacing = parse_triple<double>(field(h, "spacing", path), path, "spacing");
        const auto origin = parse_triple<double>(field(h, "origin", path), path, "origin");
        const ElemType elem = elem_from_name(field(h, "dtype", path), path);
        const std::string &kind_name = field(h, "kind", path);
        if (kind_name != "intensity" && kind_name != "label")
            raise(ErrorCode::bad_format, path + ": unknown kind '" + kind_name + "'");

        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            raise(ErrorCode::bad_format, path + ": nonpositive dims");
        const std::size_t count =
            static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
            static_cast<std::size_t>(dims[2]);
        const auto bytes = read_payload(path, field(h, "payload", path), count * elem_size(elem));

        vol.dims = dims;
        vol.spacing = spacing;
        vol.origin = origin;
        vol.kind = kind_name == "label" ? VoxelKind::label : VoxelKind::intensity;
        decode_payload(bytes, elem, vol.data);
    } else if (looks_like_nifti(path)) {
        vol = read_nifti(path);
    } else {
        raise(ErrorCode::bad_format, path + ": unrecognized volume format");
    }

    if (kind) vol.kind = *kind;
    validate(vol);
    return vol;
}

void write_field(const DisplacementField &f, const std::string &path) {
    validate(f);
    const std::string payload_name = fs::path(path).filename().string() + ".raw";
    const std::vector<std::uint8_t> payload =
        encode_payload(f.vectors, ElemType::float64, path);

    std::ostringstream h;
    h << kFieldMagic << "\n";
    h << "dims: " << f.dims[0] << " " << f.dims[1] << " " << f.dims[2] << "\n";
    h << "spacing: " << format_double(f.spacing[0]) << " " << format_double(f.spacing[1])
      << " " << format_double(f.spacing[2]) << "\n";
    h << "components: 3\n";
    h << "dtype: float64\n";
    h << "order: component-fastest i-fastest little-endian\n";
    h << "payload: " << payload_name << "\n";
    h << "bytes: " << payload.size() << "\n";

    const fs::path payload_path = fs::path(path).parent_path() / payload_name;
    atomic_write(payload_path.string(), payload.data(), payload.size());
    const std::string header = h.str();
    atomic_write(path, header.data(), header.size());
}

DisplacementField read_field(const std::string &path) {
    if (!fs::exists(path)) raise(ErrorCode::io_failure, path + ": no such file");
    if (!file_starts_with(path, kFieldMagic))
        raise(ErrorCode::bad_format, path + ": not a displacement-field file");
    const TextHeader h = parse_header(path);
    const auto dims = parse_triple<std::int64_t>(field(h, "dims", path), path, "dims");
    const auto spacing = parse_triple<double>(field(h, "spacing", path), path, "spacing");
    if (field(h, "components", path) != "3")
        raise(ErrorCode::bad_format, path + ": component count must be 3, got '" +
                                         field(h, "components", path) + "'");
    if (field(h, "dtype", path) != "float64")
        raise(ErrorCode::bad_format, path + ": field dtype must be float64");
    if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
        raise(ErrorCode::bad_format, path + ": nonpositive dims");

    const std::size_t count = 3 * static_cast<std::size_t>(dims[0]) *
                              static_cast<std::size_t>(dims[1]) *
                              static_cast<std::size_t>(dims[2]);
    const auto bytes = read_payload(path, field(h, "payload", path), count * 8);

    DisplacementField f;
    f.dims = dims;
    f.spacing = spacing;
    decode_payload(bytes, ElemType::float64, f.vectors);
    validate(f);
    return f;
}

RegistrationConfig read_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::io_failure, path + ": cannot open config");
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        raise(ErrorCode::bad_format, path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) raise(ErrorCode::bad_format, path + ": config must be a JSON object");

    RegistrationConfig cfg;
    try {
        for (const auto &[key, value] : j.items()) {
            if (key == "sigmas")
                cfg.sigmas = value.get<std::vector<double>>();
            else if (key == "lambda1")
                cfg.lambda1 = value.get<double>();
            else if (key == "lambda2")
                cfg.lambda2 = value.get<double>();
            else if (key == "levels")
                cfg.levels = value.get<int>();
            else if (key == "iters_per_level")
                cfg.iters_per_level = value.get<int>();
            else if (key == "step_size")
                cfg.step_size = value.get<double>();
            else if (key == "beta1")
                cfg.beta1 = value.get<double>();
            else if (key == "beta2")
                cfg.beta2 = value.get<double>();
            else if (key == "adam_eps")
                cfg.adam_eps = value.get<double>();
            else if (key == "grad_eps")
                cfg.grad_eps = value.get<double>();
            else if (key == "cos_eps")
                cfg.cos_eps = value.get<double>();
            else if (key == "update_sigma")
                cfg.update_sigma = value.get<double>();
            else if (key == "presmooth_sigma")
                cfg.presmooth_sigma = value.get<double>();
            else if (key == "sample_jitter")
                cfg.sample_jitter = value.get<double>();
            else if (key == "symmetric_similarity")
                cfg.symmetric_similarity = value.get<bool>();
            else if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else
                raise(ErrorCode::bad_format, path + ": unknown config key '" + key + "'");
        }
    } catch (const json::exception &e) {
        raise(ErrorCode::bad_format, path + ": bad config value: " + e.what());
    }
    validate(cfg);
    return cfg;
}

void write_config(const RegistrationConfig &cfg, const std::string &path) {
    json j{{"sigmas", cfg.sigmas},
           {"lambda1", cfg.lambda1},
           {"lambda2", cfg.lambda2},
           {"levels", cfg.levels},
           {"iters_per_level", cfg.iters_per_level},
           {"step_size", cfg.step_size},
           {"beta1", cfg.beta1},
           {"beta2", cfg.beta2},
           {"adam_eps", cfg.adam_eps},
           {"grad_eps", cfg.grad_eps},
           {"cos_eps", cfg.cos_eps},
           {"update_sigma", cfg.update_sigma},
           {"presmooth_sigma", cfg.presmooth_sigma},
           {"sample_jitter", cfg.sample_jitter},
           {"symmetric_similarity", cfg.symmetric_similarity},
           {"seed", cfg.seed}};
    const std::string text = j.dump(2) + "\n";
    atomic_write(path, text.data(), text.size());
}

void write_trace(const OptimizationTrace &trace, const std::string &path) {
    std::ostringstream out;
    for (const TraceRecord &r : trace.records) {
        json j{{"level", r.level},
               {"iter", r.iteration},
               {"l_sg", r.loss.l_sg},
               {"l_cc", r.loss.l_cc},
               {"psi_u", r.loss.psi_u},
               {"psi_v", r.loss.psi_v},
               {"total", r.loss.total},
               {"max_disp", r.max_displacement},
               {"step", r.step_size}};
        out << j.dump() << "\n";
    }
    const std::string text = out.str();
    atomic_write(path, text.data(), text.size());
}

std::string format_eval_report(const EvalReport &report) {
    char buf[128];
    std::ostringstream out;
    out << "structure      DS (%)          ASD (mm)\n";
    for (const EvalEntry &e : report.entries) {
        std::snprintf(buf, sizeof buf, "%-14lld %-15.2f %.2f\n",
                      static_cast<long long>(e.structure_id), 100.0 * e.dice, e.asd_mm);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-14s %.2f±%.2f     %.2f±%.2f\n", "mean",
                  100.0 * report.dice_mean, 100.0 * report.dice_stddev, report.asd_mean,
                  report.asd_stddev);
    out << buf;
    return out.str();
}

void write_eval_report(const EvalReport &report, const std::string &text_path,
                       const std::string &json_path) {
    const std::string text = format_eval_report(report);
    atomic_write(text_path, text.data(), text.size());

    if (json_path.empty()) return;
    json entries = json::array();
    for (const EvalEntry &e : report.entries)
        entries.push_back({{"id", e.structure_id}, {"dice", e.dice}, {"asd_mm", e.asd_mm}});
    json j{{"entries", entries},
           {"dice_mean", report.dice_mean},
           {"dice_stddev", report.dice_stddev},
           {"asd_mean", report.asd_mean},
           {"asd_stddev", report.asd_stddev}};
    const std::string jtext = j.dump(2) + "\n";
    atomic_write(json_path, jtext.data(), jtext.size());
}

void emit_overlay(const Volume &fixed, const std::vector<const Volume *> &labels,
                  SlicePlane plane, std::int64_t index, const std::string &path) {
    const Dims &d = fixed.dims;
    std::int64_t width = 0, height = 0, limit = 0;
    switch (plane) {
    case SlicePlane::axial:
        width = d[0]; height = d[1]; limit = d[2];
        break;
    case SlicePlane::coronal:
        width = d[0]; height = d[2]; limit = d[1];
        break;
    case SlicePlane::sagittal:
        width = d[1]; height = d[2]; limit = d[0];
        break;
    }
    if (index < 0 || index >= limit)
        raise(ErrorCode::invalid_argument,
              "overlay: slice index " + std::to_string(index) + " out of range [0, " +
                  std::to_string(limit - 1) + "]");

    auto voxel_of = [&](std::int64_t px, std::int64_t py) -> std::array<std::int64_t, 3> {
        switch (plane) {
        case SlicePlane::axial: return {px, py, index};
        case SlicePlane::coronal: return {px, index, py};
        default: return {index, px, py};
        }
    };

    // a voxel sits on a contour when its label differs from some six-neighbor
    auto on_surface = [](const Volume &lab, std::int64_t i, std::int64_t j, std::int64_t k) {
        const double v = lab.at(i, j, k);
        if (v <= 0.0) return false;
        const Dims &ld = lab.dims;
        const std::int64_t x[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
            std::int64_t lo[3] = {i, j, k}, hi[3] = {i, j, k};
            --lo[a];
            ++hi[a];
            if (x[a] == 0 || x[a] == ld[a] - 1) return true;
            if (lab.at(lo[0], lo[1], lo[2]) != v || lab.at(hi[0], hi[1], hi[2]) != v)
                return true;
        }
        return false;
    };

    static const std::array<std::array<std::uint8_t, 3>, 6> palette{{{255, 0, 0},
                                                                     {0, 80, 255},
                                                                     {0, 200, 0},
                                                                     {255, 220, 0},
                                                                     {255, 0, 255},
                                                                     {0, 220, 220}}};

    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3 * width * height));
    for (std::int64_t py = 0; py < height; ++py)
        for (std::int64_t px = 0; px < width; ++px) {
            const auto v = voxel_of(px, py);
            double g = fixed.at(v[0], v[1], v[2]);
            g = std::min(std::max(g, 0.0), 1.0);
            const auto gray = static_cast<std::uint8_t>(std::lround(255.0 * g));
            std::uint8_t *p = &rgb[static_cast<std::size_t>(3 * (py * width + px))];
            p[0] = p[1] = p[2] = gray;
            for (std::size_t li = 0; li < labels.size(); ++li) {
                const Volume &lab = *labels[li];
                if (lab.dims != d)
                    raise(ErrorCode::dimension_mismatch, "overlay: label grid differs from volume");
                if (on_surface(lab, v[0], v[1], v[2])) {
                    const auto &c = palette[li % palette.size()];
                    p[0] = c[0];
                    p[1] = c[1];
                    p[2] = c[2];
                }
            }
        }

    std::ostringstream out;
    out << "P6\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char *>(rgb.data()),
              static_cast<std::streamsize>(rgb.size()));
    const std::string bytes = out.str();
    atomic_write(path, bytes.data(), bytes.size());
}

} // namespace sgreg
