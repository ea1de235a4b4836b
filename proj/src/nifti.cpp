#include "sgreg/nifti.hpp"

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

namespace sgreg {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::int32_t kSizeofHdr = 348;

// NIfTI-1 datatype codes
constexpr short kDtUint8 = 2;
constexpr short kDtInt16 = 4;
constexpr short kDtFloat32 = 16;
constexpr short kDtFloat64 = 64;

template <typename T> T swap_bytes(T v) {
    T out;
    auto *src = reinterpret_cast<const unsigned char *>(&v);
    auto *dst = reinterpret_cast<unsigned char *>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
}

template <typename T> T read_at(const std::vector<unsigned char> &buf, std::size_t offset,
                                bool swap) {
    T v;
    std::memcpy(&v, buf.data() + offset, sizeof(T));
    return swap ? swap_bytes(v) : v;
}

class GzReader {
public:
    explicit GzReader(const std::string &path) : file_(gzopen(path.c_str(), "rb")) {
        if (!file_) raise(ErrorCode::io_failure, path + ": cannot open");
    }
    ~GzReader() {
        if (file_) gzclose(file_);
    }
    GzReader(const GzReader &) = delete;
    GzReader &operator=(const GzReader &) = delete;

    bool read_exact(void *dst, std::size_t size) {
        std::size_t got = 0;
        auto *out = static_cast<unsigned char *>(dst);
        while (got < size) {
            const unsigned chunk =
                static_cast<unsigned>(std::min<std::size_t>(size - got, 1u << 24));
            const int n = gzread(file_, out + got, chunk);
            if (n <= 0) return false;
            got += static_cast<std::size_t>(n);
        }
        return true;
    }

    bool skip(std::size_t size) {
        std::vector<unsigned char> sink(std::min<std::size_t>(size, 1u << 16));
        std::size_t left = size;
        while (left > 0) {
            const std::size_t chunk = std::min(left, sink.size());
            if (!read_exact(sink.data(), chunk)) return false;
            left -= chunk;
        }
        return true;
    }

private:
    gzFile file_;
};

} // namespace

bool looks_like_nifti(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    unsigned char head[4] = {0, 0, 0, 0};
    in.read(reinterpret_cast<char *>(head), 4);
    if (in.gcount() < 4) return false;
    if (head[0] == 0x1f && head[1] == 0x8b) return true; // gzip stream
    std::int32_t first;
    std::memcpy(&first, head, 4);
    return first == kSizeofHdr || swap_bytes(first) == kSizeofHdr;
}

Volume read_nifti(const std::string &path, NiftiMeta *meta_out) {
    GzReader reader(path);

    std::vector<unsigned char> hdr(kHeaderSize);
    if (!reader.read_exact(hdr.data(), kHeaderSize))
        raise(ErrorCode::bad_format, path + ": file shorter than a NIfTI-1 header");

    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, hdr.data(), 4);
    bool swap = false;
    if (sizeof_hdr != kSizeofHdr) {
        if (swap_bytes(sizeof_hdr) == kSizeofHdr)
            swap = true;
        else
            raise(ErrorCode::bad_format, path + ": not a NIfTI-1 file (sizeof_hdr)");
    }

    const char m0 = static_cast<char>(hdr[344]);
    const char m1 = static_cast<char>(hdr[345]);
    const char m2 = static_cast<char>(hdr[346]);
    if (!(m0 == 'n' && m1 == '+' && m2 == '1'))
        raise(ErrorCode::bad_format,
              path + ": unsupported NIfTI magic (only single-file \"n+1\" is readable)");

    short dim[8];
    for (int i = 0; i < 8; ++i)
        dim[i] = read_at<short>(hdr, 40 + 2 * static_cast<std::size_t>(i), swap);
    if (dim[0] < 1 || dim[0] > 7)
        raise(ErrorCode::bad_format, path + ": bad dim[0] = " + std::to_string(dim[0]));
    for (int i = 4; i <= dim[0] && i < 8; ++i)
        if (dim[i] > 1)
            raise(ErrorCode::bad_format,
                  path + ": only 3-D volumes are supported (dim[" + std::to_string(i) +
                      "] = " + std::to_string(dim[i]) + ")");

    Dims dims{std::max<short>(dim[1], 1), std::max<short>(dim[2], 1),
              std::max<short>(dim[3], 1)};

    const short datatype = read_at<short>(hdr, 70, swap);
    std::size_t elem = 0;
    switch (datatype) {
    case kDtUint8: elem = 1; break;
    case kDtInt16: elem = 2; break;
    case kDtFloat32: elem = 4; break;
    case kDtFloat64: elem = 8; break;
    default:
        raise(ErrorCode::bad_format,
              path + ": unsupported NIfTI datatype " + std::to_string(datatype) +
                  " (supported: uint8, int16, float32, float64)");
    }

    float pixdim[4];
    for (int i = 0; i < 4; ++i)
        pixdim[i] = read_at<float>(hdr, 76 + 4 * static_cast<std::size_t>(i), swap);
    Vec3 spacing;
    for (int a = 0; a < 3; ++a) {
        spacing[a] = static_cast<double>(pixdim[a + 1]);
        if (!(spacing[a] > 0.0))
            raise(ErrorCode::bad_format,
                  path + ": non-positive pixdim[" + std::to_string(a + 1) + "]");
    }

    const float vox_offset = read_at<float>(hdr, 108, swap);
    const float scl_slope = read_at<float>(hdr, 112, swap);
    const float scl_inter = read_at<float>(hdr, 116, swap);
    const short qform_code = read_at<short>(hdr, 252, swap);
    const short sform_code = read_at<short>(hdr, 254, swap);

    NiftiMeta meta;
    meta.datatype = datatype;
    meta.scl_slope = scl_slope;
    meta.scl_inter = scl_inter;
    meta.qform_code = qform_code;
    meta.sform_code = sform_code;
    meta.byte_swapped = swap;
    for (int i = 0; i < 4; ++i) {
        meta.srow_x[static_cast<std::size_t>(i)] =
            read_at<float>(hdr, 280 + 4 * static_cast<std::size_t>(i), swap);
        meta.srow_y[static_cast<std::size_t>(i)] =
            read_at<float>(hdr, 296 + 4 * static_cast<std::size_t>(i), swap);
        meta.srow_z[static_cast<std::size_t>(i)] =
            read_at<float>(hdr, 312 + 4 * static_cast<std::size_t>(i), swap);
    }
    {
        std::ifstream probe(path, std::ios::binary);
        unsigned char head[2] = {0, 0};
        probe.read(reinterpret_cast<char *>(head), 2);
        meta.gzipped = probe.gcount() == 2 && head[0] == 0x1f && head[1] == 0x8b;
    }

    // origin: qform offset when set, else the sform translation column
    Vec3 origin{0.0, 0.0, 0.0};
    if (qform_code > 0) {
        origin = {static_cast<double>(read_at<float>(hdr, 268, swap)),
                  static_cast<double>(read_at<float>(hdr, 272, swap)),
                  static_cast<double>(read_at<float>(hdr, 276, swap))};
    } else if (sform_code > 0) {
        origin = {static_cast<double>(meta.srow_x[3]), static_cast<double>(meta.srow_y[3]),
                  static_cast<double>(meta.srow_z[3])};
    }

    if (vox_offset < static_cast<float>(kHeaderSize))
        raise(ErrorCode::bad_format, path + ": vox_offset before end of header");
    const std::size_t offset = static_cast<std::size_t>(vox_offset);
    if (offset > kHeaderSize && !reader.skip(offset - kHeaderSize))
        raise(ErrorCode::bad_format, path + ": truncated before voxel data");

    const std::size_t count = static_cast<std::size_t>(dims[0]) *
                              static_cast<std::size_t>(dims[1]) *
                              static_cast<std::size_t>(dims[2]);
    std::vector<unsigned char> payload(count * elem);
    if (!reader.read_exact(payload.data(), payload.size()))
        raise(ErrorCode::bad_format,
              path + ": truncated payload, expected " + std::to_string(payload.size()) +
                  " bytes of voxel data");

    Volume vol;
    vol.dims = dims;
    vol.spacing = spacing;
    vol.origin = origin;
    vol.kind = VoxelKind::intensity;
    vol.data.resize(count);

    const bool scaled = scl_slope != 0.0f;
    const double slope = scaled ? static_cast<double>(scl_slope) : 1.0;
    const double inter = scaled ? static_cast<double>(scl_inter) : 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double raw = 0.0;
        switch (datatype) {
        case kDtUint8:
            raw = static_cast<double>(payload[i]);
            break;
        case kDtInt16: {
            std::int16_t v;
            std::memcpy(&v, payload.data() + 2 * i, 2);
            if (swap) v = swap_bytes(v);
            raw = static_cast<double>(v);
            break;
        }
        case kDtFloat32: {
            float v;
            std::memcpy(&v, payload.data() + 4 * i, 4);
            if (swap) v = swap_bytes(v);
            raw = static_cast<double>(v);
            break;
        }
        case kDtFloat64: {
            double v;
            std::memcpy(&v, payload.data() + 8 * i, 8);
            if (swap) v = swap_bytes(v);
            raw = v;
            break;
        }
        }
        vol.data[i] = slope * raw + inter;
    }

    if (meta_out) *meta_out = meta;
    return vol;
}

} // namespace sgreg
