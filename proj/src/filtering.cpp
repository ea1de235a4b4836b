#include "sgreg/filtering.hpp"

#include <algorithm>
#include <cmath>

namespace sgreg {

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0))
        raise(ErrorCode::invalid_argument, "gaussian_kernel: sigma must be positive");
    const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (std::int64_t j = -radius; j <= radius; ++j) {
        const double w = std::exp(-0.5 * static_cast<double>(j * j) / (sigma * sigma));
        taps[static_cast<std::size_t>(j + radius)] = w;
        sum += w;
    }
    for (double &w : taps) w /= sum;
    return taps;
}

namespace {

// One clamped 1-D pass along `axis` of the channel-interleaved grid.
// gather: out[i] = sum_j w[j] in[clamp(i+j)]
// scatter (transpose): out[clamp(i+j)] += w[j] in[i]
void axis_pass(const double *in, double *out, const Dims &dims, int channels,
               int axis, const std::vector<double> &taps, bool scatter) {
    const std::int64_t n = dims[axis];
    const std::int64_t radius = (static_cast<std::int64_t>(taps.size()) - 1) / 2;
    const std::int64_t total = voxel_count(dims);
    const std::int64_t sx = channels;
    const std::int64_t sy = channels * dims[0];
    const std::int64_t sz = channels * dims[0] * dims[1];
    const std::int64_t stride = axis == 0 ? sx : (axis == 1 ? sy : sz);

    if (scatter)
        std::fill(out, out + static_cast<std::size_t>(total * channels), 0.0);

    std::int64_t v = 0;
    for (std::int64_t k = 0; k < dims[2]; ++k)
        for (std::int64_t j = 0; j < dims[1]; ++j)
            for (std::int64_t i = 0; i < dims[0]; ++i, ++v) {
                const std::int64_t pos = axis == 0 ? i : (axis == 1 ? j : k);
                const std::int64_t base = v * channels;
                for (int c = 0; c < channels; ++c) {
                    if (scatter) {
                        const double value = in[base + c];
                        for (std::int64_t t = -radius; t <= radius; ++t) {
                            const std::int64_t p = std::clamp<std::int64_t>(pos + t, 0, n - 1);
                            out[base + c + (p - pos) * stride] +=
                                taps[static_cast<std::size_t>(t + radius)] * value;
                        }
                    } else {
                        double acc = 0.0;
                        for (std::int64_t t = -radius; t <= radius; ++t) {
                            const std::int64_t p = std::clamp<std::int64_t>(pos + t, 0, n - 1);
                            acc += taps[static_cast<std::size_t>(t + radius)] *
                                   in[base + c + (p - pos) * stride];
                        }
                        out[base + c] = acc;
                    }
                }
            }
}

void smooth_impl(const double *in, double *out, const Dims &dims, int channels,
                 double sigma, bool scatter) {
    const std::vector<double> taps = gaussian_kernel(sigma);
    const std::size_t count = static_cast<std::size_t>(voxel_count(dims)) *
                              static_cast<std::size_t>(channels);
    std::vector<double> tmp(count);
    // axis passes commute, so the transpose keeps the same axis order
    axis_pass(in, out, dims, channels, 0, taps, scatter);
    axis_pass(out, tmp.data(), dims, channels, 1, taps, scatter);
    axis_pass(tmp.data(), out, dims, channels, 2, taps, scatter);
}

} // namespace

void gaussian_smooth(const double *in, double *out, const Dims &dims,
                     int channels, double sigma) {
    smooth_impl(in, out, dims, channels, sigma, false);
}

void gaussian_smooth_adjoint(const double *in, double *out, const Dims &dims,
                             int channels, double sigma) {
    smooth_impl(in, out, dims, channels, sigma, true);
}

} // namespace sgreg
