#pragma once

#include <vector>

#include "sgreg/volume.hpp"

namespace sgreg {

/// Discrete Gaussian taps for offsets -r..r with r = ceil(3*sigma),
/// normalized to sum 1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian convolution of a channel-interleaved grid
/// (layout: channel fastest, then axis 0), clamp-to-edge borders.
void gaussian_smooth(const double *in, double *out, const Dims &dims,
                     int channels, double sigma);

/// Transpose of gaussian_smooth as a linear operator (scatter with the same
/// clamped taps). Used by reverse-mode gradient accumulation.
void gaussian_smooth_adjoint(const double *in, double *out, const Dims &dims,
                             int channels, double sigma);

} // namespace sgreg
