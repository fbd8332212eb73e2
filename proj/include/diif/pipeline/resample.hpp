#pragma once

#include <vector>

#include "diif/pipeline/image.hpp"

namespace diif {

/// Taps for one output sample along an axis: source indices (already clamped
/// to the edge) and normalised weights.
struct ResampleTaps {
  std::vector<int> index;
  std::vector<double> weight;
};

/// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double x) noexcept;

/// Per-output taps mapping `in` samples to `out` samples. Pixel centres are
/// aligned; when shrinking, the kernel is widened by in/out so the result is
/// antialiased.
std::vector<ResampleTaps> resample_taps(int in, int out);

/// Separable bicubic resize (columns first, then rows), clamp-to-edge.
Image bicubic_resample(const Image& image, int height, int width);

/// 10 * log10(1 / MSE) over all channels of unit-interval images. Identical
/// images give +infinity.
double psnr(const Image& a, const Image& b);

}  // namespace diif
