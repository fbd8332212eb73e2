#include "diif/geometry/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "diif/errors.hpp"

namespace diif {

double pixel_center(int index, int count) noexcept {
  return -1.0 + (2.0 * index + 1.0) / static_cast<double>(count);
}

CoordGrid make_grid(int height, int width) {
  if (height < 1 || width < 1) {
    throw ArgumentError("grid dimensions must be positive, got " + std::to_string(height) + "x" +
                        std::to_string(width));
  }
  CoordGrid g;
  g.height = height;
  g.width = width;
  g.rows.resize(height);
  g.cols.resize(width);
  for (int i = 0; i < height; ++i) g.rows[i] = pixel_center(i, height);
  for (int j = 0; j < width; ++j) g.cols[j] = pixel_center(j, width);
  return g;
}

std::pair<int, int> scaled_size(int height, int width, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("scale must be positive");
  const double h = std::floor(scale * height + 1e-9);
  const double w = std::floor(scale * width + 1e-9);
  if (h > std::numeric_limits<int>::max() || w > std::numeric_limits<int>::max()) {
    throw ResourceError("output size overflows at scale " + std::to_string(scale));
  }
  return {static_cast<int>(h), static_cast<int>(w)};
}

std::vector<int> nearest_axis_assignment(std::span<const double> output,
                                         std::span<const double> latent) {
  const int n = static_cast<int>(latent.size());
  if (n == 0) throw ArgumentError("empty latent axis");
  std::vector<int> assign(output.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double c = output[i];
    const int guess = std::clamp(static_cast<int>(std::floor((c + 1.0) * n / 2.0)), 0, n - 1);
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    // Candidates in ascending order with a strict comparison: ties keep the
    // smaller index.
    for (int k = std::max(0, guess - 1); k <= std::min(n - 1, guess + 1); ++k) {
      const double d = std::abs(c - latent[k]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    assign[i] = best;
  }
  return assign;
}

std::vector<int> nearest_axis_assignment(int output_count, int latent_count) {
  if (output_count < 1 || latent_count < 1) throw ArgumentError("axis counts must be positive");
  // Centres are (2k + 1) / count - 1; scaled by output_count * latent_count the
  // distances become integers, so ties are detected exactly.
  const std::int64_t n = output_count;
  const std::int64_t l = latent_count;
  std::vector<int> assign(static_cast<std::size_t>(output_count));
  for (std::int64_t r = 0; r < n; ++r) {
    const std::int64_t a = (2 * r + 1) * l;
    const std::int64_t guess = std::clamp<std::int64_t>(a / (2 * n), 0, l - 1);
    std::int64_t best = -1;
    std::int64_t best_d = std::numeric_limits<std::int64_t>::max();
    for (std::int64_t k = std::max<std::int64_t>(0, guess - 1); k <= std::min(l - 1, guess + 1); ++k) {
      const std::int64_t d = std::abs(a - (2 * k + 1) * n);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    assign[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return assign;
}

}  // namespace diif
