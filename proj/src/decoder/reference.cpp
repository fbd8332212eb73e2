#include "diif/decoder/reference.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "diif/errors.hpp"
#include "diif/numerics/parallel.hpp"

namespace diif {

namespace {

constexpr double kShiftEps = 1e-6;

int neighbour_index(double coord, double shift, int count) {
  const double v = coord + shift + kShiftEps;
  const int idx = static_cast<int>(std::floor((v + 1.0) * count / 2.0));
  return std::clamp(idx, 0, count - 1);
}

}  // namespace

template <typename T>
Matrix<T> decode_reference_per_pixel(const FeatureMap<T>& features, const CoordGrid& out_grid,
                                     const ReferenceWeights<T>& weights,
                                     const ReferenceDecodeOptions& options) {
  const ReferenceArchitecture arch = weights.architecture();
  if (arch.feature_depth != features.depth) {
    throw ConfigError("feature depth " + std::to_string(features.depth) +
                      " does not match reference depth " + std::to_string(arch.feature_depth));
  }
  const CoordGrid latent = features.latent_grid();
  const std::size_t depth = static_cast<std::size_t>(features.depth);
  const std::size_t width = static_cast<std::size_t>(arch.input_width());
  const std::size_t pixels = out_grid.pixel_count();
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_pixels);
  const std::size_t chunks = (pixels + chunk - 1) / chunk;
  const std::span<const Layer<T>> layers(weights.layers);
  Matrix<T> out(pixels, 3);

  parallel_for(chunks, options.threads, [&](std::size_t ci) {
    const std::size_t p0 = ci * chunk;
    const std::size_t p1 = std::min(pixels, p0 + chunk);
    Matrix<T> x((p1 - p0) * 4, width);
    std::vector<std::array<double, 4>> area(p1 - p0);
    for (std::size_t p = p0; p < p1; ++p) {
      const int r = static_cast<int>(p / static_cast<std::size_t>(out_grid.width));
      const int c = static_cast<int>(p % static_cast<std::size_t>(out_grid.width));
      const double cy = out_grid.rows[r];
      const double cx = out_grid.cols[c];
      for (int t = 0; t < 4; ++t) {
        const double sy = (t < 2 ? -1.0 : 1.0) / features.height;
        const double sx = (t % 2 == 0 ? -1.0 : 1.0) / features.width;
        const int li = neighbour_index(cy, sy, features.height);
        const int lj = neighbour_index(cx, sx, features.width);
        auto row = x.row((p - p0) * 4 + static_cast<std::size_t>(t));
        std::size_t k = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          const int rr = std::clamp(li + dy, 0, features.height - 1);
          for (int dx = -1; dx <= 1; ++dx) {
            const int cc = std::clamp(lj + dx, 0, features.width - 1);
            const auto code = features.code(rr, cc);
            std::copy(code.begin(), code.end(), row.begin() + static_cast<std::ptrdiff_t>(k * depth));
            ++k;
          }
        }
        const double rel_y = (cy - latent.rows[li]) * features.height;
        const double rel_x = (cx - latent.cols[lj]) * features.width;
        row[9 * depth + 0] = static_cast<T>(rel_y);
        row[9 * depth + 1] = static_cast<T>(rel_x);
        area[p - p0][static_cast<std::size_t>(t)] = std::abs(rel_y * rel_x) + 1e-9;
      }
    }
    const Matrix<T> pred = mlp_forward(layers, std::move(x), OutputActivation::linear,
                                       nullptr, options.counter);
    for (std::size_t p = p0; p < p1; ++p) {
      const auto& a = area[p - p0];
      const double total = a[0] + a[1] + a[2] + a[3];
      auto dst = out.row(p);
      for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        // Each prediction is weighted by the area of its diagonal partner.
        for (std::size_t t = 0; t < 4; ++t) {
          acc += static_cast<double>(pred((p - p0) * 4 + t, static_cast<std::size_t>(ch))) *
                 (a[3 - t] / total);
        }
        dst[static_cast<std::size_t>(ch)] = static_cast<T>(acc);
      }
    }
  });
  return out;
}

template Matrix<float> decode_reference_per_pixel<float>(const FeatureMap<float>&,
                                                         const CoordGrid&,
                                                         const ReferenceWeights<float>&,
                                                         const ReferenceDecodeOptions&);
template Matrix<double> decode_reference_per_pixel<double>(const FeatureMap<double>&,
                                                           const CoordGrid&,
                                                           const ReferenceWeights<double>&,
                                                           const ReferenceDecodeOptions&);

}  // namespace diif
