#pragma once

#include <span>
#include <utility>
#include <vector>

namespace diif {

/// Continuous coordinate of pixel `index` out of `count` along one axis:
/// -1 + (2 * index + 1) / count, i.e. pixel centres in [-1, 1].
double pixel_center(int index, int count) noexcept;

/// Pixel-centre coordinates of an H x W raster. Coordinates are separable, so
/// the grid stores one vector per axis; pixel (r, c) sits at (rows[r], cols[c]).
struct CoordGrid {
  int height = 0;
  int width = 0;
  std::vector<double> rows;
  std::vector<double> cols;

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
};

CoordGrid make_grid(int height, int width);

/// Output raster size for a real scale factor: floor(s * H) x floor(s * W).
/// A 1e-9 slack absorbs representation error in products like 2.3 * 10.
std::pair<int, int> scaled_size(int height, int width, double scale);

/// Nearest latent index along one axis for every output coordinate. Ties go to
/// the smaller latent index.
std::vector<int> nearest_axis_assignment(std::span<const double> output,
                                         std::span<const double> latent);

/// Same for two pixel-centre grids given by their counts, in exact integer
/// arithmetic so that equidistant centres always resolve to the smaller index.
std::vector<int> nearest_axis_assignment(int output_count, int latent_count);

}  // namespace diif
