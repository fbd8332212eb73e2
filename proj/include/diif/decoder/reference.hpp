#pragma once

#include <cstddef>

#include "diif/decoder/weights.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/geometry/grid.hpp"
#include "diif/numerics/matrix.hpp"

namespace diif {

struct ReferenceDecodeOptions {
  int threads = 0;
  std::size_t chunk_pixels = 1024;
  MacCounter* counter = nullptr;
};

/// Per-pixel baseline: every output pixel queries its four surrounding latent
/// codes, runs the full MLP on each (3x3-unfolded code plus the coordinate
/// relative to that code, scaled by the latent size), and blends the four
/// predictions with opposite-area weights. Returns [pixels x 3] rows.
template <typename T>
Matrix<T> decode_reference_per_pixel(const FeatureMap<T>& features, const CoordGrid& out_grid,
                                     const ReferenceWeights<T>& weights,
                                     const ReferenceDecodeOptions& options = {});

}  // namespace diif
