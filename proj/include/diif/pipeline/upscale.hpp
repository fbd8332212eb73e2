#pragma once

#include <filesystem>
#include <optional>

#include "diif/costmodel/cost.hpp"
#include "diif/decoder/weights.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/geometry/plan.hpp"
#include "diif/pipeline/image.hpp"

namespace diif {

struct UpscaleOptions {
  double scale = 2.0;
  SlicingOptions slicing{};
  int threads = 0;
};

struct UpscaleResult {
  Image image;
  CostReport cost;
};

/// Decodes `features` on the floor(s*H) x floor(s*W) output grid.
UpscaleResult upscale(const FeatureMap<float>& features, const DecoderWeights<float>& weights,
                      const UpscaleOptions& options);

/// Encodes `image` with the unfold encoder matching the weights' feature
/// depth, then decodes. Throws ConfigError when no unfold radius fits.
UpscaleResult upscale(const Image& image, const DecoderWeights<float>& weights,
                      const UpscaleOptions& options);

}  // namespace diif
