#include "diif/pipeline/upscale.hpp"

#include <string>

#include "diif/decoder/c2f.hpp"
#include "diif/errors.hpp"

namespace diif {

UpscaleResult upscale(const FeatureMap<float>& features, const DecoderWeights<float>& weights,
                      const UpscaleOptions& options) {
  const Architecture arch = weights.architecture();
  const GroupPlan plan = make_plan(features.height, features.width, options.scale, options.slicing);
  DecodeOptions decode_opts;
  decode_opts.threads = options.threads;
  const Matrix<float> rgb = decode_image(features, plan, weights, decode_opts);
  return {rows_to_image(rgb, plan.out_height(), plan.out_width()), count_macs(arch, plan)};
}

UpscaleResult upscale(const Image& image, const DecoderWeights<float>& weights,
                      const UpscaleOptions& options) {
  const int radius = unfold_radius_for_depth(weights.feature_depth);
  if (radius < 0) {
    throw ConfigError("decoder expects " + std::to_string(weights.feature_depth) +
                      "-channel features, which the unfold encoder cannot produce");
  }
  return upscale(unfold_encode(image, radius), weights, options);
}

}  // namespace diif
