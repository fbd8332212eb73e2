#include "diif/pipeline/init.hpp"

#include <cmath>
#include <random>

namespace diif {

namespace {

void fill_he_uniform(std::vector<Layer<float>>& layers, std::mt19937_64& rng) {
  for (auto& layer : layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (float& v : layer.weight.values()) v = static_cast<float>(dist(rng));
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0f);
  }
}

}  // namespace

DecoderWeights<float> weight_init(const Architecture& arch, std::uint64_t seed) {
  DecoderWeights<float> w = make_decoder_weights<float>(arch);
  std::mt19937_64 rng(seed);
  fill_he_uniform(w.coarse, rng);
  fill_he_uniform(w.fine, rng);
  return w;
}

ReferenceWeights<float> weight_init(const ReferenceArchitecture& arch, std::uint64_t seed) {
  ReferenceWeights<float> w = make_reference_weights<float>(arch);
  std::mt19937_64 rng(seed);
  fill_he_uniform(w.layers, rng);
  return w;
}

}  // namespace diif
