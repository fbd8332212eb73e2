#pragma once

#include <cstdint>

#include "diif/decoder/weights.hpp"

namespace diif {

/// Weights drawn from U(-sqrt(6 / fan_in), sqrt(6 / fan_in)) with a seeded
/// mt19937_64, layer by layer (coarse first), row-major. Biases start at 0.
DecoderWeights<float> weight_init(const Architecture& arch, std::uint64_t seed);
ReferenceWeights<float> weight_init(const ReferenceArchitecture& arch, std::uint64_t seed);

}  // namespace diif
