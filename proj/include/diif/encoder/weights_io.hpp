#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "diif/decoder/weights.hpp"

namespace diif {

// Decoder checkpoint, little-endian:
//   "DIIF", u32 version = 1, u32 D_M, u32 hidden, u32 coarse count, u32 fine count,
//   then per layer (coarse first): u32 rows, u32 cols, rows*cols f32 row-major,
//   cols f32 biases.
// The reference decoder uses "LIIR" and a single u32 layer count in place of the
// two stage counts.

std::vector<unsigned char> encode_weights(const DecoderWeights<float>& weights);
DecoderWeights<float> decode_weights(std::span<const unsigned char> bytes);
void save_weights(const std::filesystem::path& path, const DecoderWeights<float>& weights);
DecoderWeights<float> load_weights(const std::filesystem::path& path);

std::vector<unsigned char> encode_reference_weights(const ReferenceWeights<float>& weights);
ReferenceWeights<float> decode_reference_weights(std::span<const unsigned char> bytes);
void save_reference_weights(const std::filesystem::path& path,
                            const ReferenceWeights<float>& weights);
ReferenceWeights<float> load_reference_weights(const std::filesystem::path& path);

}  // namespace diif
