#include "diif/encoder/weights_io.hpp"

#include <string>

#include "binary_io.hpp"
#include "diif/errors.hpp"

namespace diif {

namespace {

constexpr std::uint32_t kWeightsVersion = 1;
// Guards allocation from corrupt headers; far above any real layer.
constexpr std::uint64_t kMaxLayerElements = std::uint64_t{1} << 28;

void write_layers(detail::ByteWriter& w, const std::vector<Layer<float>>& layers) {
  for (const auto& layer : layers) {
    if (layer.bias.size() != layer.out()) throw ShapeError("layer bias length mismatch");
    w.u32(static_cast<std::uint32_t>(layer.in()));
    w.u32(static_cast<std::uint32_t>(layer.out()));
    w.f32s(layer.weight.values());
    w.f32s(layer.bias);
  }
}

std::vector<Layer<float>> read_layers(detail::ByteReader& r, std::uint32_t count) {
  std::vector<Layer<float>> layers;
  layers.reserve(count);
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::size_t at = r.offset();
    const std::uint32_t rows = r.u32("layer rows");
    const std::uint32_t cols = r.u32("layer cols");
    const std::uint64_t elements = static_cast<std::uint64_t>(rows) * cols;
    if (rows == 0 || cols == 0 || elements > kMaxLayerElements) {
      throw FormatError("implausible layer shape " + std::to_string(rows) + "x" +
                            std::to_string(cols),
                        at);
    }
    if ((elements + cols) * 4 > r.remaining()) {
      throw FormatError("truncated file while reading layer " + std::to_string(l), r.offset());
    }
    Layer<float> layer(rows, cols);
    r.f32s(layer.weight.values(), "layer weights");
    r.f32s(layer.bias, "layer bias");
    layers.push_back(std::move(layer));
  }
  return layers;
}

std::uint32_t read_version(detail::ByteReader& r) {
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion) throw UnsupportedVersionError(version, kWeightsVersion);
  return version;
}

}  // namespace

std::vector<unsigned char> encode_weights(const DecoderWeights<float>& weights) {
  detail::ByteWriter w;
  w.magic("DIIF");
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(weights.feature_depth));
  w.u32(static_cast<std::uint32_t>(weights.hidden));
  w.u32(static_cast<std::uint32_t>(weights.coarse.size()));
  w.u32(static_cast<std::uint32_t>(weights.fine.size()));
  write_layers(w, weights.coarse);
  write_layers(w, weights.fine);
  return w.take();
}

DecoderWeights<float> decode_weights(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("DIIF");
  read_version(r);
  DecoderWeights<float> w;
  w.feature_depth = static_cast<int>(r.u32("feature depth"));
  w.hidden = static_cast<int>(r.u32("hidden dim"));
  const std::uint32_t coarse = r.u32("coarse layer count");
  const std::uint32_t fine = r.u32("fine layer count");
  w.coarse = read_layers(r, coarse);
  w.fine = read_layers(r, fine);
  r.expect_end();
  return w;
}

void save_weights(const std::filesystem::path& path, const DecoderWeights<float>& weights) {
  detail::write_file(path, encode_weights(weights));
}

DecoderWeights<float> load_weights(const std::filesystem::path& path) {
  auto w = decode_weights(detail::read_file(path));
  try {
    w.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return w;
}

std::vector<unsigned char> encode_reference_weights(const ReferenceWeights<float>& weights) {
  detail::ByteWriter w;
  w.magic("LIIR");
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(weights.feature_depth));
  w.u32(static_cast<std::uint32_t>(weights.hidden));
  w.u32(static_cast<std::uint32_t>(weights.layers.size()));
  write_layers(w, weights.layers);
  return w.take();
}

ReferenceWeights<float> decode_reference_weights(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("LIIR");
  read_version(r);
  ReferenceWeights<float> w;
  w.feature_depth = static_cast<int>(r.u32("feature depth"));
  w.hidden = static_cast<int>(r.u32("hidden dim"));
  const std::uint32_t count = r.u32("layer count");
  w.layers = read_layers(r, count);
  r.expect_end();
  return w;
}

void save_reference_weights(const std::filesystem::path& path,
                            const ReferenceWeights<float>& weights) {
  detail::write_file(path, encode_reference_weights(weights));
}

ReferenceWeights<float> load_reference_weights(const std::filesystem::path& path) {
  auto w = decode_reference_weights(detail::read_file(path));
  try {
    w.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return w;
}

}  // namespace diif
