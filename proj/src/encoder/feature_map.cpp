#include "diif/encoder/feature_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "diif/errors.hpp"

namespace diif {

namespace detail {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open file");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace detail

namespace {

constexpr std::uint32_t kFeatureMapVersion = 1;

}  // namespace

FeatureMap<float> unfold_encode(const Image& image, int radius) {
  if (radius < 0) throw ArgumentError("unfold radius must be >= 0");
  if (image.height < 1 || image.width < 1) throw ArgumentError("cannot encode an empty image");
  const int span = 2 * radius + 1;
  FeatureMap<float> fm(image.height, image.width, Image::kChannels * span * span);
  for (int i = 0; i < image.height; ++i) {
    for (int j = 0; j < image.width; ++j) {
      auto code = fm.code(i, j);
      std::size_t k = 0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const int r = std::clamp(i + dy, 0, image.height - 1);
        for (int dx = -radius; dx <= radius; ++dx) {
          const int c = std::clamp(j + dx, 0, image.width - 1);
          for (int ch = 0; ch < Image::kChannels; ++ch) code[k++] = image.at(ch, r, c);
        }
      }
    }
  }
  return fm;
}

int unfold_radius_for_depth(int depth) noexcept {
  for (int r = 0; r < 64; ++r) {
    const int d = Image::kChannels * (2 * r + 1) * (2 * r + 1);
    if (d == depth) return r;
    if (d > depth) break;
  }
  return -1;
}

std::vector<unsigned char> encode_feature_map(const FeatureMap<float>& features) {
  if (features.data.size() !=
      static_cast<std::size_t>(features.height) * features.width * features.depth) {
    throw ShapeError("feature map payload does not match its dimensions");
  }
  detail::ByteWriter w;
  w.magic("DIFM");
  w.u32(kFeatureMapVersion);
  w.u32(static_cast<std::uint32_t>(features.height));
  w.u32(static_cast<std::uint32_t>(features.width));
  w.u32(static_cast<std::uint32_t>(features.depth));
  w.f32s(features.data);
  return w.take();
}

FeatureMap<float> decode_feature_map(std::span<const unsigned char> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("DIFM");
  const std::uint32_t version = r.u32("version");
  if (version != kFeatureMapVersion) throw UnsupportedVersionError(version, kFeatureMapVersion);
  const std::size_t header_end = r.offset() + 12;
  const std::uint32_t h = r.u32("height");
  const std::uint32_t w = r.u32("width");
  const std::uint32_t d = r.u32("depth");
  if (h == 0 || w == 0 || d == 0) throw FormatError("zero feature map dimension", header_end);
  const std::uint64_t count = static_cast<std::uint64_t>(h) * w * d;
  if (count * 4 != r.remaining()) {
    throw FormatError("payload holds " + std::to_string(r.remaining()) + " bytes, header implies " +
                          std::to_string(count * 4),
                      r.offset());
  }
  FeatureMap<float> fm(static_cast<int>(h), static_cast<int>(w), static_cast<int>(d));
  r.f32s(fm.data, "feature values");
  r.expect_end();
  return fm;
}

void save_feature_map(const std::filesystem::path& path, const FeatureMap<float>& features) {
  detail::write_file(path, encode_feature_map(features));
}

FeatureMap<float> load_feature_map(const std::filesystem::path& path) {
  return decode_feature_map(detail::read_file(path));
}

}  // namespace diif
