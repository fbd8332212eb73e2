#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace diif {

/// Three-channel planar raster of unit-interval intensities. Channel c of
/// pixel (r, x) lives at data[(c * height + r) * width + x]. Values are not
/// clamped in memory; writing a PNG clamps to [0, 1] and quantises to 8 bits.
struct Image {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(kChannels) * h * w, fill) {}

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  float& at(int c, int r, int x) noexcept {
    return data[(static_cast<std::size_t>(c) * height + r) * width + x];
  }
  float at(int c, int r, int x) const noexcept {
    return data[(static_cast<std::size_t>(c) * height + r) * width + x];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Reads any PNG libpng understands, converted to 8-bit RGB (alpha composited
/// away, gray replicated). Throws IoError.
Image read_png(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG, no alpha. Identical images give identical files.
void write_png(const std::filesystem::path& path, const Image& image);

/// Value a channel takes after PNG serialisation: clamp to [0, 1], round to
/// the nearest of 256 levels.
unsigned char quantize_unit(float v) noexcept;

}  // namespace diif
