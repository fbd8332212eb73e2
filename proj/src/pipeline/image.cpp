#include "diif/pipeline/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <string>

#include "diif/errors.hpp"

namespace diif {

unsigned char quantize_unit(float v) noexcept {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<unsigned char>(std::lround(v * 255.0f));
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    const std::string why = png.message;
    png_image_free(&png);
    throw IoError(path.string(), "cannot read PNG (" + why + ")");
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr) == 0) {
    const std::string why = png.message;
    png_image_free(&png);
    throw IoError(path.string(), "corrupt PNG (" + why + ")");
  }
  Image image(static_cast<int>(png.height), static_cast<int>(png.width));
  for (int r = 0; r < image.height; ++r) {
    const png_byte* src = buffer.data() + static_cast<std::size_t>(r) * image.width * 3;
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) image.at(c, r, x) = src[3 * x + c] / 255.0f;
    }
  }
  return image;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.height < 1 || image.width < 1) throw ArgumentError("cannot write an empty image");
  std::vector<png_byte> buffer(image.pixel_count() * 3);
  for (int r = 0; r < image.height; ++r) {
    png_byte* dst = buffer.data() + static_cast<std::size_t>(r) * image.width * 3;
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < Image::kChannels; ++c) dst[3 * x + c] = quantize_unit(image.at(c, r, x));
    }
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    const std::string why = png.message;
    png_image_free(&png);
    throw IoError(path.string(), "cannot write PNG (" + why + ")");
  }
}

}  // namespace diif
