#include "diif/pipeline/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "diif/errors.hpp"

namespace diif {

double cubic_kernel(double x) noexcept {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

std::vector<ResampleTaps> resample_taps(int in, int out) {
  if (in < 1 || out < 1) throw ArgumentError("resample sizes must be at least 1");
  const double scale = static_cast<double>(out) / in;
  const double stretch = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / stretch;
  std::vector<ResampleTaps> taps(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double center = (i + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(center - support));
    const int right = static_cast<int>(std::ceil(center + support));
    ResampleTaps& t = taps[static_cast<std::size_t>(i)];
    double sum = 0.0;
    for (int j = left; j <= right; ++j) {
      const double w = stretch * cubic_kernel(stretch * (center - j));
      if (w == 0.0) continue;
      t.index.push_back(std::clamp(j, 0, in - 1));
      t.weight.push_back(w);
      sum += w;
    }
    for (double& w : t.weight) w /= sum;
  }
  return taps;
}

Image bicubic_resample(const Image& image, int height, int width) {
  if (height < 1 || width < 1) throw ArgumentError("target size must be at least 1x1");
  if (image.height < 1 || image.width < 1) throw ArgumentError("cannot resample an empty image");
  const auto col_taps = resample_taps(image.width, width);
  const auto row_taps = resample_taps(image.height, height);
  Image tmp(image.height, width);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int r = 0; r < image.height; ++r) {
      for (int x = 0; x < width; ++x) {
        const auto& t = col_taps[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k) {
          acc += t.weight[k] * image.at(c, r, t.index[k]);
        }
        tmp.at(c, r, x) = static_cast<float>(acc);
      }
    }
  }
  Image out(height, width);
  for (int c = 0; c < Image::kChannels; ++c) {
    for (int r = 0; r < height; ++r) {
      const auto& t = row_taps[static_cast<std::size_t>(r)];
      for (int x = 0; x < width; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < t.index.size(); ++k) {
          acc += t.weight[k] * tmp.at(c, t.index[k], x);
        }
        out.at(c, r, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

double psnr(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width) {
    throw ArgumentError("psnr needs equal sizes, got " + std::to_string(a.height) + "x" +
                        std::to_string(a.width) + " and " + std::to_string(b.height) + "x" +
                        std::to_string(b.width));
  }
  if (a.data.empty()) throw ArgumentError("psnr of empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace diif
