#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "diif/geometry/grid.hpp"
#include "diif/pipeline/image.hpp"

namespace diif {

/// H x W grid of D-dimensional latent codes, row-major by (row, col, channel).
/// Code (i, j) is anchored at the pixel-centre coordinate of the H x W grid.
template <typename T>
struct FeatureMap {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int h, int w, int d, T fill = T{0})
      : height(h), width(w), depth(d), data(static_cast<std::size_t>(h) * w * d, fill) {}

  std::span<const T> code(int i, int j) const noexcept {
    return {data.data() + (static_cast<std::size_t>(i) * width + j) * depth,
            static_cast<std::size_t>(depth)};
  }
  std::span<T> code(int i, int j) noexcept {
    return {data.data() + (static_cast<std::size_t>(i) * width + j) * depth,
            static_cast<std::size_t>(depth)};
  }

  CoordGrid latent_grid() const { return make_grid(height, width); }

  template <typename U>
  FeatureMap<U> cast() const {
    FeatureMap<U> out;
    out.height = height;
    out.width = width;
    out.depth = depth;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Parameter-free encoder: each latent code is the clamp-to-edge
/// (2r+1) x (2r+1) RGB neighbourhood of its pixel, neighbours in row-major
/// order, channels interleaved per neighbour. Depth is 3 (2r+1)^2.
FeatureMap<float> unfold_encode(const Image& image, int radius = 1);

/// Encoder radius that produces `depth` channels, or -1 when none does.
int unfold_radius_for_depth(int depth) noexcept;

// "DIFM" v1: H, W, D as u32, then H*W*D little-endian f32 by (row, col, channel).
void save_feature_map(const std::filesystem::path& path, const FeatureMap<float>& features);
FeatureMap<float> load_feature_map(const std::filesystem::path& path);

std::vector<unsigned char> encode_feature_map(const FeatureMap<float>& features);
FeatureMap<float> decode_feature_map(std::span<const unsigned char> bytes);

}  // namespace diif
