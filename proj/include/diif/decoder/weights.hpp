#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "diif/numerics/mlp.hpp"

namespace diif {

/// Shape of a coarse-to-fine decoder. The default is the full-size model:
/// two 256-wide coarse layers, then two 256-wide fine layers and a 3-wide
/// output layer.
struct Architecture {
  int feature_depth = 64;
  int hidden = 256;
  int coarse_layers = 2;
  int fine_hidden_layers = 2;
  // Vertex codes (4x4 unfold at the four cell corners) with area-weighted
  // blending; when false the coarse stage sees the centre code with a 3x3
  // unfold and no blending.
  bool slice_ensemble = true;

  int coarse_input_width() const noexcept {
    return (slice_ensemble ? 16 : 9) * feature_depth + 4;
  }
  int fine_input_width() const noexcept { return hidden + 2; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Per-pixel baseline decoder: `hidden_layers` layers of width `hidden` and a
/// 3-wide output, fed a 3x3-unfolded code plus the relative coordinate.
struct ReferenceArchitecture {
  int feature_depth = 64;
  int hidden = 256;
  int hidden_layers = 4;

  int input_width() const noexcept { return 9 * feature_depth + 2; }

  friend bool operator==(const ReferenceArchitecture&, const ReferenceArchitecture&) = default;
};

template <typename T>
struct DecoderWeights {
  int feature_depth = 0;
  int hidden = 0;
  std::vector<Layer<T>> coarse;
  std::vector<Layer<T>> fine;

  /// Architecture implied by the layer shapes. Throws ConfigError when the
  /// shapes are inconsistent.
  Architecture architecture() const;
  void validate() const { (void)architecture(); }

  std::size_t parameter_count() const noexcept;

  template <typename U>
  DecoderWeights<U> cast() const {
    DecoderWeights<U> w;
    w.feature_depth = feature_depth;
    w.hidden = hidden;
    for (const auto& l : coarse) w.coarse.push_back(l.template cast<U>());
    for (const auto& l : fine) w.fine.push_back(l.template cast<U>());
    return w;
  }

  friend bool operator==(const DecoderWeights&, const DecoderWeights&) = default;
};

template <typename T>
struct ReferenceWeights {
  int feature_depth = 0;
  int hidden = 0;
  std::vector<Layer<T>> layers;

  ReferenceArchitecture architecture() const;
  void validate() const { (void)architecture(); }

  template <typename U>
  ReferenceWeights<U> cast() const {
    ReferenceWeights<U> w;
    w.feature_depth = feature_depth;
    w.hidden = hidden;
    for (const auto& l : layers) w.layers.push_back(l.template cast<U>());
    return w;
  }

  friend bool operator==(const ReferenceWeights&, const ReferenceWeights&) = default;
};

/// Zero-initialised weights with the given shape.
template <typename T>
DecoderWeights<T> make_decoder_weights(const Architecture& arch);

template <typename T>
ReferenceWeights<T> make_reference_weights(const ReferenceArchitecture& arch);

}  // namespace diif
