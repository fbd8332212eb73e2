#pragma once

#include <array>
#include <vector>

#include "diif/decoder/weights.hpp"
#include "diif/encoder/feature_map.hpp"

// Straight-line reference evaluation written from the model definition, with
// no calls into the decoder or geometry code under test.
namespace diif::oracle {

struct Point {
  double y;
  double x;
};

/// Dense MLP with ReLU on every layer except possibly the last.
std::vector<double> mlp(const std::vector<Layer<double>>& layers, std::vector<double> x,
                        bool relu_last);

/// Nearest latent by full 2D distance over every latent code.
std::pair<int, int> nearest_latent(double y, double x, int lh, int lw);

/// Pixel centre of index i among n.
double centre(int i, int n);

/// 4x4 vertex window around latent position (py, px) (half-integers).
std::vector<double> vertex_window(const FeatureMap<double>& fm, double py, double px);

/// 3x3 window around latent (i, j).
std::vector<double> centre_window(const FeatureMap<double>& fm, int i, int j);

/// Full-image decode at scale s with slice interval u per group, evaluated by
/// scanning output pixels directly. Returns [pixels][3] row-major.
std::vector<std::array<double, 3>> decode(const FeatureMap<double>& fm,
                                          const DecoderWeights<double>& w, double scale,
                                          int interval);

/// Per-pixel baseline decoder.
std::vector<std::array<double, 3>> decode_reference(const FeatureMap<double>& fm,
                                                    const ReferenceWeights<double>& w, int out_h,
                                                    int out_w);

}  // namespace diif::oracle
