#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "diif/decoder/weights.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/geometry/plan.hpp"
#include "diif/numerics/matrix.hpp"

namespace diif {

// Golden vector file, one JSON object per case:
//   name, op ("decode_image"), seed, tolerance, scale,
//   slicing: {strategy, n, fixed_interval},
//   feature_map: {height, width, depth, data},
//   weights: {feature_depth, hidden, coarse: [layer], fine: [layer]},
//     layer: {rows, cols, weight, bias},
//   expected_rgb: {rows, cols, data}.
// Every array payload is base64 of little-endian f64 values; matrices are
// row-major and expected_rgb rows are flat output indices.
struct GoldenCase {
  std::string name;
  std::string op = "decode_image";
  std::uint64_t seed = 0;
  double tolerance = 1e-5;
  double scale = 1.0;
  SlicingOptions slicing{};
  FeatureMap<double> features;
  DecoderWeights<double> weights;
  Matrix<double> expected_rgb;
};

std::string base64_encode_f64(std::span<const double> values);
std::vector<double> base64_decode_f64(const std::string& text);

GoldenCase load_golden(const std::filesystem::path& path);
void save_golden(const std::filesystem::path& path, const GoldenCase& golden);

struct GoldenOutcome {
  std::string name;
  double max_abs_diff = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

/// Decodes the case with 32-bit weights and features and compares.
GoldenOutcome check_golden(const GoldenCase& golden);

/// Every *.json file in `dir`, sorted by name.
std::vector<GoldenOutcome> check_golden_dir(const std::filesystem::path& dir);

}  // namespace diif
