#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "diif/decoder/weights.hpp"
#include "diif/geometry/plan.hpp"
#include "diif/pipeline/image.hpp"

namespace diif {

struct TrainConfig {
  std::filesystem::path data_dir;
  int crop = 48;  // HR patch side before flooring to the sampled scale
  std::vector<double> scales = {2.0, 2.5, 3.0, 3.5, 4.0};
  int batch = 16;
  int iterations = 0;
  double lr = 1e-4;
  double lr_decay = 0.5;
  int decay_every = 0;  // 0: max(1, iterations / 5)
  std::uint64_t seed = 0;
  int encoder_radius = 1;
  int hidden = 256;
  int coarse_layers = 2;
  int fine_hidden_layers = 2;
  bool slice_ensemble = true;
  SlicingOptions slicing{};
  int threads = 0;
  int log_every = 100;
  // Called every `log_every` iterations with the iteration count and the mean
  // loss since the previous call.
  std::function<void(int, double)> on_log;
  // Called once per skipped file with a reason.
  std::function<void(const std::filesystem::path&, const std::string&)> on_skip;

  Architecture architecture() const;
  void validate() const;
};

struct TrainResult {
  DecoderWeights<float> weights;
  std::vector<double> losses;  // mean L1 per iteration
};

/// PNG files of `dir` (sorted by name) that decode and cover `min_side`.
/// Throws ConfigError when none qualifies.
std::vector<Image> load_training_images(const TrainConfig& config, int min_side);

/// Self-supervised training on bicubic-downsampled crops from `images`.
TrainResult train(const TrainConfig& config, const std::vector<Image>& images);
TrainResult train(const TrainConfig& config);

/// Flip / transpose helpers used for augmentation.
Image flip_horizontal(const Image& image);
Image flip_vertical(const Image& image);
Image transpose(const Image& image);
Image crop(const Image& image, int row, int col, int height, int width);

}  // namespace diif
