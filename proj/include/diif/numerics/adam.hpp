#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace diif {

struct AdamState {
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lr = 1e-4;
  double eps = 1e-8;
  // One buffer per parameter tensor, created lazily on the first step.
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
};

template <typename T>
struct ParamView {
  std::string name;
  std::span<T> value;
  std::span<const T> grad;
};

/// Bias-corrected Adam update over every tensor in `params`, then step += 1.
/// Throws TrainingError naming the first tensor holding a non-finite gradient;
/// in that case nothing is updated.
template <typename T>
void adam_step(std::span<const ParamView<T>> params, AdamState& state);

}  // namespace diif
