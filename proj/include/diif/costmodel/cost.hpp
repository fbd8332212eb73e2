#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "diif/decoder/weights.hpp"
#include "diif/geometry/plan.hpp"

namespace diif {

/// Decoder-only multiply counts for one configuration. Biases, activations and
/// the scalar ensemble geometry are not counted; blend multiplies are.
struct CostReport {
  double scale = 1.0;
  std::int64_t groups = 0;
  std::int64_t slices = 0;
  std::int64_t coarse_macs = 0;
  std::int64_t fine_macs = 0;
  std::int64_t ensemble_macs = 0;
  std::int64_t reference_macs = 0;
  std::optional<double> runtime_ms;

  std::int64_t total_macs() const noexcept { return coarse_macs + fine_macs + ensemble_macs; }
};

/// MACs of one forward pass: sum of rows * cols over the layers.
std::int64_t coarse_forward_macs(const Architecture& arch) noexcept;
std::int64_t fine_forward_macs(const Architecture& arch) noexcept;
std::int64_t reference_forward_macs(const ReferenceArchitecture& arch) noexcept;

/// Reference architecture with the same feature depth and hidden width.
ReferenceArchitecture matched_reference(const Architecture& arch) noexcept;

/// Counts from the plan's slice table. Requires a sliced plan.
CostReport count_macs(const Architecture& arch, const GroupPlan& plan,
                      const ReferenceArchitecture& reference);
CostReport count_macs(const Architecture& arch, const GroupPlan& plan);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual in log space
};

/// Least-squares line through (log s, log value). Needs at least three
/// distinct scales and strictly positive values.
ScalingFit fit_scaling_exponent(std::span<const std::pair<double, double>> points);

struct BenchConfig {
  int width = 320;
  int height = 180;
  Architecture arch{};
  SlicingOptions slicing{};
  // Weights to time with; when empty only the analytic counts are produced.
  const DecoderWeights<float>* weights = nullptr;
  int threads = 0;
  std::uint64_t seed = 1;
  // Refuse to decode rasters larger than this many output pixels.
  std::int64_t max_output_pixels = 150'000'000;
};

/// Analytic MACs per scale plus, with weights, the median decode wall-clock
/// over `repetitions` runs on a seeded random feature map.
std::vector<CostReport> benchmark_decode(const BenchConfig& config, std::span<const double> scales,
                                         int repetitions);

void write_cost_csv(std::ostream& out, std::span<const CostReport> reports);
void write_cost_csv(const std::filesystem::path& path, std::span<const CostReport> reports);

}  // namespace diif
