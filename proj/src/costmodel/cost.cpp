#include "diif/costmodel/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <string>

#include "diif/decoder/c2f.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/errors.hpp"

namespace diif {

namespace {

std::int64_t stack_macs(std::int64_t in, std::int64_t hidden, int hidden_layers, std::int64_t out) {
  std::int64_t macs = 0;
  std::int64_t width = in;
  for (int l = 0; l < hidden_layers; ++l) {
    macs += width * hidden;
    width = hidden;
  }
  return macs + width * out;
}

}  // namespace

std::int64_t coarse_forward_macs(const Architecture& arch) noexcept {
  // Every coarse layer is hidden-wide; the last one is the slice hidden vector.
  return stack_macs(arch.coarse_input_width(), arch.hidden, arch.coarse_layers - 1, arch.hidden);
}

std::int64_t fine_forward_macs(const Architecture& arch) noexcept {
  return stack_macs(arch.fine_input_width(), arch.hidden, arch.fine_hidden_layers, 3);
}

std::int64_t reference_forward_macs(const ReferenceArchitecture& arch) noexcept {
  return stack_macs(arch.input_width(), arch.hidden, arch.hidden_layers, 3);
}

ReferenceArchitecture matched_reference(const Architecture& arch) noexcept {
  ReferenceArchitecture ref;
  ref.feature_depth = arch.feature_depth;
  ref.hidden = arch.hidden;
  return ref;
}

CostReport count_macs(const Architecture& arch, const GroupPlan& plan,
                      const ReferenceArchitecture& reference) {
  if (!plan.is_sliced()) throw ConfigError("count_macs needs a sliced plan");
  const std::int64_t pixels = static_cast<std::int64_t>(plan.output_grid().pixel_count());
  const std::int64_t vertices = arch.slice_ensemble ? 4 : 1;
  CostReport r;
  r.scale = plan.scale();
  r.groups = plan.group_count();
  r.slices = plan.total_slices();
  r.coarse_macs = r.slices * vertices * coarse_forward_macs(arch);
  r.fine_macs = pixels * fine_forward_macs(arch);
  r.ensemble_macs = arch.slice_ensemble ? pixels * 4 * arch.hidden : 0;
  r.reference_macs = pixels * 4 * reference_forward_macs(reference);
  return r;
}

CostReport count_macs(const Architecture& arch, const GroupPlan& plan) {
  return count_macs(arch, plan, matched_reference(arch));
}

ScalingFit fit_scaling_exponent(std::span<const std::pair<double, double>> points) {
  std::set<double> distinct;
  for (const auto& [s, v] : points) {
    if (!(s > 0.0) || !(v > 0.0)) {
      throw ArgumentError("scaling fit needs positive scales and values");
    }
    distinct.insert(s);
  }
  if (distinct.size() < 3) throw ArgumentError("scaling fit needs at least 3 distinct scales");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [s, v] : points) {
    mx += std::log(s);
    my += std::log(v);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [s, v] : points) {
    const double dx = std::log(s) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (const auto& [s, v] : points) {
    const double e = std::log(v) - (fit.intercept + fit.slope * std::log(s));
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

std::vector<CostReport> benchmark_decode(const BenchConfig& config, std::span<const double> scales,
                                         int repetitions) {
  if (repetitions < 1) throw ArgumentError("repetitions must be at least 1");
  Architecture arch = config.arch;
  FeatureMap<float> features;
  if (config.weights != nullptr) {
    arch = config.weights->architecture();
    features = FeatureMap<float>(config.height, config.width, arch.feature_depth);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<float> dist(0.0f, 1.0f);
    for (auto& v : features.data) v = dist(rng);
  }
  std::vector<CostReport> reports;
  for (double s : scales) {
    const GroupPlan plan = make_plan(config.height, config.width, s, config.slicing);
    CostReport report = count_macs(arch, plan);
    if (config.weights != nullptr) {
      const auto pixels = static_cast<std::int64_t>(plan.output_grid().pixel_count());
      if (pixels > config.max_output_pixels) {
        throw ResourceError("scale " + std::to_string(s) + " needs " + std::to_string(pixels) +
                            " output pixels, above the limit of " +
                            std::to_string(config.max_output_pixels));
      }
      std::vector<double> times;
      DecodeOptions opts;
      opts.threads = config.threads;
      for (int rep = 0; rep < repetitions; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const Matrix<float> rgb = decode_image(features, plan, *config.weights, opts);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      }
      std::sort(times.begin(), times.end());
      const std::size_t m = times.size();
      report.runtime_ms = m % 2 == 1 ? times[m / 2] : 0.5 * (times[m / 2 - 1] + times[m / 2]);
    }
    reports.push_back(report);
  }
  return reports;
}

void write_cost_csv(std::ostream& out, std::span<const CostReport> reports) {
  out << "scale,groups,slices,coarse_macs,ensemble_macs,fine_macs,total_macs,reference_macs,"
         "runtime_ms\n";
  for (const auto& r : reports) {
    out << r.scale << ',' << r.groups << ',' << r.slices << ',' << r.coarse_macs << ','
        << r.ensemble_macs << ',' << r.fine_macs << ',' << r.total_macs() << ','
        << r.reference_macs << ',';
    if (r.runtime_ms) out << std::fixed << std::setprecision(3) << *r.runtime_ms << std::defaultfloat;
    out << '\n';
  }
}

void write_cost_csv(const std::filesystem::path& path, std::span<const CostReport> reports) {
  std::ofstream f(path);
  if (!f) throw IoError(path.string(), "cannot open for writing");
  write_cost_csv(f, reports);
  if (!f) throw IoError(path.string(), "write failed");
}

}  // namespace diif
