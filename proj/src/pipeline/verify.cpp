#include "diif/pipeline/verify.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "diif/costmodel/cost.hpp"
#include "diif/decoder/c2f.hpp"
#include "diif/errors.hpp"
#include "diif/numerics/gradcheck.hpp"
#include "diif/pipeline/golden.hpp"
#include "diif/pipeline/init.hpp"

namespace diif {

namespace {

template <typename T>
FeatureMap<T> random_features(int h, int w, int d, std::mt19937_64& rng) {
  FeatureMap<T> fm(h, w, d);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (auto& v : fm.data) v = static_cast<T>(dist(rng));
  return fm;
}

DecoderWeights<float> random_weights(const Architecture& arch, std::mt19937_64& rng) {
  DecoderWeights<float> w = weight_init(arch, rng());
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (auto* stage : {&w.coarse, &w.fine}) {
    for (auto& l : *stage) {
      for (float& b : l.bias) b = static_cast<float>(dist(rng));
    }
  }
  return w;
}

std::string fmt(const char* label, double v) {
  std::ostringstream os;
  os << label << v;
  return os.str();
}

CheckResult check_batched_vs_sequential(std::mt19937_64& rng) {
  const double scales[] = {1.0, 2.0, 2.5, 3.0, 4.0};
  std::uniform_int_distribution<int> side(1, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Architecture arch;
    arch.feature_depth = 3;
    arch.hidden = 16;
    arch.slice_ensemble = trial % 4 != 3;
    const auto w = random_weights(arch, rng);
    const auto fm = random_features<float>(side(rng), side(rng), 3, rng);
    SlicingOptions opts;
    opts.strategy = static_cast<SliceStrategy>(trial % 3);
    const GroupPlan plan = make_plan(fm.height, fm.width, scales[trial % 5], opts);
    DecodeOptions d;
    d.chunk_pixels = 7;
    const auto a = decode_image(fm, plan, w, d);
    const auto b = decode_sequential(fm, plan, w);
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(a.values()[i] - b.values()[i])));
    }
  }
  return {"batched decode matches sequential", worst <= 1e-5, false, fmt("max abs diff ", worst)};
}

CheckResult check_grouping(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> side(1, 9);
  std::uniform_real_distribution<double> scale(1.0, 6.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int h = side(rng), w = side(rng);
    const double s = trial % 2 == 0 ? std::floor(scale(rng)) : scale(rng);
    SlicingOptions opts;
    opts.strategy = static_cast<SliceStrategy>(trial % 3);
    const GroupPlan plan = make_plan(h, w, s, opts);
    std::vector<int> seen(plan.output_grid().pixel_count(), 0);
    for (int g = 0; g < plan.group_count(); ++g) {
      const auto members = plan.members(g);
      if (s == std::floor(s) && static_cast<double>(members.size()) != s * s) {
        return {"grouping and slicing laws", false, false, "integer-scale group size"};
      }
      std::vector<int> joined;
      for (const auto& sl : plan.slices(g)) joined.insert(joined.end(), sl.members.begin(), sl.members.end());
      const int u = plan.interval(g);
      const int k = static_cast<int>((members.size() + u - 1) / u);
      if (joined != members || plan.slice_count(g) != k) {
        return {"grouping and slicing laws", false, false, "slice reconstruction"};
      }
      for (int m : members) ++seen[static_cast<std::size_t>(m)];
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; })) {
      return {"grouping and slicing laws", false, false, "not a partition"};
    }
  }
  return {"grouping and slicing laws", true, false, "50 random plans"};
}

CheckResult check_ensemble_weights(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> q(-1.0, 1.0);
  const EnsembleRect rect;
  double worst = 0.0;
  bool negative = false;
  for (int i = 0; i < 10000; ++i) {
    const auto w = rect.weights({q(rng), q(rng)});
    negative = negative || std::any_of(w.begin(), w.end(), [](double v) { return v < 0.0; });
    worst = std::max(worst, std::abs(w[0] + w[1] + w[2] + w[3] - 1.0));
  }
  return {"ensemble weights sum to one", !negative && worst <= 1e-12, false,
          fmt("max deviation ", worst)};
}

// Pairs of queries straddling a shared group boundary by +-eps.
std::pair<double, double> boundary_jumps(std::mt19937_64& rng) {
  Architecture arch;
  arch.feature_depth = 3;
  arch.hidden = 16;
  const auto w = random_weights(arch, rng).cast<double>();
  const auto fm = random_features<double>(4, 4, 3, rng);
  const CoordGrid latent = fm.latent_grid();
  constexpr double eps = 1e-6;
  std::uniform_real_distribution<double> along(-0.99, 0.99);
  std::uniform_int_distribution<int> edge(0, 2);
  std::vector<Vec2> queries;
  for (int i = 0; i < 50; ++i) {
    const int k = edge(rng);
    const double t = along(rng);
    if (i % 2 == 0) {
      const double b = 0.5 * (latent.cols[k] + latent.cols[k + 1]);
      queries.push_back({t, b - eps});
      queries.push_back({t, b + eps});
    } else {
      const double b = 0.5 * (latent.rows[k] + latent.rows[k + 1]);
      queries.push_back({b - eps, t});
      queries.push_back({b + eps, t});
    }
  }
  Matrix<double> hidden;
  const auto rgb = decode_points(fm, w, std::span<const Vec2>(queries), &hidden);
  double hidden_jump = 0.0, rgb_jump = 0.0;
  for (std::size_t i = 0; i < queries.size(); i += 2) {
    for (std::size_t e = 0; e < hidden.cols(); ++e) {
      hidden_jump = std::max(hidden_jump, std::abs(hidden(i, e) - hidden(i + 1, e)));
    }
    for (std::size_t c = 0; c < 3; ++c) rgb_jump = std::max(rgb_jump, std::abs(rgb(i, c) - rgb(i + 1, c)));
  }
  return {hidden_jump, rgb_jump};
}

double l1_loss(const FeatureMap<double>& fm, const GroupPlan& plan, const DecoderWeights<double>& w,
               const Matrix<double>& target) {
  const auto pred = decode_image(fm, plan, w);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) loss += std::abs(pred.values()[i] - target.values()[i]);
  return loss / static_cast<double>(pred.size());
}

std::vector<std::span<double>> parameter_spans(DecoderWeights<double>& w) {
  std::vector<std::span<double>> out;
  for (auto* stage : {&w.coarse, &w.fine}) {
    for (auto& l : *stage) {
      out.push_back(l.weight.values());
      out.push_back(l.bias);
    }
  }
  return out;
}

CheckResult check_gradients(std::mt19937_64& rng) {
  Architecture arch;
  arch.feature_depth = 3;
  arch.hidden = 6;
  DecoderWeights<double> w = random_weights(arch, rng).cast<double>();
  const auto fm = random_features<double>(2, 2, 3, rng);
  const GroupPlan plan = make_plan(2, 2, 2.0, SlicingOptions{});
  Matrix<double> target(plan.output_grid().pixel_count(), 3);
  std::uniform_real_distribution<double> dist(-3.0, 3.0);
  for (double& v : target.values()) v = dist(rng);

  DecodeTape<double> tape;
  const auto pred = decode_image(fm, plan, w, {}, &tape);
  Matrix<double> d(pred.rows(), 3);
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred.values()[i] - target.values()[i];
    d.values()[i] = (diff > 0 ? 1.0 : -1.0) / n;
  }
  DecoderWeights<double> grads = zero_gradients(w);
  decoder_backward(tape, d, w, grads);

  std::vector<double> analytic, flat;
  for (auto s : parameter_spans(grads)) analytic.insert(analytic.end(), s.begin(), s.end());
  for (auto s : parameter_spans(w)) flat.insert(flat.end(), s.begin(), s.end());
  DecoderWeights<double> probe = w;
  const auto numeric = finite_diff_gradient(
      [&](std::span<const double> p) {
        std::size_t k = 0;
        for (auto s : parameter_spans(probe)) {
          std::copy(p.begin() + static_cast<std::ptrdiff_t>(k),
                    p.begin() + static_cast<std::ptrdiff_t>(k + s.size()), s.begin());
          k += s.size();
        }
        return l1_loss(fm, plan, probe, target);
      },
      flat, 1e-6);
  const double err = relative_error(analytic, numeric);
  return {"analytic gradients match finite differences", err <= 1e-4, false,
          fmt("relative error ", err)};
}

CheckResult check_macs() {
  Architecture arch;
  arch.feature_depth = 3;
  arch.hidden = 8;
  std::mt19937_64 rng(3);
  const auto w = random_weights(arch, rng);
  const auto fm = random_features<float>(10, 10, 3, rng);
  const GroupPlan plan = make_plan(10, 10, 4.0, SlicingOptions{});
  MacCounter counter;
  DecodeOptions d;
  d.counter = &counter;
  (void)decode_image(fm, plan, w, d);
  const CostReport r = count_macs(arch, plan);
  const bool ok = static_cast<std::int64_t>(counter.count()) == r.total_macs();
  return {"analytic MACs equal instrumented count", ok, false,
          "counted " + std::to_string(counter.count()) + ", analytic " +
              std::to_string(r.total_macs())};
}

CheckResult check_cost_scaling() {
  const Architecture arch;
  const double scales[] = {2, 4, 8, 16, 32};
  std::vector<std::pair<double, double>> ref, lin, cst;
  for (double s : scales) {
    SlicingOptions linear;
    SlicingOptions constant;
    constant.strategy = SliceStrategy::constant;
    const auto a = count_macs(arch, make_plan(180, 320, s, linear));
    const auto b = count_macs(arch, make_plan(180, 320, s, constant));
    ref.emplace_back(s, static_cast<double>(a.reference_macs));
    lin.emplace_back(s, static_cast<double>(a.coarse_macs));
    cst.emplace_back(s, static_cast<double>(b.coarse_macs));
  }
  const double sr = fit_scaling_exponent(ref).slope;
  const double sl = fit_scaling_exponent(lin).slope;
  const double sc = fit_scaling_exponent(cst).slope;
  const bool ok = sr >= 1.95 && sr <= 2.05 && sl >= 0.9 && sl <= 1.1 && sc >= -0.05 && sc <= 0.05;
  std::ostringstream os;
  os << "slopes reference " << sr << ", linear coarse " << sl << ", constant coarse " << sc;
  return {"cost scaling exponents", ok, false, os.str()};
}

}  // namespace

std::vector<CheckResult> run_self_checks(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<CheckResult> out;
  out.push_back(check_batched_vs_sequential(rng));
  out.push_back(check_grouping(rng));
  out.push_back(check_ensemble_weights(rng));
  const auto [hidden_jump, rgb_jump] = boundary_jumps(rng);
  out.push_back({"blended hidden continuous across group boundaries", hidden_jump <= 1e-4, false,
                 fmt("max jump ", hidden_jump)});
  out.push_back({"decoded colour jump across group boundaries", rgb_jump <= 1e-4, true,
                 fmt("max jump ", rgb_jump)});
  out.push_back(check_gradients(rng));
  out.push_back(check_macs());
  out.push_back(check_cost_scaling());
  if (options.golden_dir) {
    for (const auto& g : check_golden_dir(*options.golden_dir)) {
      out.push_back({"golden " + g.name, g.passed, false, fmt("max abs diff ", g.max_abs_diff)});
    }
  }
  return out;
}

}  // namespace diif
