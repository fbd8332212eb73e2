#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diif/costmodel/cost.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/encoder/weights_io.hpp"
#include "diif/errors.hpp"
#include "diif/numerics/parallel.hpp"
#include "diif/pipeline/train.hpp"
#include "diif/pipeline/upscale.hpp"
#include "diif/pipeline/verify.hpp"

namespace {

using namespace diif;

void print_cost(const CostReport& r) {
  std::cout << "scale " << r.scale << ": " << r.groups << " groups, " << r.slices << " slices\n"
            << "  coarse MACs    " << r.coarse_macs << "\n"
            << "  ensemble MACs  " << r.ensemble_macs << "\n"
            << "  fine MACs      " << r.fine_macs << "\n"
            << "  total MACs     " << r.total_macs() << "\n"
            << "  per-pixel reference MACs " << r.reference_macs << "\n";
}

SlicingOptions slicing_from(const std::string& strategy, int n, int fixed_interval) {
  SlicingOptions s;
  s.strategy = parse_slice_strategy(strategy);
  s.multiplier = n;
  s.fixed_interval = fixed_interval;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine implicit image decoder: upscaling, training and cost tools"};
  app.require_subcommand(1);

  // upscale
  auto* up = app.add_subcommand("upscale", "Upscale a PNG with a trained decoder");
  std::string up_input, up_out = "out.png", up_weights, up_features, up_strategy = "linear";
  double up_scale = 2.0;
  int up_n = 1, up_fixed = 4;
  bool up_no_ensemble = false;
  up->add_option("--input", up_input, "Input PNG")->required();
  up->add_option("--scale", up_scale, "Scale factor (>= 1)")->required();
  up->add_option("--out", up_out, "Output PNG")->capture_default_str();
  up->add_option("--weights", up_weights, "Decoder weights file")->required();
  up->add_option("--features", up_features, "Feature map file to decode instead of encoding the input");
  up->add_option("--strategy", up_strategy, "Slicing strategy")
      ->check(CLI::IsMember({"linear", "constant", "fixed"}))
      ->capture_default_str();
  up->add_option("--n", up_n, "Slicing multiplier")->capture_default_str();
  up->add_option("--fixed-interval", up_fixed, "Interval for the fixed strategy")->capture_default_str();
  up->add_flag("--no-ensemble", up_no_ensemble, "Require weights trained without slice ensemble");

  // train
  auto* tr = app.add_subcommand("train", "Train a decoder on a directory of PNGs");
  TrainConfig cfg;
  std::string tr_data, tr_out, tr_strategy = "linear";
  tr->add_option("--data", tr_data, "Directory of training PNGs")->required();
  tr->add_option("--iters", cfg.iterations, "Iterations")->required();
  tr->add_option("--seed", cfg.seed, "Random seed")->required();
  tr->add_option("--out", tr_out, "Output weights file")->required();
  tr->add_option("--crop", cfg.crop, "HR crop size")->capture_default_str();
  tr->add_option("--batch", cfg.batch, "Batch size")->capture_default_str();
  tr->add_option("--lr", cfg.lr, "Initial learning rate")->capture_default_str();
  tr->add_option("--hidden", cfg.hidden, "Hidden width")->capture_default_str();
  tr->add_option("--radius", cfg.encoder_radius, "Unfold encoder radius")->capture_default_str();
  tr->add_option("--strategy", tr_strategy, "Slicing strategy during training")
      ->check(CLI::IsMember({"linear", "constant", "fixed"}))
      ->capture_default_str();
  tr->add_flag("--no-ensemble", [&](std::int64_t) { cfg.slice_ensemble = false; },
               "Train the variant without slice ensemble");

  // bench
  auto* be = app.add_subcommand("bench", "MAC counts and decode timing per scale");
  int be_width = 320, be_height = 180, be_reps = 1, be_n = 1, be_fixed = 4;
  std::vector<double> be_scales = {2, 3, 4, 6, 12, 18, 24};
  std::string be_weights, be_report, be_strategy = "linear";
  bool be_no_timing = false;
  be->add_option("--width", be_width, "Input width")->capture_default_str();
  be->add_option("--height", be_height, "Input height")->capture_default_str();
  be->add_option("--scales", be_scales, "Scale factors")->delimiter(',')->capture_default_str();
  be->add_option("--weights", be_weights, "Decoder weights file")->required();
  be->add_option("--report", be_report, "CSV output path");
  be->add_option("--reps", be_reps, "Timed repetitions per scale")->capture_default_str();
  be->add_option("--strategy", be_strategy, "Slicing strategy")
      ->check(CLI::IsMember({"linear", "constant", "fixed"}))
      ->capture_default_str();
  be->add_option("--n", be_n, "Slicing multiplier")->capture_default_str();
  be->add_option("--fixed-interval", be_fixed, "Interval for the fixed strategy")->capture_default_str();
  be->add_flag("--no-timing", be_no_timing, "Only count MACs");

  // verify
  auto* ve = app.add_subcommand("verify", "Run the oracle and invariant self-checks");
  std::string ve_golden;
  ve->add_option("--golden", ve_golden, "Directory of golden vector JSON files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*up) {
      const auto weights = load_weights(up_weights);
      if (up_no_ensemble && weights.architecture().slice_ensemble) {
        throw ConfigError(up_weights + " was trained with slice ensemble");
      }
      UpscaleOptions opts;
      opts.scale = up_scale;
      opts.slicing = slicing_from(up_strategy, up_n, up_fixed);
      opts.threads = thread_limit();
      const UpscaleResult result =
          up_features.empty() ? upscale(read_png(up_input), weights, opts)
                              : upscale(load_feature_map(up_features), weights, opts);
      write_png(up_out, result.image);
      std::cout << "wrote " << up_out << " (" << result.image.width << "x" << result.image.height
                << ")\n";
      print_cost(result.cost);
      return 0;
    }
    if (*tr) {
      cfg.data_dir = tr_data;
      cfg.slicing.strategy = parse_slice_strategy(tr_strategy);
      cfg.threads = thread_limit();
      cfg.on_log = [](int it, double loss) {
        std::cout << "iter " << it << " loss " << loss << std::endl;
      };
      cfg.on_skip = [](const std::filesystem::path& p, const std::string& why) {
        std::cerr << "warning: skipping " << p.string() << ": " << why << "\n";
      };
      const TrainResult result = train(cfg);
      save_weights(tr_out, result.weights);
      std::cout << "saved " << tr_out << "\n";
      return 0;
    }
    if (*be) {
      const auto weights = load_weights(be_weights);
      BenchConfig bc;
      bc.width = be_width;
      bc.height = be_height;
      bc.arch = weights.architecture();
      bc.slicing = slicing_from(be_strategy, be_n, be_fixed);
      bc.weights = be_no_timing ? nullptr : &weights;
      bc.threads = thread_limit();
      const auto reports = benchmark_decode(bc, be_scales, be_reps);
      if (!be_report.empty()) write_cost_csv(std::filesystem::path(be_report), reports);
      write_cost_csv(std::cout, reports);
      return 0;
    }
    if (*ve) {
      VerifyOptions vo;
      if (!ve_golden.empty()) vo.golden_dir = ve_golden;
      bool ok = true;
      for (const auto& c : run_self_checks(vo)) {
        const char* tag = c.informational ? "INFO" : (c.passed ? "PASS" : "FAIL");
        std::cout << tag << "  " << c.name << "  (" << c.detail << ")\n";
        if (!c.informational && !c.passed) ok = false;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
