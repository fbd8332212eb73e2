#include "diif/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "diif/decoder/c2f.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/errors.hpp"
#include "diif/numerics/adam.hpp"
#include "diif/pipeline/init.hpp"
#include "diif/pipeline/resample.hpp"

namespace diif {

namespace {

int lr_side(int crop, double scale) {
  return static_cast<int>(std::floor(crop / scale + 1e-9));
}

void add_params(std::vector<ParamView<float>>& out, const char* stage,
                std::vector<Layer<float>>& values, const std::vector<Layer<float>>& grads) {
  for (std::size_t l = 0; l < values.size(); ++l) {
    const std::string base = std::string(stage) + "." + std::to_string(l);
    out.push_back({base + ".weight", values[l].weight.values(), grads[l].weight.values()});
    out.push_back({base + ".bias", values[l].bias, grads[l].bias});
  }
}

}  // namespace

Architecture TrainConfig::architecture() const {
  Architecture arch;
  arch.feature_depth = 3 * (2 * encoder_radius + 1) * (2 * encoder_radius + 1);
  arch.hidden = hidden;
  arch.coarse_layers = coarse_layers;
  arch.fine_hidden_layers = fine_hidden_layers;
  arch.slice_ensemble = slice_ensemble;
  return arch;
}

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (batch < 1) throw ConfigError("batch size must be positive");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (encoder_radius < 0) throw ConfigError("encoder radius must be non-negative");
  if (hidden < 1 || coarse_layers < 1 || fine_hidden_layers < 0) {
    throw ConfigError("decoder layer counts must be positive");
  }
  if (scales.empty()) throw ConfigError("scale set is empty");
  for (double s : scales) {
    if (!(s >= 1.0)) throw ConfigError("training scales must be at least 1");
    if (lr_side(crop, s) < 1) {
      throw ConfigError("crop " + std::to_string(crop) + " is smaller than scale " +
                        std::to_string(s));
    }
  }
}

Image flip_horizontal(const Image& image) {
  Image out(image.height, image.width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int r = 0; r < image.height; ++r)
      for (int x = 0; x < image.width; ++x) out.at(c, r, x) = image.at(c, r, image.width - 1 - x);
  return out;
}

Image flip_vertical(const Image& image) {
  Image out(image.height, image.width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int r = 0; r < image.height; ++r)
      for (int x = 0; x < image.width; ++x) out.at(c, r, x) = image.at(c, image.height - 1 - r, x);
  return out;
}

Image transpose(const Image& image) {
  Image out(image.width, image.height);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int r = 0; r < image.height; ++r)
      for (int x = 0; x < image.width; ++x) out.at(c, x, r) = image.at(c, r, x);
  return out;
}

Image crop(const Image& image, int row, int col, int height, int width) {
  if (row < 0 || col < 0 || height < 1 || width < 1 || row + height > image.height ||
      col + width > image.width) {
    throw ArgumentError("crop window outside the image");
  }
  Image out(height, width);
  for (int c = 0; c < Image::kChannels; ++c)
    for (int r = 0; r < height; ++r)
      for (int x = 0; x < width; ++x) out.at(c, r, x) = image.at(c, row + r, col + x);
  return out;
}

std::vector<Image> load_training_images(const TrainConfig& config, int min_side) {
  std::error_code ec;
  if (!std::filesystem::is_directory(config.data_dir, ec)) {
    throw IoError(config.data_dir.string(), "training data directory not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(config.data_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) {
      return static_cast<char>(std::tolower(ch));
    });
    if (ext == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Image> images;
  for (const auto& f : files) {
    try {
      Image img = read_png(f);
      if (img.height < min_side || img.width < min_side) {
        if (config.on_skip) config.on_skip(f, "smaller than the crop size");
        continue;
      }
      images.push_back(std::move(img));
    } catch (const IoError& e) {
      if (config.on_skip) config.on_skip(f, e.what());
    }
  }
  if (images.empty()) {
    throw ConfigError("no usable training images in " + config.data_dir.string());
  }
  return images;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  return train(config, load_training_images(config, config.crop));
}

TrainResult train(const TrainConfig& config, const std::vector<Image>& images) {
  config.validate();
  if (images.empty()) throw ConfigError("training set is empty");
  for (const auto& img : images) {
    if (img.height < config.crop || img.width < config.crop) {
      throw ConfigError("training image smaller than the crop size");
    }
  }
  const Architecture arch = config.architecture();
  TrainResult result;
  result.weights = weight_init(arch, config.seed);
  if (config.iterations == 0) return result;

  // Separate streams keep initialisation independent of the sampling order.
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick_scale(0, config.scales.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_image(0, images.size() - 1);
  std::bernoulli_distribution coin(0.5);

  AdamState adam;
  const int decay_every =
      config.decay_every > 0 ? config.decay_every : std::max(1, config.iterations / 5);
  DecodeOptions decode_opts;
  decode_opts.threads = config.threads;

  DecoderWeights<float> grads = zero_gradients(result.weights);
  double window = 0.0;
  int window_count = 0;
  for (int it = 0; it < config.iterations; ++it) {
    const double s = config.scales[pick_scale(rng)];
    const int lr_n = lr_side(config.crop, s);
    const GroupPlan plan = make_plan(lr_n, lr_n, s, config.slicing);
    const int hr_n = plan.out_height();

    grads = zero_gradients(result.weights);
    const double norm = static_cast<double>(config.batch) * plan.output_grid().pixel_count() * 3;
    double loss = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      const Image& src = images[pick_image(rng)];
      std::uniform_int_distribution<int> pick_row(0, src.height - hr_n);
      std::uniform_int_distribution<int> pick_col(0, src.width - hr_n);
      const int r0 = pick_row(rng);
      const int c0 = pick_col(rng);
      Image hr = crop(src, r0, c0, hr_n, hr_n);
      if (coin(rng)) hr = flip_horizontal(hr);
      if (coin(rng)) hr = flip_vertical(hr);
      if (coin(rng)) hr = transpose(hr);
      const Image lr_img = bicubic_resample(hr, lr_n, lr_n);
      const FeatureMap<float> features = unfold_encode(lr_img, config.encoder_radius);

      DecodeTape<float> tape;
      const Matrix<float> pred = decode_image(features, plan, result.weights, decode_opts, &tape);
      const Matrix<float> target = image_to_rows<float>(hr);
      Matrix<float> d_rgb(pred.rows(), 3);
      const auto pv = pred.values();
      const auto tv = target.values();
      auto dv = d_rgb.values();
      for (std::size_t i = 0; i < pv.size(); ++i) {
        const double diff = static_cast<double>(pv[i]) - static_cast<double>(tv[i]);
        loss += std::abs(diff);
        dv[i] = static_cast<float>((diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0)) / norm);
      }
      decoder_backward(tape, d_rgb, result.weights, grads, nullptr, config.threads);
    }
    loss /= norm;
    result.losses.push_back(loss);

    std::vector<ParamView<float>> params;
    add_params(params, "coarse", result.weights.coarse, grads.coarse);
    add_params(params, "fine", result.weights.fine, grads.fine);
    adam.lr = config.lr * std::pow(config.lr_decay, static_cast<double>(it / decay_every));
    adam_step(std::span<const ParamView<float>>(params), adam);

    window += loss;
    ++window_count;
    if (config.log_every > 0 && (it + 1) % config.log_every == 0) {
      if (config.on_log) config.on_log(it + 1, window / window_count);
      window = 0.0;
      window_count = 0;
    }
  }
  return result;
}

}  // namespace diif
