#include "diif/decoder/weights.hpp"

#include "diif/errors.hpp"

namespace diif {

namespace {

std::string dims(std::size_t in, std::size_t out) {
  return std::to_string(in) + "->" + std::to_string(out);
}

template <typename T>
void check_chain(const std::vector<Layer<T>>& layers, std::size_t in, std::size_t hidden,
                 std::size_t final_out, const char* stage) {
  if (layers.empty()) throw ConfigError(std::string(stage) + " stage has no layers");
  std::size_t expected_in = in;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const bool last = l + 1 == layers.size();
    const std::size_t expected_out = last ? final_out : hidden;
    const auto& layer = layers[l];
    if (layer.in() != expected_in || layer.out() != expected_out ||
        layer.bias.size() != layer.out()) {
      throw ConfigError(std::string(stage) + " layer " + std::to_string(l) + " is " +
                        dims(layer.in(), layer.out()) + ", expected " +
                        dims(expected_in, expected_out));
    }
    expected_in = expected_out;
  }
}

}  // namespace

template <typename T>
Architecture DecoderWeights<T>::architecture() const {
  if (feature_depth < 1 || hidden < 1) throw ConfigError("feature depth and hidden dim must be >= 1");
  if (coarse.empty() || fine.empty()) throw ConfigError("decoder needs coarse and fine layers");
  Architecture arch;
  arch.feature_depth = feature_depth;
  arch.hidden = hidden;
  arch.coarse_layers = static_cast<int>(coarse.size());
  arch.fine_hidden_layers = static_cast<int>(fine.size()) - 1;
  const auto in = coarse.front().in();
  if (in == static_cast<std::size_t>(16 * feature_depth + 4)) {
    arch.slice_ensemble = true;
  } else if (in == static_cast<std::size_t>(9 * feature_depth + 4)) {
    arch.slice_ensemble = false;
  } else {
    throw ConfigError("coarse input width " + std::to_string(in) + " matches neither 16*" +
                      std::to_string(feature_depth) + "+4 nor 9*" + std::to_string(feature_depth) +
                      "+4");
  }
  check_chain(coarse, in, hidden, hidden, "coarse");
  check_chain(fine, hidden + 2, hidden, 3, "fine");
  return arch;
}

template <typename T>
std::size_t DecoderWeights<T>::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : coarse) n += l.parameter_count();
  for (const auto& l : fine) n += l.parameter_count();
  return n;
}

template <typename T>
ReferenceArchitecture ReferenceWeights<T>::architecture() const {
  if (feature_depth < 1 || hidden < 1) throw ConfigError("feature depth and hidden dim must be >= 1");
  if (layers.size() < 2) throw ConfigError("reference decoder needs at least two layers");
  ReferenceArchitecture arch;
  arch.feature_depth = feature_depth;
  arch.hidden = hidden;
  arch.hidden_layers = static_cast<int>(layers.size()) - 1;
  check_chain(layers, arch.input_width(), hidden, 3, "reference");
  return arch;
}

template <typename T>
DecoderWeights<T> make_decoder_weights(const Architecture& arch) {
  if (arch.feature_depth < 1 || arch.hidden < 1 || arch.coarse_layers < 1 ||
      arch.fine_hidden_layers < 0) {
    throw ConfigError("invalid decoder architecture");
  }
  DecoderWeights<T> w;
  w.feature_depth = arch.feature_depth;
  w.hidden = arch.hidden;
  std::size_t in = arch.coarse_input_width();
  for (int l = 0; l < arch.coarse_layers; ++l) {
    w.coarse.emplace_back(in, arch.hidden);
    in = arch.hidden;
  }
  in = arch.fine_input_width();
  for (int l = 0; l < arch.fine_hidden_layers; ++l) {
    w.fine.emplace_back(in, arch.hidden);
    in = arch.hidden;
  }
  w.fine.emplace_back(in, 3);
  return w;
}

template <typename T>
ReferenceWeights<T> make_reference_weights(const ReferenceArchitecture& arch) {
  if (arch.feature_depth < 1 || arch.hidden < 1 || arch.hidden_layers < 1) {
    throw ConfigError("invalid reference architecture");
  }
  ReferenceWeights<T> w;
  w.feature_depth = arch.feature_depth;
  w.hidden = arch.hidden;
  std::size_t in = arch.input_width();
  for (int l = 0; l < arch.hidden_layers; ++l) {
    w.layers.emplace_back(in, arch.hidden);
    in = arch.hidden;
  }
  w.layers.emplace_back(in, 3);
  return w;
}

template struct DecoderWeights<float>;
template struct DecoderWeights<double>;
template struct ReferenceWeights<float>;
template struct ReferenceWeights<double>;
template DecoderWeights<float> make_decoder_weights<float>(const Architecture&);
template DecoderWeights<double> make_decoder_weights<double>(const Architecture&);
template ReferenceWeights<float> make_reference_weights<float>(const ReferenceArchitecture&);
template ReferenceWeights<double> make_reference_weights<double>(const ReferenceArchitecture&);

}  // namespace diif
