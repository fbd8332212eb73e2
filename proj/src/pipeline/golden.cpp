#include "diif/pipeline/golden.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

#include "diif/decoder/c2f.hpp"
#include "diif/errors.hpp"
#include "json.hpp"

namespace diif {

namespace {

using nlohmann::json;

std::string bytes_of(std::span<const double> values) {
  std::string bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
  }
  return bytes;
}

json layer_json(const Layer<double>& layer) {
  return {{"rows", layer.in()},
          {"cols", layer.out()},
          {"weight", base64_encode_f64(layer.weight.values())},
          {"bias", base64_encode_f64(layer.bias)}};
}

Layer<double> layer_from(const json& j) {
  const std::size_t rows = j.at("rows").get<std::size_t>();
  const std::size_t cols = j.at("cols").get<std::size_t>();
  Layer<double> layer(rows, cols);
  const auto w = base64_decode_f64(j.at("weight").get<std::string>());
  const auto b = base64_decode_f64(j.at("bias").get<std::string>());
  if (w.size() != rows * cols || b.size() != cols) {
    throw ConfigError("golden layer payload does not match its shape");
  }
  std::copy(w.begin(), w.end(), layer.weight.values().begin());
  layer.bias = b;
  return layer;
}

}  // namespace

std::string base64_encode_f64(std::span<const double> values) {
  namespace it = boost::archive::iterators;
  using Encoder = it::base64_from_binary<it::transform_width<std::string::const_iterator, 6, 8>>;
  const std::string bytes = bytes_of(values);
  std::string out(Encoder(bytes.begin()), Encoder(bytes.end()));
  out.append((4 - out.size() % 4) % 4, '=');
  return out;
}

std::vector<double> base64_decode_f64(const std::string& text) {
  namespace it = boost::archive::iterators;
  using Decoder = it::transform_width<it::binary_from_base64<std::string::const_iterator>, 8, 6>;
  std::string padded = text;
  const std::size_t pad = static_cast<std::size_t>(std::count(padded.begin(), padded.end(), '='));
  std::replace(padded.begin(), padded.end(), '=', 'A');
  std::string bytes;
  try {
    bytes.assign(Decoder(padded.begin()), Decoder(padded.end()));
  } catch (const std::exception&) {
    throw ConfigError("invalid base64 payload");
  }
  bytes.resize(bytes.size() - std::min(pad, bytes.size()));
  if (bytes.size() % 8 != 0) throw ConfigError("base64 payload is not a whole number of f64");
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

void save_golden(const std::filesystem::path& path, const GoldenCase& g) {
  json coarse = json::array();
  json fine = json::array();
  for (const auto& l : g.weights.coarse) coarse.push_back(layer_json(l));
  for (const auto& l : g.weights.fine) fine.push_back(layer_json(l));
  const json doc = {
      {"name", g.name},
      {"op", g.op},
      {"seed", g.seed},
      {"tolerance", g.tolerance},
      {"scale", g.scale},
      {"slicing",
       {{"strategy", std::string(to_string(g.slicing.strategy))},
        {"n", g.slicing.multiplier},
        {"fixed_interval", g.slicing.fixed_interval}}},
      {"feature_map",
       {{"height", g.features.height},
        {"width", g.features.width},
        {"depth", g.features.depth},
        {"data", base64_encode_f64(g.features.data)}}},
      {"weights",
       {{"feature_depth", g.weights.feature_depth},
        {"hidden", g.weights.hidden},
        {"coarse", coarse},
        {"fine", fine}}},
      {"expected_rgb",
       {{"rows", g.expected_rgb.rows()},
        {"cols", g.expected_rgb.cols()},
        {"data", base64_encode_f64(g.expected_rgb.values())}}},
  };
  std::ofstream f(path);
  if (!f) throw IoError(path.string(), "cannot open for writing");
  f << doc.dump(2) << '\n';
  if (!f) throw IoError(path.string(), "write failed");
}

GoldenCase load_golden(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError(path.string(), "cannot open");
  GoldenCase g;
  try {
    const json doc = json::parse(f);
    g.name = doc.at("name").get<std::string>();
    g.op = doc.at("op").get<std::string>();
    g.seed = doc.value("seed", std::uint64_t{0});
    g.tolerance = doc.at("tolerance").get<double>();
    g.scale = doc.at("scale").get<double>();
    const json& sl = doc.at("slicing");
    g.slicing.strategy = parse_slice_strategy(sl.at("strategy").get<std::string>());
    g.slicing.multiplier = sl.value("n", 1);
    g.slicing.fixed_interval = sl.value("fixed_interval", 4);
    const json& fm = doc.at("feature_map");
    g.features = FeatureMap<double>(fm.at("height").get<int>(), fm.at("width").get<int>(),
                                    fm.at("depth").get<int>());
    const auto data = base64_decode_f64(fm.at("data").get<std::string>());
    if (data.size() != g.features.data.size()) {
      throw ConfigError("feature payload does not match its shape");
    }
    g.features.data = data;
    const json& w = doc.at("weights");
    g.weights.feature_depth = w.at("feature_depth").get<int>();
    g.weights.hidden = w.at("hidden").get<int>();
    for (const auto& l : w.at("coarse")) g.weights.coarse.push_back(layer_from(l));
    for (const auto& l : w.at("fine")) g.weights.fine.push_back(layer_from(l));
    const json& e = doc.at("expected_rgb");
    g.expected_rgb = Matrix<double>(e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>());
    const auto rgb = base64_decode_f64(e.at("data").get<std::string>());
    if (rgb.size() != g.expected_rgb.size()) {
      throw ConfigError("expected_rgb payload does not match its shape");
    }
    std::copy(rgb.begin(), rgb.end(), g.expected_rgb.values().begin());
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": malformed golden file: " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  g.weights.validate();
  return g;
}

GoldenOutcome check_golden(const GoldenCase& g) {
  if (g.op != "decode_image") throw ConfigError("unsupported golden op '" + g.op + "'");
  const FeatureMap<float> features = g.features.cast<float>();
  const DecoderWeights<float> weights = g.weights.cast<float>();
  const GroupPlan plan = make_plan(features.height, features.width, g.scale, g.slicing);
  const Matrix<float> rgb = decode_image(features, plan, weights);
  if (rgb.rows() != g.expected_rgb.rows() || rgb.cols() != g.expected_rgb.cols()) {
    throw ShapeError("golden '" + g.name + "' expects a different output size");
  }
  GoldenOutcome out{g.name, 0.0, g.tolerance, false};
  const auto a = rgb.values();
  const auto b = g.expected_rgb.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.max_abs_diff = std::max(out.max_abs_diff, std::abs(static_cast<double>(a[i]) - b[i]));
  }
  out.passed = out.max_abs_diff <= g.tolerance;
  return out;
}

std::vector<GoldenOutcome> check_golden_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<GoldenOutcome> out;
  for (const auto& f : files) out.push_back(check_golden(load_golden(f)));
  return out;
}

}  // namespace diif
