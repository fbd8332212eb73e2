// Writes golden decode cases computed by the independent oracle.
// Usage: make_golden <output dir>

#include <iostream>
#include <random>
#include <string>

#include "diif/pipeline/golden.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

int main(int argc, char** argv) {
  using namespace diif;
  if (argc != 2) {
    std::cerr << "usage: make_golden <dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  struct Spec {
    const char* name;
    int h, w, depth, hidden, interval;
    double scale;
  };
  const Spec specs[] = {{"scale1_3x3", 3, 3, 3, 8, 1, 1.0},
                        {"scale2_4x3", 4, 3, 2, 8, 2, 2.0},
                        {"scale2p5_3x4", 3, 4, 3, 12, 3, 2.5},
                        {"scale4_2x2", 2, 2, 4, 16, 16, 4.0}};
  std::uint64_t seed = 1;
  for (const auto& s : specs) {
    std::mt19937_64 rng(seed);
    Architecture arch;
    arch.feature_depth = s.depth;
    arch.hidden = s.hidden;
    GoldenCase g;
    g.name = s.name;
    g.seed = seed++;
    g.scale = s.scale;
    g.slicing = {SliceStrategy::fixed, 1, s.interval};
    g.features = testing::random_features<double>(s.h, s.w, s.depth, rng);
    g.weights = testing::random_decoder<double>(arch, rng);
    const auto rows = oracle::decode(g.features, g.weights, s.scale, s.interval);
    g.expected_rgb = Matrix<double>(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t c = 0; c < 3; ++c) g.expected_rgb(i, c) = rows[i][c];
    save_golden(dir / (std::string(s.name) + ".json"), g);
  }
  return 0;
}
