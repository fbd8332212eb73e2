#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "diif/decoder/c2f.hpp"
#include "diif/decoder/reference.hpp"
#include "diif/errors.hpp"
#include "diif/numerics/gradcheck.hpp"
#include "oracle.hpp"
#include "synthetic.hpp"

namespace diif {
namespace {

using testing::random_decoder;
using testing::random_features;

Architecture small_arch(int depth = 3, int hidden = 8, bool ensemble = true) {
  Architecture a;
  a.feature_depth = depth;
  a.hidden = hidden;
  a.slice_ensemble = ensemble;
  return a;
}

TEST(LocalCoords, IntegerScaleFormsSymmetricPattern) {
  const GroupPlan plan = make_plan(2, 2, 4.0, {});
  const auto q = local_coords(plan, 0);
  ASSERT_EQ(q.size(), 16u);
  const double axis[4] = {-0.75, -0.25, 0.25, 0.75};
  for (int m = 0; m < 16; ++m) {
    EXPECT_DOUBLE_EQ(q[m].y, axis[m / 4]);
    EXPECT_DOUBLE_EQ(q[m].x, axis[m % 4]);
  }
  for (int g = 1; g < 4; ++g) EXPECT_EQ(local_coords(plan, g), q);
}

TEST(LocalCoords, ScaleOneIsCentre) {
  const GroupPlan plan = make_plan(3, 4, 1.0, {});
  for (int g = 0; g < plan.group_count(); ++g) {
    EXPECT_EQ(local_coords(plan, g), (std::vector<Vec2>{{0.0, 0.0}}));
  }
}

TEST(LocalCoords, FractionalScaleMatchesDirectArithmetic) {
  const GroupPlan plan = make_plan(4, 4, 2.5, {});
  for (int g = 0; g < plan.group_count(); ++g) {
    const auto members = plan.members(g);
    const auto q = local_coords(plan, g);
    for (std::size_t m = 0; m < members.size(); ++m) {
      const int r = members[m] / 10, c = members[m] % 10;
      const auto [li, lj] = oracle::nearest_latent(oracle::centre(r, 10), oracle::centre(c, 10), 4, 4);
      EXPECT_NEAR(q[m].y, (oracle::centre(r, 10) - oracle::centre(li, 4)) * 4, 1e-12);
      EXPECT_NEAR(q[m].x, (oracle::centre(c, 10) - oracle::centre(lj, 4)) * 4, 1e-12);
      EXPECT_LE(std::abs(q[m].y), 1.0);
      EXPECT_LE(std::abs(q[m].x), 1.0);
    }
  }
}

TEST(EnsembleRect, CentreGivesEqualWeights) {
  const auto w = EnsembleRect{}.weights({0.0, 0.0});
  for (double v : w) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(EnsembleRect, VertexGetsAllWeight) {
  const auto w = EnsembleRect{}.weights({1.0, 1.0});
  EXPECT_EQ(w, (std::array<double, 4>{0.0, 0.0, 0.0, 1.0}));
  const auto tl = EnsembleRect{}.weights({-1.0, -1.0});
  EXPECT_EQ(tl, (std::array<double, 4>{1.0, 0.0, 0.0, 0.0}));
}

TEST(EnsembleRect, RandomWeightsArePartitionOfUnity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const auto w = EnsembleRect{}.weights({u(rng), u(rng)});
    for (double v : w) ASSERT_GE(v, 0.0);
    ASSERT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-12);
  }
}

TEST(EnsembleRect, AreaIsFour) { EXPECT_EQ(EnsembleRect{}.area(), 4.0); }

FeatureMap<double> indexed_features(int h, int w, int d) {
  FeatureMap<double> fm(h, w, d);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      for (int k = 0; k < d; ++k) fm.code(i, j)[k] = 100.0 * i + 10.0 * j + k;
  return fm;
}

TEST(UnfoldVertexCode, ConstantMapRepeats) {
  FeatureMap<float> fm(5, 5, 2, 0.75f);
  const auto code = unfold_vertex_code(fm, Vec2{1.5, 2.5});
  ASSERT_EQ(code.size(), 32u);
  for (float v : code) EXPECT_EQ(v, 0.75f);
}

TEST(UnfoldVertexCode, InteriorMatchesHandGather) {
  const auto fm = indexed_features(6, 6, 2);
  const auto code = unfold_vertex_code(fm, Vec2{2.5, 3.5});
  std::vector<double> expected;
  for (int r : {1, 2, 3, 4})
    for (int c : {2, 3, 4, 5})
      for (int k = 0; k < 2; ++k) expected.push_back(100.0 * r + 10.0 * c + k);
  EXPECT_EQ(code, expected);
}

TEST(UnfoldVertexCode, CornerIsClamped) {
  const auto fm = indexed_features(6, 6, 1);
  const auto code = unfold_vertex_code(fm, Vec2{-0.5, -0.5});
  std::vector<double> expected;
  for (int r : {0, 0, 0, 1})
    for (int c : {0, 0, 0, 1}) expected.push_back(100.0 * r + 10.0 * c);
  EXPECT_EQ(code, expected);
  const auto far = unfold_vertex_code(fm, Vec2{5.5, 5.5});
  for (double v : far) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(far.back(), 550.0);
}

TEST(UnfoldVertexCode, NonCornerPositionThrows) {
  const auto fm = indexed_features(3, 3, 1);
  EXPECT_THROW(unfold_vertex_code(fm, Vec2{1.0, 0.5}), ArgumentError);
}

TEST(UnfoldCenterCode, MatchesHandGather) {
  const auto fm = indexed_features(4, 4, 1);
  std::vector<double> code(9);
  unfold_center_code(fm, 0, 2, std::span<double>(code));
  // Row -1 clamps to row 0.
  EXPECT_EQ(code, (std::vector<double>{10, 20, 30, 10, 20, 30, 110, 120, 130}));
  unfold_center_code(fm, 3, 3, std::span<double>(code));
  EXPECT_EQ(code, (std::vector<double>{220, 230, 230, 320, 330, 330, 320, 330, 330}));
}

TEST(CoarseForward, ZeroWeightsGiveZeroHidden) {
  const auto w = make_decoder_weights<float>(small_arch());
  const std::vector<float> code(48, 1.0f);
  const auto h = coarse_forward<float>(code, {0.5, -0.5}, {0.7, 0.2}, w.coarse);
  EXPECT_EQ(h, std::vector<float>(8, 0.0f));
}

TEST(CoarseForward, SingleCoordinateSlice) {
  std::mt19937_64 rng(1);
  const auto w = random_decoder<double>(small_arch(), rng);
  const std::vector<double> code(48, 0.3);
  const auto h = coarse_forward<double>(code, {0.25, -0.5}, {0.25, -0.5}, w.coarse);
  ASSERT_EQ(h.size(), 8u);
  for (double v : h) EXPECT_TRUE(std::isfinite(v));
}

TEST(CoarseForward, WidthMismatchIsConfigError) {
  const auto w = make_decoder_weights<float>(small_arch());
  const std::vector<float> code(47, 1.0f);
  EXPECT_THROW(coarse_forward<float>(code, {}, {}, w.coarse), ConfigError);
}

TEST(CoarseForward, MatchesOracle) {
  std::mt19937_64 rng(2);
  const auto w = random_decoder<double>(small_arch(3, 16), rng);
  const auto wf = w.cast<float>();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> in(48);
    for (double& v : in) v = u(rng);
    const Vec2 a{u(rng), u(rng)}, b{u(rng), u(rng)};
    std::vector<float> code(in.begin(), in.end());
    const auto h = coarse_forward<float>(code, a, b, wf.coarse);
    in.insert(in.end(), {a.y, a.x, b.y, b.x});
    std::vector<double> inf(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) inf[i] = static_cast<float>(in[i]);
    const auto ref = oracle::mlp(wf.cast<double>().coarse, inf, true);
    for (std::size_t e = 0; e < h.size(); ++e) EXPECT_NEAR(h[e], ref[e], 1e-5);
  }
}

TEST(EnsembleHidden, BlendsByOppositeArea) {
  std::array<std::vector<double>, 4> hs{std::vector<double>{1, 0}, std::vector<double>{0, 1},
                                        std::vector<double>{2, 2}, std::vector<double>{4, -4}};
  const Vec2 q{0.5, -0.5};
  const auto h = ensemble_hidden(hs, q);
  const double w0 = 0.5 * 1.5 / 4, w1 = 0.5 * 0.5 / 4, w2 = 1.5 * 1.5 / 4, w3 = 1.5 * 0.5 / 4;
  EXPECT_NEAR(h[0], w0 * 1 + w2 * 2 + w3 * 4, 1e-15);
  EXPECT_NEAR(h[1], w1 * 1 + w2 * 2 - w3 * 4, 1e-15);
  MacCounter counter;
  ensemble_hidden(hs, q, {}, &counter);
  EXPECT_EQ(counter.count(), 8u);
}

TEST(FineForward, ZeroWeightsGiveFinalBias) {
  auto w = make_decoder_weights<float>(small_arch());
  w.fine.back().bias = {0.1f, 0.2f, 0.3f};
  const std::vector<float> h(8, 5.0f);
  EXPECT_EQ(fine_forward<float>(h, {0.3, 0.4}, w.fine), (std::array<float, 3>{0.1f, 0.2f, 0.3f}));
}

TEST(FineForward, DependsOnRelativeCoordinate) {
  std::mt19937_64 rng(4);
  const auto w = random_decoder<double>(small_arch(), rng);
  const std::vector<double> h(8, 0.5);
  EXPECT_NE(fine_forward<double>(h, {0.1, 0.1}, w.fine), fine_forward<double>(h, {-0.6, 0.4}, w.fine));
}

TEST(FineForward, OutputNotClamped) {
  auto w = make_decoder_weights<double>(small_arch());
  w.fine.back().bias = {-2.0, 0.5, 7.0};
  const std::vector<double> h(8, 0.0);
  EXPECT_EQ(fine_forward<double>(h, {}, w.fine), (std::array<double, 3>{-2.0, 0.5, 7.0}));
}

TEST(FineForward, MatchesOracleAndRejectsBadWidth) {
  std::mt19937_64 rng(6);
  const auto w = random_decoder<double>(small_arch(3, 16), rng);
  std::vector<double> h(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& v : h) v = u(rng);
  const auto rgb = fine_forward<double>(h, {0.2, -0.7}, w.fine);
  auto in = h;
  in.insert(in.end(), {0.2, -0.7});
  const auto ref = oracle::mlp(w.fine, in, false);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb[c], ref[c], 1e-12);
  const std::vector<double> short_h(15);
  EXPECT_THROW(fine_forward<double>(short_h, {}, w.fine), ConfigError);
}

TEST(DecodeImage, ScaleOneSingletons) {
  std::mt19937_64 rng(9);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(2, 2, 3, rng);
  const GroupPlan plan = make_plan(2, 2, 1.0, {});
  EXPECT_EQ(plan.total_slices(), 4);
  const auto rgb = decode_image(fm, plan, w);
  ASSERT_EQ(rgb.rows(), 4u);
  const auto ref = oracle::decode(fm, w, 1.0, 1);
  for (std::size_t p = 0; p < 4; ++p)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb(p, c), ref[p][c], 1e-12);
}

struct DecodeCase {
  int h, w;
  double scale;
  SlicingOptions slicing;
  bool ensemble;
};

std::vector<DecodeCase> random_cases(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> side(1, 8);
  const double scales[] = {1.0, 2.0, 2.5, 3.0, 4.0};
  std::vector<DecodeCase> cases;
  for (int i = 0; i < count; ++i) {
    SlicingOptions s{static_cast<SliceStrategy>(i % 3), 1 + i % 2, 1 + i % 5};
    cases.push_back({side(rng), side(rng), scales[i % 5], s, i % 7 != 6});
  }
  return cases;
}

TEST(DecodeImage, MatchesIndependentOracle) {
  std::mt19937_64 rng(12);
  for (const auto& c : random_cases(20, 99)) {
    const auto w = random_decoder<double>(small_arch(3, 8, c.ensemble), rng);
    const auto fm = random_features<double>(c.h, c.w, 3, rng);
    const GroupPlan plan = make_plan(c.h, c.w, c.scale, c.slicing);
    const auto rgb = decode_image(fm, plan, w);
    // The oracle applies one interval to every group; use plans where that holds.
    const int u = plan.interval(0);
    bool uniform = true;
    for (int g = 0; g < plan.group_count(); ++g) {
      uniform = uniform && (plan.interval(g) == u || plan.interval(g) == plan.group_size(g));
    }
    if (!uniform) continue;
    const auto ref = oracle::decode(fm, w, c.scale, u);
    for (std::size_t p = 0; p < rgb.rows(); ++p)
      for (int ch = 0; ch < 3; ++ch) ASSERT_NEAR(rgb(p, ch), ref[p][ch], 1e-10) << c.h << "x" << c.w << " s=" << c.scale << " strat=" << int(c.slicing.strategy) << " ens=" << c.ensemble << " p=" << p << " u=" << u;
  }
}

TEST(DecodeImage, BatchedMatchesSequential) {
  std::mt19937_64 rng(13);
  for (const auto& c : random_cases(20, 7)) {
    const auto wd = random_decoder<double>(small_arch(3, 8, c.ensemble), rng);
    const auto fmd = random_features<double>(c.h, c.w, 3, rng);
    const GroupPlan plan = make_plan(c.h, c.w, c.scale, c.slicing);
    DecodeOptions opts;
    opts.chunk_pixels = 5;
    const auto a = decode_image(fmd, plan, wd, opts);
    const auto b = decode_sequential(fmd, plan, wd);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_LE(std::abs(a.values()[i] - b.values()[i]), 1e-10);
    const auto wf = wd.cast<float>();
    const auto fmf = fmd.cast<float>();
    const auto af = decode_image(fmf, plan, wf, opts);
    const auto bf = decode_sequential(fmf, plan, wf);
    for (std::size_t i = 0; i < af.size(); ++i) ASSERT_LE(std::abs(af.values()[i] - bf.values()[i]), 1e-5f);
  }
}

TEST(DecodeImage, IndependentOfChunkingAndThreads) {
  std::mt19937_64 rng(14);
  const auto w = random_decoder<float>(small_arch(3, 16), rng);
  const auto fm = random_features<float>(7, 5, 3, rng);
  const GroupPlan plan = make_plan(7, 5, 3.0, {});
  const auto base = decode_image(fm, plan, w, {1, 4096, nullptr});
  for (std::size_t chunk : {1u, 9u, 50u}) {
    for (int threads : {1, 2, 4}) {
      EXPECT_EQ(decode_image(fm, plan, w, {threads, chunk, nullptr}), base);
    }
  }
}

TEST(DecodeImage, EveryStrategyCoversEveryPixel) {
  std::mt19937_64 rng(15);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(3, 4, 3, rng);
  for (auto s : {SliceStrategy::fixed, SliceStrategy::linear, SliceStrategy::constant}) {
    const GroupPlan plan = make_plan(3, 4, 2.5, {s, 1, 3});
    const auto seq = decode_sequential(fm, plan, w);
    const auto rgb = decode_image(fm, plan, w);
    ASSERT_EQ(rgb.rows(), 7u * 10u);
    EXPECT_EQ(rgb, seq);
    std::vector<int> covered(rgb.rows(), 0);
    for (int g = 0; g < plan.group_count(); ++g)
      for (const auto& sl : plan.slices(g))
        for (int m : sl.members) ++covered[m];
    EXPECT_TRUE(std::all_of(covered.begin(), covered.end(), [](int v) { return v == 1; }));
  }
}

TEST(DecodeImage, UnitIntervalSlicesAreDegenerate) {
  std::mt19937_64 rng(16);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(3, 3, 3, rng);
  const GroupPlan plan = make_plan(3, 3, 3.0, {SliceStrategy::fixed, 1, 1});
  for (int g = 0; g < plan.group_count(); ++g)
    for (const auto& sl : plan.slices(g)) EXPECT_EQ(sl.first, sl.last);
  const auto rgb = decode_image(fm, plan, w);
  const auto ref = oracle::decode(fm, w, 3.0, 1);
  for (std::size_t p = 0; p < rgb.rows(); ++p)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb(p, c), ref[p][c], 1e-12);
}

TEST(DecodeImage, MismatchedPlanOrDepthIsConfigError) {
  std::mt19937_64 rng(17);
  const auto w = random_decoder<float>(small_arch(), rng);
  const auto fm = random_features<float>(3, 3, 3, rng);
  EXPECT_THROW(decode_image(fm, make_plan(4, 3, 2.0, {}), w), ConfigError);
  const auto deep = random_features<float>(3, 3, 4, rng);
  EXPECT_THROW(decode_image(deep, make_plan(3, 3, 2.0, {}), w), ConfigError);
  const GroupPlan unsliced = group_coordinates(make_grid(6, 6), make_grid(3, 3));
  EXPECT_THROW(decode_image(fm, unsliced, w), ConfigError);
}

TEST(DecodeImage, CountsMacsAnalytically) {
  std::mt19937_64 rng(18);
  const Architecture arch = small_arch(3, 8);
  const auto w = random_decoder<float>(arch, rng);
  const auto fm = random_features<float>(3, 2, 3, rng);
  const GroupPlan plan = make_plan(3, 2, 2.5, {});
  MacCounter counter;
  decode_image(fm, plan, w, {0, 4096, &counter});
  const std::uint64_t coarse = (52 * 8 + 8 * 8) * 4 * static_cast<std::uint64_t>(plan.total_slices());
  const std::uint64_t pixels = plan.output_grid().pixel_count();
  const std::uint64_t fine = (10 * 8 + 8 * 8 + 8 * 3) * pixels;
  EXPECT_EQ(counter.count(), coarse + fine + 4 * 8 * pixels);
}

TEST(DecodePoints, MatchesUnitIntervalDecodeAtPixelCentres) {
  std::mt19937_64 rng(19);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(3, 4, 3, rng);
  const GroupPlan plan = make_plan(3, 4, 2.0, {SliceStrategy::fixed, 1, 1});
  const auto rgb = decode_image(fm, plan, w);
  std::vector<Vec2> qs;
  for (int r = 0; r < plan.out_height(); ++r)
    for (int c = 0; c < plan.out_width(); ++c)
      qs.push_back({plan.output_grid().rows[r], plan.output_grid().cols[c]});
  const auto pts = decode_points(fm, w, std::span<const Vec2>(qs));
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(pts.values()[i], rgb.values()[i], 1e-12);
  const std::vector<Vec2> outside{{1.5, 0.0}};
  EXPECT_THROW(decode_points(fm, w, std::span<const Vec2>(outside)), ArgumentError);
}

TEST(DecodePoints, BlendedHiddenContinuousAcrossGroups) {
  std::mt19937_64 rng(20);
  const auto w = random_decoder<double>(small_arch(3, 16), rng);
  const auto fm = random_features<double>(4, 5, 3, rng);
  const CoordGrid latent = fm.latent_grid();
  std::uniform_real_distribution<double> along(-0.99, 0.99);
  const double eps = 1e-6;
  std::vector<Vec2> qs;
  for (int j = 0; j + 1 < 5; ++j) {
    const double b = 0.5 * (latent.cols[j] + latent.cols[j + 1]);
    const double y = along(rng);
    qs.push_back({y, b - eps});
    qs.push_back({y, b + eps});
  }
  for (int i = 0; i + 1 < 4; ++i) {
    const double b = 0.5 * (latent.rows[i] + latent.rows[i + 1]);
    const double x = along(rng);
    qs.push_back({b - eps, x});
    qs.push_back({b + eps, x});
  }
  Matrix<double> hidden;
  decode_points(fm, w, std::span<const Vec2>(qs), &hidden);
  for (std::size_t i = 0; i < qs.size(); i += 2)
    for (std::size_t e = 0; e < hidden.cols(); ++e) EXPECT_LE(std::abs(hidden(i, e) - hidden(i + 1, e)), 1e-4);
}

// Full-pipeline L1 loss over parameters and features, for finite differences.
struct LossProbe {
  const FeatureMap<double>& fm;
  const GroupPlan& plan;
  const Matrix<double>& target;

  double operator()(const FeatureMap<double>& f, const DecoderWeights<double>& w) const {
    const auto pred = decode_image(f, plan, w);
    double s = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred.values()[i] - target.values()[i]);
    return s / static_cast<double>(pred.size());
  }
};

std::vector<std::span<double>> spans_of(DecoderWeights<double>& w) {
  std::vector<std::span<double>> out;
  for (auto* stage : {&w.coarse, &w.fine})
    for (auto& l : *stage) {
      out.push_back(l.weight.values());
      out.push_back(l.bias);
    }
  return out;
}

void check_gradients(bool ensemble, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto w = random_decoder<double>(small_arch(3, 6, ensemble), rng, 0.5);
  const auto fm = random_features<double>(2, 2, 3, rng);
  const GroupPlan plan = make_plan(2, 2, 2.5, {});
  Matrix<double> target(plan.output_grid().pixel_count(), 3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double& v : target.values()) v = u(rng);
  const LossProbe loss{fm, plan, target};

  DecodeTape<double> tape;
  const auto pred = decode_image(fm, plan, w, {0, 3, nullptr}, &tape);
  Matrix<double> d(pred.rows(), 3);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double diff = pred.values()[i] - target.values()[i];
    d.values()[i] = (diff > 0 ? 1.0 : -1.0) / static_cast<double>(pred.size());
  }
  auto grads = zero_gradients(w);
  FeatureMap<double> dfm(2, 2, 3);
  decoder_backward(tape, d, w, grads, &dfm);

  std::vector<double> flat, analytic;
  for (auto s : spans_of(w)) flat.insert(flat.end(), s.begin(), s.end());
  for (auto s : spans_of(grads)) analytic.insert(analytic.end(), s.begin(), s.end());
  auto probe = w;
  const auto numeric = finite_diff_gradient(
      [&](std::span<const double> p) {
        std::size_t k = 0;
        for (auto s : spans_of(probe)) {
          std::copy(p.begin() + k, p.begin() + k + s.size(), s.begin());
          k += s.size();
        }
        return loss(fm, probe);
      },
      flat, 1e-6);
  EXPECT_LE(relative_error(analytic, numeric), 1e-4);

  const auto feature_numeric = finite_diff_gradient(
      [&](std::span<const double> p) {
        FeatureMap<double> f = fm;
        std::copy(p.begin(), p.end(), f.data.begin());
        return loss(f, w);
      },
      fm.data, 1e-6);
  EXPECT_LE(relative_error(dfm.data, feature_numeric), 1e-4);
}

TEST(DecoderBackward, MatchesFiniteDifferencesWithEnsemble) { check_gradients(true, 31); }
TEST(DecoderBackward, MatchesFiniteDifferencesWithoutEnsemble) { check_gradients(false, 32); }

TEST(DecoderBackward, ZeroLossGradientGivesZeroGradients) {
  std::mt19937_64 rng(33);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(3, 3, 3, rng);
  const GroupPlan plan = make_plan(3, 3, 2.0, {});
  DecodeTape<double> tape;
  const auto pred = decode_image(fm, plan, w, {}, &tape);
  auto grads = zero_gradients(w);
  decoder_backward(tape, Matrix<double>(pred.rows(), 3), w, grads);
  EXPECT_EQ(grads, zero_gradients(w));
}

TEST(DecoderBackward, MissingTapeIsStateError) {
  std::mt19937_64 rng(34);
  const auto w = random_decoder<double>(small_arch(), rng);
  auto grads = zero_gradients(w);
  DecodeTape<double> tape;
  EXPECT_THROW(decoder_backward(tape, Matrix<double>(4, 3), w, grads), StateError);
}

TEST(DecoderBackward, EnsembleWeightsDoNotDependOnParameters) {
  std::mt19937_64 rng(35);
  const auto w1 = random_decoder<double>(small_arch(), rng);
  const auto w2 = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(3, 3, 3, rng);
  const GroupPlan plan = make_plan(3, 3, 2.5, {});
  DecodeTape<double> t1, t2;
  decode_image(fm, plan, w1, {}, &t1);
  decode_image(fm, plan, w2, {}, &t2);
  ASSERT_EQ(t1.chunks.size(), t2.chunks.size());
  for (std::size_t c = 0; c < t1.chunks.size(); ++c) EXPECT_EQ(t1.chunks[c].weights, t2.chunks[c].weights);
}

TEST(DecoderBackward, GradientsIndependentOfThreadCount) {
  std::mt19937_64 rng(36);
  const auto w = random_decoder<float>(small_arch(3, 16), rng);
  const auto fm = random_features<float>(6, 6, 3, rng);
  const GroupPlan plan = make_plan(6, 6, 3.0, {});
  Matrix<float> d(plan.output_grid().pixel_count(), 3);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  for (float& v : d.values()) v = u(rng);
  DecoderWeights<float> reference;
  for (int threads : {1, 2, 3, 4}) {
    DecodeTape<float> tape;
    decode_image(fm, plan, w, {threads, 40, nullptr}, &tape);
    auto grads = zero_gradients(w);
    decoder_backward(tape, d, w, grads, nullptr, threads);
    if (threads == 1) {
      reference = grads;
    } else {
      EXPECT_EQ(grads, reference);
    }
  }
}

TEST(DecoderBackward, WrongGradientShapeIsShapeError) {
  std::mt19937_64 rng(37);
  const auto w = random_decoder<double>(small_arch(), rng);
  const auto fm = random_features<double>(2, 2, 3, rng);
  DecodeTape<double> tape;
  decode_image(fm, make_plan(2, 2, 2.0, {}), w, {}, &tape);
  auto grads = zero_gradients(w);
  EXPECT_THROW(decoder_backward(tape, Matrix<double>(3, 3), w, grads), ShapeError);
}

ReferenceWeights<double> random_reference(int depth, int hidden, std::mt19937_64& rng) {
  ReferenceArchitecture arch{depth, hidden, 4};
  auto w = make_reference_weights<double>(arch);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : w.layers) {
    for (double& v : l.weight.values()) v = u(rng);
    for (double& v : l.bias) v = u(rng);
  }
  return w;
}

TEST(ReferenceDecoder, SingleLatentRunsFourForwards) {
  std::mt19937_64 rng(40);
  const auto w = random_reference(3, 8, rng);
  const auto fm = random_features<double>(1, 1, 3, rng);
  MacCounter counter;
  ReferenceDecodeOptions opts;
  opts.counter = &counter;
  const auto rgb = decode_reference_per_pixel(fm, make_grid(1, 1), w, opts);
  ASSERT_EQ(rgb.rows(), 1u);
  const std::uint64_t per_forward = 29 * 8 + 3 * 8 * 8 + 8 * 3;
  EXPECT_EQ(counter.count(), 4 * per_forward);
}

TEST(ReferenceDecoder, MacCountIsPixelsTimesFourForwards) {
  std::mt19937_64 rng(41);
  const auto w = random_reference(3, 8, rng);
  const auto fm = random_features<double>(3, 4, 3, rng);
  MacCounter counter;
  ReferenceDecodeOptions opts;
  opts.counter = &counter;
  decode_reference_per_pixel(fm, make_grid(9, 11), w, opts);
  EXPECT_EQ(counter.count(), 9u * 11u * 4u * (29 * 8 + 3 * 8 * 8 + 8 * 3));
}

TEST(ReferenceDecoder, MatchesIndependentOracle) {
  std::mt19937_64 rng(42);
  const auto w = random_reference(3, 8, rng);
  const auto fm = random_features<double>(3, 4, 3, rng);
  const auto rgb = decode_reference_per_pixel(fm, make_grid(7, 10), w);
  const auto ref = oracle::decode_reference(fm, w, 7, 10);
  for (std::size_t p = 0; p < rgb.rows(); ++p)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(rgb(p, c), ref[p][c], 1e-12);
}

TEST(ReferenceDecoder, ConstantFeaturesGivePeriodicInterior) {
  std::mt19937_64 rng(43);
  const auto w = random_reference(3, 8, rng);
  const FeatureMap<double> fm(6, 6, 3, 0.4);
  const int s = 3;
  const auto rgb = decode_reference_per_pixel(fm, make_grid(18, 18), w);
  for (int r = 3; r + s < 15; ++r)
    for (int c = 3; c + s < 15; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        EXPECT_NEAR(rgb(r * 18 + c, ch), rgb((r + s) * 18 + c, ch), 1e-12);
        EXPECT_NEAR(rgb(r * 18 + c, ch), rgb(r * 18 + c + s, ch), 1e-12);
      }
}

TEST(Weights, ArchitectureInferredFromShapes) {
  const auto w = make_decoder_weights<float>(small_arch(5, 12, false));
  const Architecture a = w.architecture();
  EXPECT_EQ(a.feature_depth, 5);
  EXPECT_EQ(a.hidden, 12);
  EXPECT_FALSE(a.slice_ensemble);
  EXPECT_EQ(a.coarse_layers, 2);
  EXPECT_EQ(a.fine_hidden_layers, 2);
  auto broken = w;
  broken.fine.back() = Layer<float>(12, 4);
  EXPECT_THROW(broken.validate(), ConfigError);
}

}  // namespace
}  // namespace diif
