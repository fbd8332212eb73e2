#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "diif/errors.hpp"
#include "diif/geometry/grid.hpp"
#include "diif/geometry/plan.hpp"

namespace diif {
namespace {

TEST(MakeGrid, PixelCentres) {
  EXPECT_EQ(make_grid(2, 2).rows, (std::vector<double>{-0.5, 0.5}));
  EXPECT_EQ(make_grid(1, 1).cols, (std::vector<double>{0.0}));
  EXPECT_EQ(make_grid(4, 1).rows, (std::vector<double>{-0.75, -0.25, 0.25, 0.75}));
}

TEST(MakeGrid, SymmetricAndIncreasing) {
  for (int n = 1; n < 40; ++n) {
    const auto g = make_grid(n, n);
    for (int i = 0; i < n; ++i) {
      EXPECT_NEAR(g.rows[i], -g.rows[n - 1 - i], 1e-15);
      if (i > 0) {
        EXPECT_LT(g.rows[i - 1], g.rows[i]);
      }
    }
  }
}

TEST(MakeGrid, ZeroDimensionThrows) {
  EXPECT_THROW(make_grid(0, 3), ArgumentError);
  EXPECT_THROW(make_grid(3, 0), ArgumentError);
}

TEST(ScaledSize, FloorsProducts) {
  EXPECT_EQ(scaled_size(10, 20, 2.3), (std::pair{23, 46}));
  EXPECT_EQ(scaled_size(7, 3, 3.7), (std::pair{25, 11}));
  EXPECT_EQ(scaled_size(180, 320, 4.0), (std::pair{720, 1280}));
}

// Assignment from an exhaustive 2D distance comparison.
std::vector<int> brute_force_groups(const CoordGrid& out, const CoordGrid& latent) {
  std::vector<int> owner;
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      int best = -1;
      double best_d = 1e300;
      for (int i = 0; i < latent.height; ++i) {
        for (int j = 0; j < latent.width; ++j) {
          const double dy = out.rows[r] - latent.rows[i];
          const double dx = out.cols[c] - latent.cols[j];
          const double d = std::sqrt(dy * dy + dx * dx);
          if (d < best_d - 1e-12) {
            best_d = d;
            best = i * latent.width + j;
          }
        }
      }
      owner.push_back(best);
    }
  }
  return owner;
}

TEST(GroupCoordinates, IntegerScaleFourGivesSixteen) {
  const GroupPlan plan = group_coordinates(make_grid(8, 8), make_grid(2, 2));
  ASSERT_EQ(plan.group_count(), 4);
  for (int g = 0; g < 4; ++g) EXPECT_EQ(plan.group_size(g), 16);
}

TEST(GroupCoordinates, ScaleOneGivesSingletons) {
  const GroupPlan plan = group_coordinates(make_grid(3, 5), make_grid(3, 5));
  for (int g = 0; g < plan.group_count(); ++g) {
    EXPECT_EQ(plan.members(g), std::vector<int>{g});
  }
}

TEST(GroupCoordinates, FractionalScaleMatchesBruteForce) {
  const CoordGrid out = make_grid(10, 10);
  const CoordGrid latent = make_grid(4, 4);
  const GroupPlan plan = group_coordinates(out, latent);
  const auto expected = brute_force_groups(out, latent);
  for (int r = 0; r < 10; ++r) {
    for (int c = 0; c < 10; ++c) EXPECT_EQ(plan.group_of(r, c), expected[r * 10 + c]) << r << "," << c;
  }
}

TEST(GroupCoordinates, RandomConfigurationsMatchBruteForce) {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> side(1, 6);
  std::uniform_real_distribution<double> scale(1.0, 5.0);
  for (int t = 0; t < 40; ++t) {
    const int h = side(rng), w = side(rng);
    const auto [oh, ow] = scaled_size(h, w, scale(rng));
    const CoordGrid out = make_grid(oh, ow);
    const CoordGrid latent = make_grid(h, w);
    const GroupPlan plan = group_coordinates(out, latent);
    const auto expected = brute_force_groups(out, latent);
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) ASSERT_EQ(plan.group_of(r, c), expected[r * ow + c]);
  }
}

TEST(GroupCoordinates, EquidistantCentresGoToSmallerIndex) {
  // 6 -> 15 at scale 2.5: output rows 2, 7 and 12 sit exactly between latents.
  const auto owner = nearest_axis_assignment(15, 6);
  EXPECT_EQ(owner[2], 0);
  EXPECT_EQ(owner[7], 2);
  EXPECT_EQ(owner[12], 4);
  const GroupPlan plan = make_plan(6, 4, 2.5, {});
  EXPECT_EQ(plan.row_owner(12), 4);
}

TEST(GroupCoordinates, MembersAreRowMajor) {
  const GroupPlan plan = make_plan(2, 2, 3.0, {});
  EXPECT_EQ(plan.members(0), (std::vector<int>{0, 1, 2, 6, 7, 8, 12, 13, 14}));
  EXPECT_EQ(plan.members(3), (std::vector<int>{21, 22, 23, 27, 28, 29, 33, 34, 35}));
  for (int m = 0; m < 9; ++m) EXPECT_EQ(plan.member_index(3, m), plan.members(3)[m]);
}

TEST(GroupCoordinates, LatentLargerThanOutputThrows) {
  EXPECT_THROW(group_coordinates(make_grid(2, 2), make_grid(3, 2)), ArgumentError);
}

TEST(SliceInterval, Examples) {
  SlicingOptions linear;
  EXPECT_EQ(slice_interval(linear, 4.0, 16), 4);
  SlicingOptions constant{SliceStrategy::constant, 1, 4};
  EXPECT_EQ(slice_interval(constant, 4.0, 16), 16);
  SlicingOptions fixed{SliceStrategy::fixed, 1, 4};
  for (double s : {1.0, 2.5, 4.0, 9.0}) EXPECT_EQ(slice_interval(fixed, s, 16), 4);
}

TEST(SliceInterval, FractionalAndClamped) {
  SlicingOptions linear;
  EXPECT_EQ(slice_interval(linear, 2.5, 9), 3);  // round(2.5) away from zero
  EXPECT_EQ(slice_interval(linear, 2.4, 9), 2);
  EXPECT_EQ(slice_interval(linear, 8.0, 5), 5);
  SlicingOptions constant{SliceStrategy::constant, 2, 4};
  EXPECT_EQ(slice_interval(constant, 3.0, 9), 5);  // ceil(9 / 2)
  EXPECT_EQ(slice_interval(constant, 4.0, 16), 8);
  EXPECT_EQ(slice_interval(constant, 1.0, 1), 1);
  SlicingOptions fixed{SliceStrategy::fixed, 1, 40};
  EXPECT_EQ(slice_interval(fixed, 2.0, 4), 4);
}

TEST(SliceInterval, InvalidParametersThrow) {
  SlicingOptions bad_n{SliceStrategy::linear, 0, 4};
  EXPECT_THROW(slice_interval(bad_n, 2.0, 4), ArgumentError);
  SlicingOptions bad_c{SliceStrategy::fixed, 1, 0};
  EXPECT_THROW(slice_interval(bad_c, 2.0, 4), ArgumentError);
  EXPECT_THROW(slice_interval(SlicingOptions{}, 0.5, 4), ArgumentError);
  EXPECT_THROW(slice_interval(SlicingOptions{}, 2.0, 0), ArgumentError);
}

TEST(SliceStrategyNames, RoundTrip) {
  for (auto s : {SliceStrategy::fixed, SliceStrategy::linear, SliceStrategy::constant}) {
    EXPECT_EQ(parse_slice_strategy(to_string(s)), s);
  }
  EXPECT_THROW(parse_slice_strategy("cubic"), ArgumentError);
}

std::vector<int> iota(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = 100 + i;
  return v;
}

TEST(SliceGroup, Examples) {
  const auto g16 = iota(16);
  const auto s16 = slice_group(0, g16, 4);
  ASSERT_EQ(s16.size(), 4u);
  for (const auto& s : s16) EXPECT_EQ(s.members.size(), 4u);

  const auto g10 = iota(10);
  const auto s10 = slice_group(0, g10, 4);
  ASSERT_EQ(s10.size(), 3u);
  EXPECT_EQ(s10[0].members.size(), 4u);
  EXPECT_EQ(s10[1].members.size(), 4u);
  EXPECT_EQ(s10[2].members.size(), 2u);
  EXPECT_EQ(s10[2].first, 108);
  EXPECT_EQ(s10[2].last, 109);

  const auto g5 = iota(5);
  const auto s5 = slice_group(2, g5, 5);
  ASSERT_EQ(s5.size(), 1u);
  EXPECT_EQ(s5[0].members, g5);
  EXPECT_EQ(s5[0].group, 2);
}

TEST(SliceGroup, IntervalOutsideRangeThrows) {
  const auto g = iota(4);
  EXPECT_THROW(slice_group(0, g, 0), ArgumentError);
  EXPECT_THROW(slice_group(0, g, 5), ArgumentError);
}

TEST(MakePlan, RequiresScaleAtLeastOne) {
  EXPECT_THROW(make_plan(4, 4, 0.5, {}), ArgumentError);
}

// Random plans: partition, integer-scale regularity, slice reconstruction,
// slice counts, and the linear-vs-fixed(1) bound.
TEST(PlanProperties, RandomConfigurations) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> side(1, 12);
  std::uniform_real_distribution<double> real_scale(1.0, 8.0);
  std::uniform_int_distribution<int> int_scale(1, 8);
  std::uniform_int_distribution<int> strategy(0, 2);
  std::uniform_int_distribution<int> small(1, 4);
  for (int t = 0; t < 200; ++t) {
    const int h = side(rng), w = side(rng);
    const bool integer = t % 2 == 0;
    const double s = integer ? int_scale(rng) : real_scale(rng);
    SlicingOptions opts{static_cast<SliceStrategy>(strategy(rng)), small(rng), small(rng)};
    const GroupPlan plan = make_plan(h, w, s, opts);
    SlicingOptions unit{SliceStrategy::fixed, 1, 1};

    std::vector<int> seen(plan.output_grid().pixel_count(), 0);
    std::size_t total = 0;
    std::vector<int> pattern;
    for (int g = 0; g < plan.group_count(); ++g) {
      const auto members = plan.members(g);
      total += members.size();
      for (int m : members) ++seen[m];
      if (integer) {
        ASSERT_EQ(static_cast<double>(members.size()), s * s);
        std::vector<int> rel;
        for (int m : members) rel.push_back(m - members.front());
        if (pattern.empty()) pattern = rel;
        ASSERT_EQ(rel, pattern);
      }
      const int u = plan.interval(g);
      ASSERT_GE(u, 1);
      ASSERT_LE(u, static_cast<int>(members.size()));
      const int k = (static_cast<int>(members.size()) + u - 1) / u;
      ASSERT_EQ(plan.slice_count(g), k);
      std::vector<int> joined;
      const auto slices = plan.slices(g);
      for (std::size_t i = 0; i < slices.size(); ++i) {
        const auto& sl = slices[i];
        if (i + 1 < slices.size()) {
          ASSERT_EQ(static_cast<int>(sl.members.size()), u);
        }
        ASSERT_EQ(sl.first, sl.members.front());
        ASSERT_EQ(sl.last, sl.members.back());
        joined.insert(joined.end(), sl.members.begin(), sl.members.end());
      }
      ASSERT_EQ(joined, members);
      ASSERT_LE(slice_group(g, members, slice_interval(SlicingOptions{}, s, members.size())).size(),
                slice_group(g, members, slice_interval(unit, s, members.size())).size());
    }
    ASSERT_EQ(total, plan.output_grid().pixel_count());
    ASSERT_TRUE(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

TEST(PlanSlicing, TotalSlicesAgreesWithEnumeration) {
  GroupPlan plan = make_plan(10, 10, 4.0, {});
  EXPECT_EQ(plan.total_slices(), 400);
  plan.apply_slicing(4.0, {SliceStrategy::constant, 1, 4});
  EXPECT_EQ(plan.total_slices(), 100);
  plan.apply_slicing(4.0, {SliceStrategy::fixed, 1, 3});
  EXPECT_EQ(plan.total_slices(), 600);
}

}  // namespace
}  // namespace diif
