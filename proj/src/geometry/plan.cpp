#include "diif/geometry/plan.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "diif/errors.hpp"

namespace diif {

std::string_view to_string(SliceStrategy s) noexcept {
  switch (s) {
    case SliceStrategy::fixed:
      return "fixed";
    case SliceStrategy::linear:
      return "linear";
    case SliceStrategy::constant:
      return "constant";
  }
  return "unknown";
}

SliceStrategy parse_slice_strategy(std::string_view name) {
  if (name == "fixed") return SliceStrategy::fixed;
  if (name == "linear") return SliceStrategy::linear;
  if (name == "constant") return SliceStrategy::constant;
  throw ArgumentError("unknown slicing strategy '" + std::string(name) + "'");
}

int slice_interval(const SlicingOptions& options, double scale, int group_size) {
  if (group_size < 1) throw ArgumentError("group size must be at least 1");
  if (!(scale >= 1.0) || !std::isfinite(scale)) throw ArgumentError("scale must be >= 1");
  double u = 0.0;
  switch (options.strategy) {
    case SliceStrategy::linear:
      if (options.multiplier < 1) throw ArgumentError("linear slicing needs n >= 1");
      u = std::round(options.multiplier * scale);
      break;
    case SliceStrategy::constant:
      if (options.multiplier < 1) throw ArgumentError("constant slicing needs n >= 1");
      // s^2 / n rarely divides evenly for real s; round up (1e-9 slack for
      // products such as 1.5 * 1.5 that are exact in theory).
      u = std::ceil(scale * scale / options.multiplier - 1e-9);
      break;
    case SliceStrategy::fixed:
      if (options.fixed_interval < 1) throw ArgumentError("fixed slice interval must be >= 1");
      u = options.fixed_interval;
      break;
  }
  return static_cast<int>(std::clamp(u, 1.0, static_cast<double>(group_size)));
}

std::vector<Slice> slice_group(int group, std::span<const int> members, int interval) {
  const int g = static_cast<int>(members.size());
  if (interval < 1 || interval > g) {
    throw ArgumentError("slice interval " + std::to_string(interval) + " outside (0, " +
                        std::to_string(g) + "]");
  }
  const int k_count = (g + interval - 1) / interval;
  std::vector<Slice> out;
  out.reserve(k_count);
  for (int k = 0; k < k_count; ++k) {
    const int begin = k * interval;
    const int end = std::min(begin + interval, g);
    Slice s;
    s.group = group;
    s.members.assign(members.begin() + begin, members.begin() + end);
    s.first = s.members.front();
    s.last = s.members.back();
    out.push_back(std::move(s));
  }
  return out;
}

GroupPlan::GroupPlan(CoordGrid output, CoordGrid latent, std::vector<int> row_starts,
                     std::vector<int> col_starts)
    : output_(std::move(output)),
      latent_(std::move(latent)),
      row_starts_(std::move(row_starts)),
      col_starts_(std::move(col_starts)) {
  if (row_starts_.size() != static_cast<std::size_t>(latent_.height) + 1 ||
      col_starts_.size() != static_cast<std::size_t>(latent_.width) + 1) {
    throw ArgumentError("group boundary tables do not match the latent grid");
  }
  row_owner_.resize(output_.height);
  col_owner_.resize(output_.width);
  for (int i = 0; i < latent_.height; ++i) {
    for (int r = row_starts_[i]; r < row_starts_[i + 1]; ++r) row_owner_[r] = i;
  }
  for (int j = 0; j < latent_.width; ++j) {
    for (int c = col_starts_[j]; c < col_starts_[j + 1]; ++c) col_owner_[c] = j;
  }
}

GroupBounds GroupPlan::bounds(int group) const {
  if (group < 0 || group >= group_count()) throw ArgumentError("group index out of range");
  const int i = group / latent_.width;
  const int j = group % latent_.width;
  return {row_starts_[i], row_starts_[i + 1], col_starts_[j], col_starts_[j + 1]};
}

int GroupPlan::member_index(int group, int m) const {
  const GroupBounds b = bounds(group);
  const int r = b.row_begin + m / b.width();
  const int c = b.col_begin + m % b.width();
  return r * output_.width + c;
}

std::vector<int> GroupPlan::members(int group) const {
  const GroupBounds b = bounds(group);
  std::vector<int> out;
  out.reserve(b.size());
  for (int r = b.row_begin; r < b.row_end; ++r) {
    for (int c = b.col_begin; c < b.col_end; ++c) out.push_back(r * output_.width + c);
  }
  return out;
}

int GroupPlan::group_of(int out_row, int out_col) const {
  return row_owner_.at(out_row) * latent_.width + col_owner_.at(out_col);
}

void GroupPlan::apply_slicing(double scale, const SlicingOptions& options) {
  scale_ = scale;
  slicing_ = options;
  const int n = group_count();
  intervals_.resize(n);
  slice_offsets_.resize(static_cast<std::size_t>(n) + 1);
  slice_offsets_[0] = 0;
  for (int g = 0; g < n; ++g) {
    const int size = group_size(g);
    intervals_[g] = slice_interval(options, scale, size);
    slice_offsets_[g + 1] = slice_offsets_[g] + (size + intervals_[g] - 1) / intervals_[g];
  }
}

int GroupPlan::interval(int group) const {
  if (!is_sliced()) throw StateError("plan has no slicing applied");
  return intervals_.at(group);
}

int GroupPlan::slice_count(int group) const {
  const int u = interval(group);
  return (group_size(group) + u - 1) / u;
}

std::int64_t GroupPlan::total_slices() const {
  if (!is_sliced()) throw StateError("plan has no slicing applied");
  return slice_offsets_.back();
}

std::pair<int, int> GroupPlan::slice_range(int group, int k) const {
  const int u = interval(group);
  const int g = group_size(group);
  const int begin = k * u;
  if (k < 0 || begin >= g) throw ArgumentError("slice index out of range");
  return {begin, std::min(begin + u, g)};
}

Slice GroupPlan::slice(int group, int k) const {
  const auto [begin, end] = slice_range(group, k);
  Slice s;
  s.group = group;
  s.members.reserve(end - begin);
  for (int m = begin; m < end; ++m) s.members.push_back(member_index(group, m));
  s.first = s.members.front();
  s.last = s.members.back();
  return s;
}

std::vector<Slice> GroupPlan::slices(int group) const {
  return slice_group(group, members(group), interval(group));
}

namespace {

std::vector<int> starts_from_assignment(const std::vector<int>& assign, int latent_count) {
  std::vector<int> starts(static_cast<std::size_t>(latent_count) + 1, 0);
  std::vector<int> counts(latent_count, 0);
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (i > 0 && assign[i] < assign[i - 1]) throw ArgumentError("non-monotone axis assignment");
    ++counts[assign[i]];
  }
  for (int k = 0; k < latent_count; ++k) {
    if (counts[k] == 0) {
      throw ArgumentError("latent code " + std::to_string(k) +
                          " owns no output coordinate; the latent grid must not exceed the "
                          "output grid");
    }
    starts[k + 1] = starts[k] + counts[k];
  }
  return starts;
}

}  // namespace

GroupPlan group_coordinates(const CoordGrid& output, const CoordGrid& latent) {
  if (latent.height > output.height || latent.width > output.width) {
    throw ArgumentError("latent grid larger than output grid");
  }
  auto rows = starts_from_assignment(nearest_axis_assignment(output.height, latent.height),
                                     latent.height);
  auto cols = starts_from_assignment(nearest_axis_assignment(output.width, latent.width),
                                     latent.width);
  return GroupPlan(output, latent, std::move(rows), std::move(cols));
}

GroupPlan make_plan(int latent_height, int latent_width, double scale,
                    const SlicingOptions& options) {
  if (!(scale >= 1.0)) throw ArgumentError("scale must be >= 1");
  const auto [h, w] = scaled_size(latent_height, latent_width, scale);
  GroupPlan plan = group_coordinates(make_grid(h, w), make_grid(latent_height, latent_width));
  plan.apply_slicing(scale, options);
  return plan;
}

}  // namespace diif
