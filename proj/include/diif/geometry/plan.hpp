#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diif/geometry/grid.hpp"

namespace diif {

enum class SliceStrategy { fixed, linear, constant };

std::string_view to_string(SliceStrategy s) noexcept;
SliceStrategy parse_slice_strategy(std::string_view name);

struct SlicingOptions {
  SliceStrategy strategy = SliceStrategy::linear;
  int multiplier = 1;      // n for linear (u = n*s) and constant (u = s^2 / n)
  int fixed_interval = 4;  // u for the fixed strategy
};

/// Slice interval u for a group of g coordinates, always in [1, g].
///   linear:   clamp(round(n * s), 1, g)
///   constant: clamp(ceil(s^2 / n), 1, g)
///   fixed:    clamp(c, 1, g)
int slice_interval(const SlicingOptions& options, double scale, int group_size);

/// Output-pixel rectangle owned by one latent code. Rows [row_begin, row_end),
/// columns [col_begin, col_end).
struct GroupBounds {
  int row_begin = 0;
  int row_end = 0;
  int col_begin = 0;
  int col_end = 0;

  int height() const noexcept { return row_end - row_begin; }
  int width() const noexcept { return col_end - col_begin; }
  int size() const noexcept { return height() * width(); }
};

/// A contiguous run of group members sharing one coarse-stage evaluation.
/// Indices are flat output-pixel indices (row * out_width + col).
struct Slice {
  int group = 0;
  int first = 0;
  int last = 0;
  std::vector<int> members;
};

/// Splits `members` (already in group order) into ceil(g / u) runs of u, the
/// last one truncated.
std::vector<Slice> slice_group(int group, std::span<const int> members, int interval);

/// Partition of an output grid into per-latent-code groups, optionally sliced.
///
/// Nearest-latent assignment on a separable grid is separable, so every group
/// is the product of a row range and a column range; the plan stores those
/// ranges and derives member lists on demand. Members are ordered left to
/// right, then top to bottom. Group g belongs to latent code
/// (g / latent_width, g % latent_width).
class GroupPlan {
 public:
  GroupPlan() = default;
  GroupPlan(CoordGrid output, CoordGrid latent, std::vector<int> row_starts,
            std::vector<int> col_starts);

  const CoordGrid& output_grid() const noexcept { return output_; }
  const CoordGrid& latent_grid() const noexcept { return latent_; }
  int out_height() const noexcept { return output_.height; }
  int out_width() const noexcept { return output_.width; }
  int latent_height() const noexcept { return latent_.height; }
  int latent_width() const noexcept { return latent_.width; }

  int group_count() const noexcept { return latent_.height * latent_.width; }
  GroupBounds bounds(int group) const;
  int group_size(int group) const { return bounds(group).size(); }
  std::vector<int> members(int group) const;
  // Flat output index of the m-th member of `group`.
  int member_index(int group, int m) const;

  // Latent group owning an output pixel, and the per-axis owners.
  int group_of(int out_row, int out_col) const;
  int row_owner(int out_row) const { return row_owner_.at(out_row); }
  int col_owner(int out_col) const { return col_owner_.at(out_col); }

  bool is_sliced() const noexcept { return !intervals_.empty(); }
  double scale() const noexcept { return scale_; }
  const SlicingOptions& slicing() const noexcept { return slicing_; }

  // Applies a slicing strategy at scale s; replaces any previous slicing.
  void apply_slicing(double scale, const SlicingOptions& options);

  int interval(int group) const;
  int slice_count(int group) const;
  std::int64_t total_slices() const;
  // Members of slice k of `group` are [begin, end) in group order.
  std::pair<int, int> slice_range(int group, int k) const;
  Slice slice(int group, int k) const;
  std::vector<Slice> slices(int group) const;

 private:
  CoordGrid output_;
  CoordGrid latent_;
  std::vector<int> row_starts_;  // latent_height + 1 entries
  std::vector<int> col_starts_;  // latent_width + 1 entries
  std::vector<int> row_owner_;   // output row -> latent row
  std::vector<int> col_owner_;   // output col -> latent col
  double scale_ = 1.0;
  SlicingOptions slicing_{};
  std::vector<int> intervals_;
  std::vector<std::int64_t> slice_offsets_;
};

/// Assigns each output coordinate to the latent code at minimal Euclidean
/// distance (ties toward the smaller latent index).
GroupPlan group_coordinates(const CoordGrid& output, const CoordGrid& latent);

/// Grouping plus slicing for a latent grid upscaled by `scale`, with output
/// size floor(s*H) x floor(s*W).
GroupPlan make_plan(int latent_height, int latent_width, double scale,
                    const SlicingOptions& options);

}  // namespace diif
