#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "diif/decoder/weights.hpp"
#include "diif/encoder/feature_map.hpp"
#include "diif/geometry/plan.hpp"
#include "diif/numerics/matrix.hpp"
#include "diif/pipeline/image.hpp"

namespace diif {

/// 2D coordinate, row component first.
struct Vec2 {
  double y = 0.0;
  double x = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// The four corners of a group's rectangle in local coordinates, ordered
/// top-left, top-right, bottom-left, bottom-right.
inline constexpr std::array<Vec2, 4> kVertexTags = {
    Vec2{-1.0, -1.0}, Vec2{-1.0, 1.0}, Vec2{1.0, -1.0}, Vec2{1.0, 1.0}};

// ---------------------------------------------------------------------------
// Geometry in local (group) coordinates.
//
// A group's rectangle is its latent cell: corners at the latent code plus or
// minus half the latent spacing, which maps to [-1, 1]^2. A local coordinate
// is therefore (x - v*) divided by the latent half-cell.
// ---------------------------------------------------------------------------

Vec2 local_coord(const GroupPlan& plan, int out_row, int out_col);

/// Local coordinates of every member of `group`, in group order.
std::vector<Vec2> local_coords(const GroupPlan& plan, int group);

/// Rectangle R* spanned by the four vertices, in local coordinates.
struct EnsembleRect {
  double half_height = 1.0;
  double half_width = 1.0;

  double area() const noexcept { return 4.0 * half_height * half_width; }

  /// Normalised confidence of each vertex for query q: the area of the
  /// rectangle between q and the diagonally opposite vertex, over area().
  /// Order matches kVertexTags.
  std::array<double, 4> weights(Vec2 q) const noexcept;
};

/// Vertex code: concatenated codes of the 4x4 latent neighbourhood around a
/// latent-cell corner. `position` is in latent index space and must be
/// half-integer (e.g. (2.5, 0.5)); offsets {-1.5, -0.5, 0.5, 1.5} per axis are
/// visited row-major and clamped to the grid. Writes 16 * depth values.
template <typename T>
void unfold_vertex_code(const FeatureMap<T>& features, Vec2 position, std::span<T> out);

template <typename T>
std::vector<T> unfold_vertex_code(const FeatureMap<T>& features, Vec2 position);

/// 3x3 clamped neighbourhood of latent code (row, col); 9 * depth values.
template <typename T>
void unfold_center_code(const FeatureMap<T>& features, int row, int col, std::span<T> out);

// ---------------------------------------------------------------------------
// Single-instance stages.
// ---------------------------------------------------------------------------

/// Coarse stage: MLP over [code, first_rel, last_rel], ReLU after every layer.
template <typename T>
std::vector<T> coarse_forward(std::span<const T> code, Vec2 first_rel, Vec2 last_rel,
                              std::span<const Layer<T>> coarse, MacCounter* counter = nullptr);

/// Area-weighted blend of the four vertex hiddens for query q.
template <typename T>
std::vector<T> ensemble_hidden(const std::array<std::vector<T>, 4>& vertex_hidden, Vec2 q,
                               const EnsembleRect& rect = {}, MacCounter* counter = nullptr);

/// Fine stage: MLP over [hidden, rel]; the last layer is linear and unclamped.
template <typename T>
std::array<T, 3> fine_forward(std::span<const T> hidden, Vec2 rel, std::span<const Layer<T>> fine,
                              MacCounter* counter = nullptr);

// ---------------------------------------------------------------------------
// Whole-image decoding.
// ---------------------------------------------------------------------------

struct DecodeOptions {
  int threads = 0;                 // 0 = thread_limit()
  std::size_t chunk_pixels = 4096; // work unit; fixed by the plan, not the thread count
  MacCounter* counter = nullptr;
};

namespace detail {

template <typename T>
struct ChunkTape {
  int group_begin = 0;
  int group_end = 0;
  std::vector<int> slice_group;          // per slice
  std::vector<int> pixel_index;          // flat output index per chunk row
  std::vector<int> pixel_slice;          // chunk-local slice per chunk row
  std::vector<std::array<T, 4>> weights; // ensemble weights per chunk row
  MlpCache<T> coarse;
  MlpCache<T> fine;
};

}  // namespace detail

/// Activations recorded by a training forward pass.
template <typename T>
struct DecodeTape {
  std::vector<detail::ChunkTape<T>> chunks;
  std::size_t pixel_count = 0;
  bool slice_ensemble = true;
  int feature_height = 0;
  int feature_width = 0;
  int feature_depth = 0;

  bool ready() const noexcept { return pixel_count != 0; }
  void clear() { *this = DecodeTape{}; }
};

/// Decodes every output pixel of `plan`. Rows of the result are flat output
/// indices (row * out_width + col), columns are RGB. Slice work is batched
/// per chunk; each slice's four vertex hiddens are computed once and reused by
/// all of its members. Pass `tape` to record activations for decoder_backward.
template <typename T>
Matrix<T> decode_image(const FeatureMap<T>& features, const GroupPlan& plan,
                       const DecoderWeights<T>& weights, const DecodeOptions& options = {},
                       DecodeTape<T>* tape = nullptr);

/// Straight per-slice loop built from the single-instance stages. Slow; it is
/// the reference the batched path is checked against.
template <typename T>
Matrix<T> decode_sequential(const FeatureMap<T>& features, const GroupPlan& plan,
                            const DecoderWeights<T>& weights, MacCounter* counter = nullptr);

/// Decodes arbitrary continuous queries (global coordinates in [-1, 1]^2),
/// each treated as a one-coordinate slice of the group that owns it. When
/// `blended` is given it receives the ensemble-blended hidden per query.
template <typename T>
Matrix<T> decode_points(const FeatureMap<T>& features, const DecoderWeights<T>& weights,
                        std::span<const Vec2> queries, Matrix<T>* blended = nullptr);

/// Reverse pass for a taped decode_image. Accumulates parameter gradients into
/// `grads` (shaped like `weights`) and, when requested, gradients with respect
/// to the feature map. Throws StateError for an empty tape.
template <typename T>
void decoder_backward(const DecodeTape<T>& tape, const Matrix<T>& d_rgb,
                      const DecoderWeights<T>& weights, DecoderWeights<T>& grads,
                      std::type_identity_t<FeatureMap<T>>* d_features = nullptr,
                      int threads = 0);

/// Zero gradients shaped like `weights`.
template <typename T>
DecoderWeights<T> zero_gradients(const DecoderWeights<T>& weights);

/// [pixels x 3] rows to a planar image, and back.
Image rows_to_image(const Matrix<float>& rgb, int height, int width);
template <typename T>
Matrix<T> image_to_rows(const Image& image);

}  // namespace diif
