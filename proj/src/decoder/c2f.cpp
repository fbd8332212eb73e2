#include "diif/decoder/c2f.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "diif/errors.hpp"
#include "diif/numerics/parallel.hpp"

namespace diif {

namespace {

constexpr std::array<double, 4> kVertexOffsets = {-1.5, -0.5, 0.5, 1.5};

double local_row(const GroupPlan& plan, int out_row) {
  const int i = plan.row_owner(out_row);
  return (plan.output_grid().rows[out_row] - plan.latent_grid().rows[i]) * plan.latent_height();
}

double local_col(const GroupPlan& plan, int out_col) {
  const int j = plan.col_owner(out_col);
  return (plan.output_grid().cols[out_col] - plan.latent_grid().cols[j]) * plan.latent_width();
}

Vec2 vertex_position(int latent_row, int latent_col, Vec2 tag) {
  return {latent_row + 0.5 * tag.y, latent_col + 0.5 * tag.x};
}

// Shared by the sequential and batched paths so both round identically.
template <typename T>
void blend_into(const std::array<T, 4>& w, std::span<const T> h0, std::span<const T> h1,
                std::span<const T> h2, std::span<const T> h3, std::span<T> out) {
  for (std::size_t e = 0; e < out.size(); ++e) {
    out[e] = w[0] * h0[e] + w[1] * h1[e] + w[2] * h2[e] + w[3] * h3[e];
  }
}

template <typename T>
std::array<T, 4> cast_weights(const std::array<double, 4>& w) {
  return {static_cast<T>(w[0]), static_cast<T>(w[1]), static_cast<T>(w[2]), static_cast<T>(w[3])};
}

template <typename T>
void check_inputs(const FeatureMap<T>& features, const GroupPlan& plan,
                  const DecoderWeights<T>& weights) {
  weights.validate();
  if (features.depth != weights.feature_depth) {
    throw ConfigError("feature depth " + std::to_string(features.depth) +
                      " does not match decoder depth " + std::to_string(weights.feature_depth));
  }
  if (plan.latent_height() != features.height || plan.latent_width() != features.width) {
    throw ConfigError("plan latent grid " + std::to_string(plan.latent_height()) + "x" +
                      std::to_string(plan.latent_width()) + " does not match feature map " +
                      std::to_string(features.height) + "x" + std::to_string(features.width));
  }
  if (!plan.is_sliced()) throw ConfigError("plan has no slicing applied");
}

// Consecutive groups whose pixel total reaches `chunk_pixels`.
std::vector<std::pair<int, int>> chunk_groups(const GroupPlan& plan, std::size_t chunk_pixels) {
  std::vector<std::pair<int, int>> chunks;
  const int n = plan.group_count();
  int begin = 0;
  std::size_t pixels = 0;
  for (int g = 0; g < n; ++g) {
    pixels += static_cast<std::size_t>(plan.group_size(g));
    if (pixels >= chunk_pixels || g + 1 == n) {
      chunks.emplace_back(begin, g + 1);
      begin = g + 1;
      pixels = 0;
    }
  }
  return chunks;
}

template <typename T>
void write_coarse_row(std::span<T> row, std::span<const T> code, Vec2 first, Vec2 last) {
  std::copy(code.begin(), code.end(), row.begin());
  const std::size_t c = code.size();
  row[c + 0] = static_cast<T>(first.y);
  row[c + 1] = static_cast<T>(first.x);
  row[c + 2] = static_cast<T>(last.y);
  row[c + 3] = static_cast<T>(last.x);
}

// Forward pass over the groups [g0, g1). Writes RGB rows into `out`.
template <typename T>
void decode_chunk(const FeatureMap<T>& features, const GroupPlan& plan,
                  const DecoderWeights<T>& weights, bool ensemble, int g0, int g1,
                  Matrix<T>& out, MacCounter* counter, detail::ChunkTape<T>* tape) {
  const std::size_t vertices = ensemble ? 4 : 1;
  const std::size_t code_width =
      static_cast<std::size_t>(ensemble ? 16 : 9) * static_cast<std::size_t>(features.depth);
  const std::size_t hidden = static_cast<std::size_t>(weights.hidden);

  struct SliceRef {
    int group;
    int begin;
    int end;
  };
  std::vector<SliceRef> slices;
  std::size_t pixels = 0;
  for (int g = g0; g < g1; ++g) {
    const int k_count = plan.slice_count(g);
    for (int k = 0; k < k_count; ++k) {
      const auto [b, e] = plan.slice_range(g, k);
      slices.push_back({g, b, e});
    }
    pixels += static_cast<std::size_t>(plan.group_size(g));
  }

  // Coarse stage: one row per (slice, vertex).
  Matrix<T> coarse_in(slices.size() * vertices, code_width + 4);
  std::vector<T> codes(vertices * code_width);
  int codes_for = -1;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const SliceRef& sr = slices[s];
    const GroupBounds b = plan.bounds(sr.group);
    const int li = sr.group / plan.latent_width();
    const int lj = sr.group % plan.latent_width();
    if (codes_for != sr.group) {
      for (std::size_t t = 0; t < vertices; ++t) {
        std::span<T> dst(codes.data() + t * code_width, code_width);
        if (ensemble) {
          unfold_vertex_code(features, vertex_position(li, lj, kVertexTags[t]), dst);
        } else {
          unfold_center_code(features, li, lj, dst);
        }
      }
      codes_for = sr.group;
    }
    const int w = b.width();
    const Vec2 first{local_row(plan, b.row_begin + sr.begin / w),
                     local_col(plan, b.col_begin + sr.begin % w)};
    const Vec2 last{local_row(plan, b.row_begin + (sr.end - 1) / w),
                    local_col(plan, b.col_begin + (sr.end - 1) % w)};
    for (std::size_t t = 0; t < vertices; ++t) {
      const Vec2 tag = ensemble ? kVertexTags[t] : Vec2{};
      write_coarse_row<T>(coarse_in.row(s * vertices + t),
                          std::span<const T>(codes.data() + t * code_width, code_width),
                          {first.y - tag.y, first.x - tag.x}, {last.y - tag.y, last.x - tag.x});
    }
  }
  const Matrix<T> slice_hidden =
      mlp_forward(std::span<const Layer<T>>(weights.coarse), std::move(coarse_in),
                  OutputActivation::relu, tape ? &tape->coarse : nullptr, counter);

  // Fine stage: one row per pixel, slice by slice.
  Matrix<T> fine_in(pixels, hidden + 2);
  std::vector<int> pixel_index(pixels);
  if (tape != nullptr) {
    tape->group_begin = g0;
    tape->group_end = g1;
    tape->slice_group.resize(slices.size());
    tape->pixel_slice.resize(pixels);
    tape->weights.resize(pixels);
  }
  const EnsembleRect rect;
  std::size_t p = 0;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    const SliceRef& sr = slices[s];
    const GroupBounds b = plan.bounds(sr.group);
    const int w = b.width();
    if (tape != nullptr) tape->slice_group[s] = sr.group;
    for (int m = sr.begin; m < sr.end; ++m, ++p) {
      const int r = b.row_begin + m / w;
      const int c = b.col_begin + m % w;
      pixel_index[p] = r * plan.out_width() + c;
      const Vec2 q{local_row(plan, r), local_col(plan, c)};
      auto row = fine_in.row(p);
      std::span<T> h_out = row.first(hidden);
      if (ensemble) {
        const auto wt = cast_weights<T>(rect.weights(q));
        const std::size_t base = s * 4;
        blend_into<T>(wt, slice_hidden.row(base + 0), slice_hidden.row(base + 1),
                      slice_hidden.row(base + 2), slice_hidden.row(base + 3), h_out);
        if (tape != nullptr) tape->weights[p] = wt;
      } else {
        const auto h = slice_hidden.row(s);
        std::copy(h.begin(), h.end(), h_out.begin());
        if (tape != nullptr) tape->weights[p] = {T{1}, T{0}, T{0}, T{0}};
      }
      row[hidden + 0] = static_cast<T>(q.y);
      row[hidden + 1] = static_cast<T>(q.x);
      if (tape != nullptr) tape->pixel_slice[p] = static_cast<int>(s);
    }
  }
  if (ensemble && counter != nullptr) counter->add(pixels * 4 * hidden);

  const Matrix<T> rgb =
      mlp_forward(std::span<const Layer<T>>(weights.fine), std::move(fine_in),
                  OutputActivation::linear, tape ? &tape->fine : nullptr, counter);
  for (std::size_t i = 0; i < pixels; ++i) {
    auto dst = out.row(static_cast<std::size_t>(pixel_index[i]));
    const auto src = rgb.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  if (tape != nullptr) tape->pixel_index = std::move(pixel_index);
}

template <typename T>
void add_into(DecoderWeights<T>& dst, const DecoderWeights<T>& src) {
  auto add_layers = [](std::vector<Layer<T>>& a, const std::vector<Layer<T>>& b) {
    for (std::size_t l = 0; l < a.size(); ++l) {
      auto av = a[l].weight.values();
      const auto bv = b[l].weight.values();
      for (std::size_t i = 0; i < av.size(); ++i) av[i] += bv[i];
      for (std::size_t i = 0; i < a[l].bias.size(); ++i) a[l].bias[i] += b[l].bias[i];
    }
  };
  add_layers(dst.coarse, src.coarse);
  add_layers(dst.fine, src.fine);
}

}  // namespace

Vec2 local_coord(const GroupPlan& plan, int out_row, int out_col) {
  return {local_row(plan, out_row), local_col(plan, out_col)};
}

std::vector<Vec2> local_coords(const GroupPlan& plan, int group) {
  const GroupBounds b = plan.bounds(group);
  std::vector<Vec2> out;
  out.reserve(b.size());
  for (int r = b.row_begin; r < b.row_end; ++r) {
    for (int c = b.col_begin; c < b.col_end; ++c) out.push_back(local_coord(plan, r, c));
  }
  return out;
}

std::array<double, 4> EnsembleRect::weights(Vec2 q) const noexcept {
  std::array<double, 4> w{};
  const double total = area();
  for (std::size_t t = 0; t < 4; ++t) {
    // Diagonal vertex t' = -t.
    const double dy = std::abs(q.y + kVertexTags[t].y * half_height);
    const double dx = std::abs(q.x + kVertexTags[t].x * half_width);
    w[t] = dy * dx / total;
  }
  return w;
}

template <typename T>
void unfold_vertex_code(const FeatureMap<T>& features, Vec2 position, std::span<T> out) {
  const auto is_half = [](double v) {
    const double twice = 2.0 * v;
    const double rounded = std::round(twice);
    return std::abs(twice - rounded) < 1e-9 && std::fmod(std::abs(rounded), 2.0) == 1.0;
  };
  if (!is_half(position.y) || !is_half(position.x)) {
    throw ArgumentError("vertex position must lie on a latent-cell corner");
  }
  const std::size_t d = static_cast<std::size_t>(features.depth);
  if (out.size() != 16 * d) throw ShapeError("vertex code buffer must hold 16 * depth values");
  std::size_t k = 0;
  for (double l : kVertexOffsets) {
    const int r = std::clamp(static_cast<int>(std::lround(position.y + l)), 0, features.height - 1);
    for (double m : kVertexOffsets) {
      const int c =
          std::clamp(static_cast<int>(std::lround(position.x + m)), 0, features.width - 1);
      const auto code = features.code(r, c);
      std::copy(code.begin(), code.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
      ++k;
    }
  }
}

template <typename T>
std::vector<T> unfold_vertex_code(const FeatureMap<T>& features, Vec2 position) {
  std::vector<T> out(16 * static_cast<std::size_t>(features.depth));
  unfold_vertex_code(features, position, std::span<T>(out));
  return out;
}

template <typename T>
void unfold_center_code(const FeatureMap<T>& features, int row, int col, std::span<T> out) {
  const std::size_t d = static_cast<std::size_t>(features.depth);
  if (out.size() != 9 * d) throw ShapeError("centre code buffer must hold 9 * depth values");
  std::size_t k = 0;
  for (int dy = -1; dy <= 1; ++dy) {
    const int r = std::clamp(row + dy, 0, features.height - 1);
    for (int dx = -1; dx <= 1; ++dx) {
      const int c = std::clamp(col + dx, 0, features.width - 1);
      const auto code = features.code(r, c);
      std::copy(code.begin(), code.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
      ++k;
    }
  }
}

template <typename T>
std::vector<T> coarse_forward(std::span<const T> code, Vec2 first_rel, Vec2 last_rel,
                              std::span<const Layer<T>> coarse, MacCounter* counter) {
  if (coarse.empty()) throw ConfigError("coarse stage has no layers");
  if (coarse.front().in() != code.size() + 4) {
    throw ConfigError("coarse input width " + std::to_string(code.size() + 4) +
                      " does not match first layer width " + std::to_string(coarse.front().in()));
  }
  Matrix<T> x(1, code.size() + 4);
  write_coarse_row<T>(x.row(0), code, first_rel, last_rel);
  const Matrix<T> h = mlp_forward(coarse, std::move(x), OutputActivation::relu, nullptr, counter);
  return {h.values().begin(), h.values().end()};
}

template <typename T>
std::vector<T> ensemble_hidden(const std::array<std::vector<T>, 4>& vertex_hidden, Vec2 q,
                               const EnsembleRect& rect, MacCounter* counter) {
  const std::size_t n = vertex_hidden[0].size();
  for (const auto& h : vertex_hidden) {
    if (h.size() != n) throw ShapeError("vertex hidden vectors differ in length");
  }
  std::vector<T> out(n);
  blend_into<T>(cast_weights<T>(rect.weights(q)), vertex_hidden[0], vertex_hidden[1],
                vertex_hidden[2], vertex_hidden[3], std::span<T>(out));
  if (counter != nullptr) counter->add(4 * n);
  return out;
}

template <typename T>
std::array<T, 3> fine_forward(std::span<const T> hidden, Vec2 rel, std::span<const Layer<T>> fine,
                              MacCounter* counter) {
  if (fine.empty()) throw ConfigError("fine stage has no layers");
  if (fine.front().in() != hidden.size() + 2) {
    throw ConfigError("fine input width " + std::to_string(hidden.size() + 2) +
                      " does not match first layer width " + std::to_string(fine.front().in()));
  }
  if (fine.back().out() != 3) throw ConfigError("fine stage must end in 3 outputs");
  Matrix<T> x(1, hidden.size() + 2);
  auto row = x.row(0);
  std::copy(hidden.begin(), hidden.end(), row.begin());
  row[hidden.size() + 0] = static_cast<T>(rel.y);
  row[hidden.size() + 1] = static_cast<T>(rel.x);
  const Matrix<T> y = mlp_forward(fine, std::move(x), OutputActivation::linear, nullptr, counter);
  return {y(0, 0), y(0, 1), y(0, 2)};
}

template <typename T>
Matrix<T> decode_image(const FeatureMap<T>& features, const GroupPlan& plan,
                       const DecoderWeights<T>& weights, const DecodeOptions& options,
                       DecodeTape<T>* tape) {
  check_inputs(features, plan, weights);
  const bool ensemble = weights.architecture().slice_ensemble;
  Matrix<T> out(plan.output_grid().pixel_count(), 3);
  const auto chunks = chunk_groups(plan, std::max<std::size_t>(1, options.chunk_pixels));
  if (tape != nullptr) {
    tape->clear();
    tape->chunks.resize(chunks.size());
    tape->slice_ensemble = ensemble;
    tape->feature_height = features.height;
    tape->feature_width = features.width;
    tape->feature_depth = features.depth;
  }
  parallel_for(chunks.size(), options.threads, [&](std::size_t c) {
    decode_chunk(features, plan, weights, ensemble, chunks[c].first, chunks[c].second, out,
                 options.counter, tape ? &tape->chunks[c] : nullptr);
  });
  if (tape != nullptr) tape->pixel_count = out.rows();
  return out;
}

template <typename T>
Matrix<T> decode_sequential(const FeatureMap<T>& features, const GroupPlan& plan,
                            const DecoderWeights<T>& weights, MacCounter* counter) {
  check_inputs(features, plan, weights);
  const bool ensemble = weights.architecture().slice_ensemble;
  const std::span<const Layer<T>> coarse(weights.coarse);
  const std::span<const Layer<T>> fine(weights.fine);
  Matrix<T> out(plan.output_grid().pixel_count(), 3);
  std::vector<T> center(9 * static_cast<std::size_t>(features.depth));
  for (int g = 0; g < plan.group_count(); ++g) {
    const int li = g / plan.latent_width();
    const int lj = g % plan.latent_width();
    for (const Slice& slice : plan.slices(g)) {
      const Vec2 first = local_coord(plan, slice.first / plan.out_width(),
                                     slice.first % plan.out_width());
      const Vec2 last = local_coord(plan, slice.last / plan.out_width(),
                                    slice.last % plan.out_width());
      std::array<std::vector<T>, 4> vertex_hidden;
      if (ensemble) {
        for (std::size_t t = 0; t < 4; ++t) {
          const Vec2 tag = kVertexTags[t];
          const auto code = unfold_vertex_code(features, vertex_position(li, lj, tag));
          vertex_hidden[t] = coarse_forward<T>(code, {first.y - tag.y, first.x - tag.x},
                                               {last.y - tag.y, last.x - tag.x}, coarse, counter);
        }
      } else {
        unfold_center_code(features, li, lj, std::span<T>(center));
        vertex_hidden[0] = coarse_forward<T>(center, first, last, coarse, counter);
      }
      for (int idx : slice.members) {
        const Vec2 q = local_coord(plan, idx / plan.out_width(), idx % plan.out_width());
        const std::vector<T> h =
            ensemble ? ensemble_hidden(vertex_hidden, q, EnsembleRect{}, counter) : vertex_hidden[0];
        const auto rgb = fine_forward<T>(h, q, fine, counter);
        for (int ch = 0; ch < 3; ++ch) out(static_cast<std::size_t>(idx), ch) = rgb[ch];
      }
    }
  }
  return out;
}

template <typename T>
Matrix<T> decode_points(const FeatureMap<T>& features, const DecoderWeights<T>& weights,
                        std::span<const Vec2> queries, Matrix<T>* blended) {
  const Architecture arch = weights.architecture();
  if (features.depth != weights.feature_depth) throw ConfigError("feature depth mismatch");
  const CoordGrid latent = features.latent_grid();
  const std::span<const Layer<T>> coarse(weights.coarse);
  const std::span<const Layer<T>> fine(weights.fine);
  Matrix<T> out(queries.size(), 3);
  if (blended != nullptr) blended->assign_zero(queries.size(), static_cast<std::size_t>(arch.hidden));
  std::vector<T> center(9 * static_cast<std::size_t>(features.depth));
  for (std::size_t n = 0; n < queries.size(); ++n) {
    const Vec2 g = queries[n];
    if (!(std::abs(g.y) <= 1.0 && std::abs(g.x) <= 1.0)) {
      throw ArgumentError("query coordinate outside [-1, 1]^2");
    }
    const double qy[1] = {g.y};
    const double qx[1] = {g.x};
    const int li = nearest_axis_assignment(qy, latent.rows)[0];
    const int lj = nearest_axis_assignment(qx, latent.cols)[0];
    const Vec2 q{(g.y - latent.rows[li]) * features.height, (g.x - latent.cols[lj]) * features.width};
    std::vector<T> h;
    if (arch.slice_ensemble) {
      std::array<std::vector<T>, 4> vertex_hidden;
      for (std::size_t t = 0; t < 4; ++t) {
        const Vec2 tag = kVertexTags[t];
        const auto code = unfold_vertex_code(features, vertex_position(li, lj, tag));
        const Vec2 rel{q.y - tag.y, q.x - tag.x};
        vertex_hidden[t] = coarse_forward<T>(code, rel, rel, coarse);
      }
      h = ensemble_hidden(vertex_hidden, q);
    } else {
      unfold_center_code(features, li, lj, std::span<T>(center));
      h = coarse_forward<T>(center, q, q, coarse);
    }
    if (blended != nullptr) std::copy(h.begin(), h.end(), blended->row(n).begin());
    const auto rgb = fine_forward<T>(h, q, fine);
    for (int ch = 0; ch < 3; ++ch) out(n, ch) = rgb[ch];
  }
  return out;
}

template <typename T>
DecoderWeights<T> zero_gradients(const DecoderWeights<T>& weights) {
  DecoderWeights<T> g;
  g.feature_depth = weights.feature_depth;
  g.hidden = weights.hidden;
  g.coarse = zeros_like(std::span<const Layer<T>>(weights.coarse));
  g.fine = zeros_like(std::span<const Layer<T>>(weights.fine));
  return g;
}

template <typename T>
void decoder_backward(const DecodeTape<T>& tape, const Matrix<T>& d_rgb,
                      const DecoderWeights<T>& weights, DecoderWeights<T>& grads,
                      std::type_identity_t<FeatureMap<T>>* d_features, int threads) {
  if (!tape.ready()) throw StateError("decoder_backward needs a taped forward pass");
  if (d_rgb.rows() != tape.pixel_count || d_rgb.cols() != 3) {
    throw ShapeError("loss gradient must be [" + std::to_string(tape.pixel_count) + " x 3]");
  }
  const Architecture arch = weights.architecture();
  if (arch.slice_ensemble != tape.slice_ensemble || weights.feature_depth != tape.feature_depth) {
    throw StateError("tape was recorded with a different decoder architecture");
  }
  if (grads.architecture() != arch) throw ShapeError("gradient buffers do not match the weights");
  if (d_features != nullptr &&
      (d_features->height != tape.feature_height || d_features->width != tape.feature_width ||
       d_features->depth != tape.feature_depth)) {
    throw ShapeError("feature gradient buffer does not match the taped feature map");
  }

  const bool ensemble = tape.slice_ensemble;
  const std::size_t vertices = ensemble ? 4 : 1;
  const std::size_t hidden = static_cast<std::size_t>(weights.hidden);
  const std::size_t depth = static_cast<std::size_t>(tape.feature_depth);
  const std::size_t code_width = (ensemble ? 16 : 9) * depth;
  const int latent_width = tape.feature_width;

  struct ChunkResult {
    DecoderWeights<T> grads;
    Matrix<T> d_coarse_in;
  };

  auto run = [&](const detail::ChunkTape<T>& ct, ChunkResult& res) {
    const std::size_t pixels = ct.pixel_index.size();
    Matrix<T> d_out(pixels, 3);
    for (std::size_t p = 0; p < pixels; ++p) {
      const auto src = d_rgb.row(static_cast<std::size_t>(ct.pixel_index[p]));
      std::copy(src.begin(), src.end(), d_out.row(p).begin());
    }
    res.grads = zero_gradients(weights);
    const Matrix<T> d_fine_in =
        mlp_backward(std::span<const Layer<T>>(weights.fine), ct.fine, std::move(d_out),
                     OutputActivation::linear, std::span<Layer<T>>(res.grads.fine), true);
    // Blend weights are geometry only: the hidden gradient splits by them.
    Matrix<T> d_hidden(ct.slice_group.size() * vertices, hidden);
    for (std::size_t p = 0; p < pixels; ++p) {
      const auto g = d_fine_in.row(p);
      const std::size_t s = static_cast<std::size_t>(ct.pixel_slice[p]);
      for (std::size_t t = 0; t < vertices; ++t) {
        const T w = ct.weights[p][t];
        auto dst = d_hidden.row(s * vertices + t);
        for (std::size_t e = 0; e < hidden; ++e) dst[e] += w * g[e];
      }
    }
    res.d_coarse_in =
        mlp_backward(std::span<const Layer<T>>(weights.coarse), ct.coarse, std::move(d_hidden),
                     OutputActivation::relu, std::span<Layer<T>>(res.grads.coarse),
                     d_features != nullptr);
  };

  auto scatter = [&](const detail::ChunkTape<T>& ct, const Matrix<T>& d_in) {
    for (std::size_t s = 0; s < ct.slice_group.size(); ++s) {
      const int li = ct.slice_group[s] / latent_width;
      const int lj = ct.slice_group[s] % latent_width;
      for (std::size_t t = 0; t < vertices; ++t) {
        const auto row = d_in.row(s * vertices + t);
        std::size_t k = 0;
        if (ensemble) {
          const Vec2 pos = vertex_position(li, lj, kVertexTags[t]);
          for (double l : kVertexOffsets) {
            const int r = std::clamp(static_cast<int>(std::lround(pos.y + l)), 0,
                                     d_features->height - 1);
            for (double m : kVertexOffsets) {
              const int c = std::clamp(static_cast<int>(std::lround(pos.x + m)), 0,
                                       d_features->width - 1);
              auto dst = d_features->code(r, c);
              for (std::size_t e = 0; e < depth; ++e) dst[e] += row[k * depth + e];
              ++k;
            }
          }
        } else {
          for (int dy = -1; dy <= 1; ++dy) {
            const int r = std::clamp(li + dy, 0, d_features->height - 1);
            for (int dx = -1; dx <= 1; ++dx) {
              const int c = std::clamp(lj + dx, 0, d_features->width - 1);
              auto dst = d_features->code(r, c);
              for (std::size_t e = 0; e < depth; ++e) dst[e] += row[k * depth + e];
              ++k;
            }
          }
        }
        (void)code_width;
      }
    }
  };

  // Waves of chunks run in parallel; results merge in chunk order so the sums
  // do not depend on the worker count.
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads > 0 ? threads : thread_limit()));
  for (std::size_t begin = 0; begin < tape.chunks.size(); begin += wave) {
    const std::size_t end = std::min(tape.chunks.size(), begin + wave);
    std::vector<ChunkResult> results(end - begin);
    parallel_for(end - begin, threads,
                 [&](std::size_t i) { run(tape.chunks[begin + i], results[i]); });
    for (std::size_t i = 0; i < results.size(); ++i) {
      add_into(grads, results[i].grads);
      if (d_features != nullptr) scatter(tape.chunks[begin + i], results[i].d_coarse_in);
    }
  }
}

Image rows_to_image(const Matrix<float>& rgb, int height, int width) {
  if (rgb.rows() != static_cast<std::size_t>(height) * width || rgb.cols() != 3) {
    throw ShapeError("pixel rows do not match image size");
  }
  Image img(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const auto px = rgb.row(static_cast<std::size_t>(r) * width + c);
      for (int ch = 0; ch < 3; ++ch) img.at(ch, r, c) = px[ch];
    }
  }
  return img;
}

template <typename T>
Matrix<T> image_to_rows(const Image& image) {
  Matrix<T> out(image.pixel_count(), 3);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      auto px = out.row(static_cast<std::size_t>(r) * image.width + c);
      for (int ch = 0; ch < 3; ++ch) px[ch] = static_cast<T>(image.at(ch, r, c));
    }
  }
  return out;
}

#define DIIF_INSTANTIATE_C2F(T)                                                                   \
  template void unfold_vertex_code<T>(const FeatureMap<T>&, Vec2, std::span<T>);                  \
  template std::vector<T> unfold_vertex_code<T>(const FeatureMap<T>&, Vec2);                      \
  template void unfold_center_code<T>(const FeatureMap<T>&, int, int, std::span<T>);              \
  template std::vector<T> coarse_forward<T>(std::span<const T>, Vec2, Vec2,                       \
                                            std::span<const Layer<T>>, MacCounter*);              \
  template std::vector<T> ensemble_hidden<T>(const std::array<std::vector<T>, 4>&, Vec2,          \
                                             const EnsembleRect&, MacCounter*);                   \
  template std::array<T, 3> fine_forward<T>(std::span<const T>, Vec2, std::span<const Layer<T>>, \
                                            MacCounter*);                                         \
  template Matrix<T> decode_image<T>(const FeatureMap<T>&, const GroupPlan&,                      \
                                     const DecoderWeights<T>&, const DecodeOptions&,              \
                                     DecodeTape<T>*);                                             \
  template Matrix<T> decode_sequential<T>(const FeatureMap<T>&, const GroupPlan&,                 \
                                          const DecoderWeights<T>&, MacCounter*);                 \
  template Matrix<T> decode_points<T>(const FeatureMap<T>&, const DecoderWeights<T>&,             \
                                      std::span<const Vec2>, Matrix<T>*);                         \
  template void decoder_backward<T>(const DecodeTape<T>&, const Matrix<T>&,                       \
                                    const DecoderWeights<T>&, DecoderWeights<T>&,                 \
                                    FeatureMap<T>*, int);                                         \
  template DecoderWeights<T> zero_gradients<T>(const DecoderWeights<T>&);                         \
  template Matrix<T> image_to_rows<T>(const Image&);

DIIF_INSTANTIATE_C2F(float)
DIIF_INSTANTIATE_C2F(double)

#undef DIIF_INSTANTIATE_C2F

}  // namespace diif
