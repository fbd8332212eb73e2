#include "diif/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diif/errors.hpp"

namespace diif {

template <typename T>
Matrix<T>::Matrix(std::initializer_list<std::initializer_list<T>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

template <typename T>
Matrix<T> Matrix<T>::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
  return m;
}

template <typename T>
void Matrix<T>::assign_zero(std::size_t rows, std::size_t cols) {
  rows_ = rows;
  cols_ = cols;
  data_.assign(rows * cols, T{0});
}

template <typename T>
void Matrix<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

namespace {

std::string shape_string(std::size_t r, std::size_t c) {
  return "[" + std::to_string(r) + "x" + std::to_string(c) + "]";
}

}  // namespace

template <typename T>
void matmul_add_bias_into(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
                          Matrix<T>& y, MacCounter* counter) {
  const std::size_t batch = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = w.cols();
  if (w.rows() != in) {
    throw ShapeError("matmul inner dimension mismatch: x " + shape_string(batch, in) + " w " +
                     shape_string(w.rows(), out));
  }
  if (b.size() != out) {
    throw ShapeError("bias length " + std::to_string(b.size()) + " does not match " +
                     std::to_string(out) + " outputs");
  }
  y.assign_zero(batch, out);
  const T* wp = w.data();

  // Four rows share each streamed weight row.
  std::size_t i = 0;
  for (; i + 4 <= batch; i += 4) {
    T* y0 = y.data() + (i + 0) * out;
    T* y1 = y.data() + (i + 1) * out;
    T* y2 = y.data() + (i + 2) * out;
    T* y3 = y.data() + (i + 3) * out;
    const T* x0 = x.data() + (i + 0) * in;
    const T* x1 = x.data() + (i + 1) * in;
    const T* x2 = x.data() + (i + 2) * in;
    const T* x3 = x.data() + (i + 3) * in;
    for (std::size_t k = 0; k < in; ++k) {
      const T* wk = wp + k * out;
      const T a0 = x0[k], a1 = x1[k], a2 = x2[k], a3 = x3[k];
      for (std::size_t j = 0; j < out; ++j) {
        const T wv = wk[j];
        y0[j] += a0 * wv;
        y1[j] += a1 * wv;
        y2[j] += a2 * wv;
        y3[j] += a3 * wv;
      }
    }
    for (std::size_t j = 0; j < out; ++j) {
      y0[j] += b[j];
      y1[j] += b[j];
      y2[j] += b[j];
      y3[j] += b[j];
    }
  }
  for (; i < batch; ++i) {
    T* yi = y.data() + i * out;
    const T* xi = x.data() + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const T* wk = wp + k * out;
      const T a = xi[k];
      for (std::size_t j = 0; j < out; ++j) yi[j] += a * wk[j];
    }
    for (std::size_t j = 0; j < out; ++j) yi[j] += b[j];
  }
  if (counter != nullptr) counter->add(static_cast<std::uint64_t>(batch) * in * out);
}

template <typename T>
Matrix<T> matmul_add_bias(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
                          MacCounter* counter) {
  Matrix<T> y;
  matmul_add_bias_into(x, w, b, y, counter);
  return y;
}

template <typename T>
void relu_inplace(Matrix<T>& x) noexcept {
  for (T& v : x.values()) v = v > T{0} ? v : T{0};
}

template <typename T>
Matrix<T> relu(const Matrix<T>& x) {
  Matrix<T> y = x;
  relu_inplace(y);
  return y;
}

template <typename T>
void relu_backward_inplace(const Matrix<T>& relu_output, Matrix<T>& dy) {
  if (relu_output.rows() != dy.rows() || relu_output.cols() != dy.cols()) {
    throw ShapeError("relu backward shape mismatch");
  }
  const auto out = relu_output.values();
  auto g = dy.values();
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(out[i] > T{0})) g[i] = T{0};
  }
}

template <typename T>
void linear_backward(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& dy, Matrix<T>& dw,
                     std::span<T> db, Matrix<T>* dx) {
  const std::size_t batch = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = w.cols();
  if (w.rows() != in || dy.rows() != batch || dy.cols() != out || dw.rows() != in ||
      dw.cols() != out || db.size() != out) {
    throw ShapeError("linear backward shape mismatch");
  }
  for (std::size_t i = 0; i < batch; ++i) {
    const T* gi = dy.data() + i * out;
    const T* xi = x.data() + i * in;
    for (std::size_t j = 0; j < out; ++j) db[j] += gi[j];
    for (std::size_t k = 0; k < in; ++k) {
      const T a = xi[k];
      T* dwk = dw.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) dwk[j] += a * gi[j];
    }
  }
  if (dx == nullptr) return;
  dx->assign_zero(batch, in);
  // dx = dy * w^T as row dot products with eight fixed partial sums.
  for (std::size_t i = 0; i < batch; ++i) {
    const T* gi = dy.data() + i * out;
    T* dxi = dx->data() + i * in;
    for (std::size_t k = 0; k < in; ++k) {
      const T* wk = w.data() + k * out;
      T acc[8] = {};
      std::size_t j = 0;
      for (; j + 8 <= out; j += 8) {
        for (std::size_t l = 0; l < 8; ++l) acc[l] += gi[j + l] * wk[j + l];
      }
      T tail{0};
      for (; j < out; ++j) tail += gi[j] * wk[j];
      dxi[k] = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) +
               tail;
    }
  }
}

bool all_finite(std::span<const float> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

bool all_finite(std::span<const double> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

#define DIIF_INSTANTIATE_MATRIX(T)                                                              \
  template class Matrix<T>;                                                                     \
  template void matmul_add_bias_into<T>(const Matrix<T>&, const Matrix<T>&, std::span<const T>, \
                                        Matrix<T>&, MacCounter*);                               \
  template Matrix<T> matmul_add_bias<T>(const Matrix<T>&, const Matrix<T>&, std::span<const T>, \
                                        MacCounter*);                                           \
  template Matrix<T> relu<T>(const Matrix<T>&);                                                 \
  template void relu_inplace<T>(Matrix<T>&) noexcept;                                           \
  template void relu_backward_inplace<T>(const Matrix<T>&, Matrix<T>&);                         \
  template void linear_backward<T>(const Matrix<T>&, const Matrix<T>&, const Matrix<T>&,        \
                                   Matrix<T>&, std::span<T>, Matrix<T>*);

DIIF_INSTANTIATE_MATRIX(float)
DIIF_INSTANTIATE_MATRIX(double)

#undef DIIF_INSTANTIATE_MATRIX

}  // namespace diif
