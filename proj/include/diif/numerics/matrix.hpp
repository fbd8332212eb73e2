#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace diif {

/// Counts multiplies performed by the dense kernels. One MAC per multiply in a
/// matrix product; bias adds and activations are not counted.
class MacCounter {
 public:
  void add(std::uint64_t n) noexcept { count_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t count() const noexcept { return count_.load(std::memory_order_relaxed); }
  void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

/// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<T>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  // Reshapes and zero-fills; reuses capacity.
  void assign_zero(std::size_t rows, std::size_t cols);
  void fill(T value);

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = static_cast<U>(data_[i]);
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

// y = x * w + b, x: [B x in], w: [in x out], b: [out].
// Each output element accumulates over the inner index in ascending order, so a
// row's result does not depend on which other rows share the call.
template <typename T>
void matmul_add_bias_into(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
                          Matrix<T>& y, MacCounter* counter = nullptr);

template <typename T>
Matrix<T> matmul_add_bias(const Matrix<T>& x, const Matrix<T>& w, std::span<const T> b,
                          MacCounter* counter = nullptr);

template <typename T>
Matrix<T> relu(const Matrix<T>& x);

template <typename T>
void relu_inplace(Matrix<T>& x) noexcept;

// Zeroes dy wherever the ReLU output was not positive.
template <typename T>
void relu_backward_inplace(const Matrix<T>& relu_output, Matrix<T>& dy);

// Reverse of matmul_add_bias. Accumulates into dw/db (sum over rows in ascending
// order) and writes dx when requested.
template <typename T>
void linear_backward(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& dy, Matrix<T>& dw,
                     std::span<T> db, Matrix<T>* dx);

bool all_finite(std::span<const float> values) noexcept;
bool all_finite(std::span<const double> values) noexcept;

}  // namespace diif
