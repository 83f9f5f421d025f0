#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "flatclust/error.hpp"

namespace flatclust {

/// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  const std::vector<T>& data() const { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using BoolMatrix = Matrix<std::uint8_t>;

inline RealMatrix multiply(const RealMatrix& a, const RealMatrix& b) {
  detail::require(a.cols() == b.rows(), ErrorCode::dimension_mismatch,
                  "matrix product: inner dimensions differ");
  RealMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline std::vector<double> multiply(const RealMatrix& a,
                                    std::span<const double> x) {
  detail::require(a.cols() == x.size(), ErrorCode::dimension_mismatch,
                  "matrix-vector product: dimensions differ");
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) out[i] += a(i, k) * x[k];
  return out;
}

/// Boolean semiring product: out(i,j) = OR_k (a(i,k) AND b(k,j)).
inline BoolMatrix logical_multiply(const BoolMatrix& a, const BoolMatrix& b) {
  detail::require(a.cols() == b.rows(), ErrorCode::dimension_mismatch,
                  "logical product: inner dimensions differ");
  BoolMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (!a(i, k)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j)
        if (b(k, j)) out(i, j) = 1;
    }
  return out;
}

/// Rectangular matrix with `value` on the main diagonal.
inline RealMatrix scaled_diagonal(std::size_t rows, std::size_t cols,
                                  double value) {
  RealMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows && i < cols; ++i) m(i, i) = value;
  return m;
}

}  // namespace flatclust
