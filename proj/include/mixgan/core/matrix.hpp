#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mixgan/core/error.hpp"

namespace mixgan {

/// Dense row-major matrix of doubles. Rows index samples, columns features.
struct Matrix2D {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix2D() = default;
  Matrix2D(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  static Matrix2D zeros(std::size_t r, std::size_t c) { return Matrix2D(r, c); }

  double& operator()(std::size_t r, std::size_t c) {
    return values[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }

  std::span<double> row(std::size_t r) {
    return std::span<double>(values.data() + r * cols, cols);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values.data() + r * cols, cols);
  }

  std::size_t size() const { return values.size(); }

  bool same_shape(const Matrix2D& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EigenMap = Eigen::Map<EigenRowMajor>;
using ConstEigenMap = Eigen::Map<const EigenRowMajor>;

inline EigenMap as_eigen(Matrix2D& m) {
  return EigenMap(m.values.data(), static_cast<Eigen::Index>(m.rows),
                  static_cast<Eigen::Index>(m.cols));
}

inline ConstEigenMap as_eigen(const Matrix2D& m) {
  return ConstEigenMap(m.values.data(), static_cast<Eigen::Index>(m.rows),
                       static_cast<Eigen::Index>(m.cols));
}

inline void require_shape(const Matrix2D& m, std::size_t rows, std::size_t cols,
                          const std::string& what) {
  if (m.rows != rows || m.cols != cols) {
    throw DimensionError(what + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " +
                         std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
}

/// C = A * B
inline Matrix2D matmul(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols != b.rows) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows));
  }
  Matrix2D c(a.rows, b.cols);
  as_eigen(c).noalias() = as_eigen(a) * as_eigen(b);
  return c;
}

/// C = A * B^T
inline Matrix2D matmul_nt(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols != b.cols) {
    throw DimensionError("matmul_nt: inner dimensions " +
                         std::to_string(a.cols) + " vs " +
                         std::to_string(b.cols));
  }
  Matrix2D c(a.rows, b.rows);
  as_eigen(c).noalias() = as_eigen(a) * as_eigen(b).transpose();
  return c;
}

/// C = A^T * B
inline Matrix2D matmul_tn(const Matrix2D& a, const Matrix2D& b) {
  if (a.rows != b.rows) {
    throw DimensionError("matmul_tn: inner dimensions " +
                         std::to_string(a.rows) + " vs " +
                         std::to_string(b.rows));
  }
  Matrix2D c(a.cols, b.cols);
  as_eigen(c).noalias() = as_eigen(a).transpose() * as_eigen(b);
  return c;
}

inline void add_row_vector(Matrix2D& m, std::span<const double> v) {
  if (v.size() != m.cols) {
    throw DimensionError("add_row_vector: vector length " +
                         std::to_string(v.size()) + " vs cols " +
                         std::to_string(m.cols));
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* p = m.values.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) p[c] += v[c];
  }
}

inline std::vector<double> column_sums(const Matrix2D& m) {
  std::vector<double> s(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* p = m.values.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) s[c] += p[c];
  }
  return s;
}

inline bool all_finite(const Matrix2D& m) {
  for (double v : m.values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// Extract the given rows into a new matrix.
inline Matrix2D take_rows(const Matrix2D& m, std::span<const std::size_t> idx) {
  Matrix2D out(idx.size(), m.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double* src = m.values.data() + idx[i] * m.cols;
    std::copy(src, src + m.cols, out.values.data() + i * m.cols);
  }
  return out;
}

/// Stack two matrices with equal column counts, a on top of b.
inline Matrix2D vstack(const Matrix2D& a, const Matrix2D& b) {
  if (a.cols != b.cols) {
    throw DimensionError("vstack: column counts " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.cols));
  }
  Matrix2D out(a.rows + b.rows, a.cols);
  std::copy(a.values.begin(), a.values.end(), out.values.begin());
  std::copy(b.values.begin(), b.values.end(),
            out.values.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

}  // namespace mixgan
