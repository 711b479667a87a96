#pragma once

// Dense row-major and packed-symmetric matrices of doubles, plus the handful of
// BLAS-like kernels the solvers need. Sizes here are small to moderate
// (l up to a few thousand, n up to a few hundred), so everything is plain loops.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvkl/error.hpp"

namespace mvkl {

inline bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Takes ownership of row-major entries; rejects length mismatch and non-finite values.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    require(data_.size() == rows_ * cols_, ErrorKind::dimension_mismatch,
            "matrix entries length " + std::to_string(data_.size()) + " != " +
                std::to_string(rows_) + "x" + std::to_string(cols_));
    require(all_finite(data_), ErrorKind::invalid_input, "matrix entries must be finite");
  }

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> entries;
    entries.reserve(r * c);
    for (const auto& row : rows) {
      require(row.size() == c, ErrorKind::dimension_mismatch, "ragged initializer");
      entries.insert(entries.end(), row.begin(), row.end());
    }
    return DenseMatrix(r, c, std::move(entries));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix& operator+=(const DenseMatrix& other) {
    check_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& other) {
    check_same_shape(other);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
    return *this;
  }
  DenseMatrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += a * x
  DenseMatrix& add_scaled(double a, const DenseMatrix& x) {
    check_same_shape(x);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += a * x.data_[k];
    return *this;
  }

  bool operator==(const DenseMatrix& other) const = default;

 private:
  void check_same_shape(const DenseMatrix& other) const {
    require(rows_ == other.rows_ && cols_ == other.cols_, ErrorKind::dimension_mismatch,
            "shape mismatch " + std::to_string(rows_) + "x" + std::to_string(cols_) + " vs " +
                std::to_string(other.rows_) + "x" + std::to_string(other.cols_));
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
inline DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
inline DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::dimension_mismatch, "matmul inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < bk.size(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// aᵀ * b without forming the transpose.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), ErrorKind::dimension_mismatch, "matmul_tn row counts differ");
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < ak.size(); ++i) {
      const double aki = ak[i];
      if (aki == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < bk.size(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

inline std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorKind::dimension_mismatch, "matvec dimension mismatch");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < ai.size(); ++j) s += ai[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Frobenius inner product ⟨a, b⟩ = trace(aᵀ b).
inline double frobenius_dot(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::dimension_mismatch,
          "frobenius_dot shape mismatch");
  return dot(a.data(), b.data());
}

inline double frobenius_norm(const DenseMatrix& a) { return norm2(a.data()); }

inline double trace(const DenseMatrix& a) {
  require(a.is_square(), ErrorKind::dimension_mismatch, "trace of non-square matrix");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

/// Symmetric matrix stored as its packed upper triangle (row by row).
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim, double fill = 0.0)
      : dim_(dim), packed_(dim * (dim + 1) / 2, fill) {}

  static SymmetricMatrix identity(std::size_t n, double scale = 1.0) {
    SymmetricMatrix s(n);
    for (std::size_t i = 0; i < n; ++i) s(i, i) = scale;
    return s;
  }

  static SymmetricMatrix diagonal(std::span<const double> d) {
    SymmetricMatrix s(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) s(i, i) = d[i];
    return s;
  }

  /// Canonical constructor from a general square matrix: (M + Mᵀ)/2.
  static SymmetricMatrix symmetrize(const DenseMatrix& m) {
    require(m.is_square(), ErrorKind::dimension_mismatch, "symmetrize needs a square matrix");
    require(all_finite(m.data()), ErrorKind::invalid_input, "symmetrize needs finite entries");
    SymmetricMatrix s(m.rows());
    for (std::size_t i = 0; i < s.dim_; ++i)
      for (std::size_t j = i; j < s.dim_; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
    return s;
  }

  /// v vᵀ scaled by `scale`.
  static SymmetricMatrix outer(std::span<const double> v, double scale = 1.0) {
    SymmetricMatrix s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i; j < v.size(); ++j) s(i, j) = scale * v[i] * v[j];
    return s;
  }

  std::size_t dim() const noexcept { return dim_; }

  double& operator()(std::size_t i, std::size_t j) { return packed_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return packed_[index(i, j)]; }

  std::span<double> packed() noexcept { return packed_; }
  std::span<const double> packed() const noexcept { return packed_; }

  DenseMatrix to_dense() const {
    DenseMatrix d(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = i; j < dim_; ++j) d(i, j) = d(j, i) = (*this)(i, j);
    return d;
  }

  double trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const { return std::sqrt(frobenius_dot(*this)); }

  /// ⟨this, other⟩ over the full (unpacked) matrices.
  double frobenius_dot(const SymmetricMatrix& other) const {
    require(dim_ == other.dim_, ErrorKind::dimension_mismatch, "symmetric dot dimension mismatch");
    double s = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      s += packed_[k] * other.packed_[k];
      ++k;
      for (std::size_t j = i + 1; j < dim_; ++j, ++k) s += 2.0 * packed_[k] * other.packed_[k];
    }
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : packed_) m = std::max(m, std::abs(v));
    return m;
  }

  SymmetricMatrix& operator+=(const SymmetricMatrix& o) { return add_scaled(1.0, o); }
  SymmetricMatrix& operator-=(const SymmetricMatrix& o) { return add_scaled(-1.0, o); }
  SymmetricMatrix& operator*=(double s) {
    for (double& v : packed_) v *= s;
    return *this;
  }
  SymmetricMatrix& add_scaled(double a, const SymmetricMatrix& o) {
    require(dim_ == o.dim_, ErrorKind::dimension_mismatch, "symmetric add dimension mismatch");
    for (std::size_t k = 0; k < packed_.size(); ++k) packed_[k] += a * o.packed_[k];
    return *this;
  }

  bool operator==(const SymmetricMatrix& other) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    assert(j < dim_);
    return i * dim_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t dim_ = 0;
  std::vector<double> packed_;
};

inline SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) { return a += b; }
inline SymmetricMatrix operator-(SymmetricMatrix a, const SymmetricMatrix& b) { return a -= b; }
inline SymmetricMatrix operator*(double s, SymmetricMatrix a) { return a *= s; }

/// s * m for symmetric s (dim × dim) and dense m (dim × k).
inline DenseMatrix multiply(const SymmetricMatrix& s, const DenseMatrix& m) {
  const std::size_t n = s.dim();
  require(m.rows() == n, ErrorKind::dimension_mismatch, "symmetric * dense dimension mismatch");
  DenseMatrix out(n, m.cols());
  auto packed = s.packed();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto oi = out.row(i);
    auto mi = m.row(i);
    {
      const double sii = packed[k++];
      for (std::size_t c = 0; c < oi.size(); ++c) oi[c] += sii * mi[c];
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sij = packed[k++];
      if (sij == 0.0) continue;
      auto mj = m.row(j);
      auto oj = out.row(j);
      for (std::size_t c = 0; c < oi.size(); ++c) {
        oi[c] += sij * mj[c];
        oj[c] += sij * mi[c];
      }
    }
  }
  return out;
}

/// m * s for dense m (k × dim) and symmetric s (dim × dim).
inline DenseMatrix multiply(const DenseMatrix& m, const SymmetricMatrix& s) {
  const std::size_t n = s.dim();
  require(m.cols() == n, ErrorKind::dimension_mismatch, "dense * symmetric dimension mismatch");
  DenseMatrix out(m.rows(), n);
  const DenseMatrix sd = s.to_dense();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto mr = m.row(r);
    auto orow = out.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = mr[i];
      if (v == 0.0) continue;
      auto si = sd.row(i);
      for (std::size_t j = 0; j < n; ++j) orow[j] += v * si[j];
    }
  }
  return out;
}

inline std::vector<double> matvec(const SymmetricMatrix& s, std::span<const double> x) {
  const std::size_t n = s.dim();
  require(x.size() == n, ErrorKind::dimension_mismatch, "symmetric matvec dimension mismatch");
  std::vector<double> y(n, 0.0);
  auto packed = s.packed();
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += packed[k++] * x[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sij = packed[k++];
      y[i] += sij * x[j];
      y[j] += sij * x[i];
    }
  }
  return y;
}

/// Upper bound on the largest eigenvalue magnitude from Gershgorin discs.
inline double gershgorin_radius(const SymmetricMatrix& s) {
  double bound = 0.0;
  for (std::size_t i = 0; i < s.dim(); ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < s.dim(); ++j) r += std::abs(s(i, j));
    bound = std::max(bound, r);
  }
  return bound;
}

}  // namespace mvkl
