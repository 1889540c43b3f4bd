// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Dense 64-bit vectors and row-major matrices, the handful of kernels the
// recurrent layers are written in terms of, and seeded initialization.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sentiment/errors.hpp"
#include "sentiment/random.hpp"

namespace sentiment {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  Vector(std::initializer_list<double> values) : values_(values) {}
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {}

  // Rejects NaN/Inf entries.
  static Vector checked(std::vector<double> values) {
    for (double v : values) {
      if (!std::isfinite(v)) throw DimensionError("Vector: non-finite entry");
    }
    return Vector(std::move(values));
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const Vector&) const = default;

 private:
  std::vector<double> values_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("Matrix: value count does not match shape");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("Matrix: ragged rows");
      values.insert(values.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(values));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix checked(std::size_t rows, std::size_t cols, std::vector<double> values) {
    for (double v : values) {
      if (!std::isfinite(v)) throw DimensionError("Matrix: non-finite entry");
    }
    return Matrix(rows, cols, std::move(values));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// W·v + b, each row accumulated left to right starting from 0.
inline Vector affine(const Matrix& w, const Vector& v, const Vector& b) {
  if (w.cols() != v.size() || w.rows() != b.size()) {
    throw DimensionError("affine: W is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", v has " + std::to_string(v.size()) +
                         ", b has " + std::to_string(b.size()));
  }
  Vector out(w.rows());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.row(r).data();
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols(); ++c) acc += row[c] * v[c];
    out[r] = acc + b[r];
  }
  return out;
}

inline Vector concat(const Vector& a, const Vector& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return Vector(std::move(out));
}

// Entries [offset, offset + n) as a new vector.
inline Vector slice(const Vector& v, std::size_t offset, std::size_t n) {
  if (offset + n > v.size()) throw DimensionError("slice: out of range");
  return Vector(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(offset),
                                    v.begin() + static_cast<std::ptrdiff_t>(offset + n)));
}

enum class Activation { sigmoid, tanh };

// Branch form keeps exp() from overflowing for large |x|.
inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector activate(const Vector& v, Activation kind) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = kind == Activation::sigmoid ? sigmoid(v[i]) : std::tanh(v[i]);
  }
  return out;
}

inline Vector hadamard(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("hadamard: length mismatch");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

// acc += v
inline void add_into(Vector& acc, const Vector& v) {
  if (acc.size() != v.size()) throw DimensionError("add_into: length mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

// m += u vᵀ
inline void add_outer(Matrix& m, const Vector& u, const Vector& v) {
  if (m.rows() != u.size() || m.cols() != v.size()) {
    throw DimensionError("add_outer: shape mismatch");
  }
  for (std::size_t r = 0; r < u.size(); ++r) {
    const double ur = u[r];
    double* row = m.row(r).data();
    for (std::size_t c = 0; c < v.size(); ++c) row[c] += ur * v[c];
  }
}

// acc += Wᵀ u
inline void add_transpose_times(Vector& acc, const Matrix& w, const Vector& u) {
  if (w.rows() != u.size() || w.cols() != acc.size()) {
    throw DimensionError("add_transpose_times: shape mismatch");
  }
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double ur = u[r];
    const double* row = w.row(r).data();
    for (std::size_t c = 0; c < w.cols(); ++c) acc[c] += row[c] * ur;
  }
}

enum class InitScheme { uniform_scaled };

// Glorot-style uniform(-s, s), s = sqrt(6 / (rows + cols)). Pure function
// of (rows, cols, seed, scheme).
inline Matrix seeded_init(std::size_t rows, std::size_t cols, std::uint64_t seed,
                          InitScheme scheme = InitScheme::uniform_scaled) {
  (void)scheme;
  if (rows == 0 || cols == 0) throw DimensionError("seeded_init: empty shape");
  const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = s * (2.0 * rng.uniform01() - 1.0);
  return Matrix(rows, cols, std::move(values));
}

}  // namespace sentiment
