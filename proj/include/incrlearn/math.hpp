#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "incrlearn/errors.hpp"

namespace incrlearn {

using Vec = std::vector<double>;

/// Norms below this are treated as zero vectors.
inline constexpr double kDegenerateNormThreshold = 1e-12;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "dot: dimension mismatch " << a.size() << " vs " << b.size();
    throw ShapeError(msg.str());
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

/// Unit-norm feature vector. Instances exist only through l2_normalize()
/// and renormalized_mean(), so holding one certifies ||values|| == 1
/// (within 1e-9) and all entries finite.
class FeatureVector {
public:
  const Vec& values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend FeatureVector l2_normalize(std::span<const double> v);

private:
  explicit FeatureVector(Vec v) : values_(std::move(v)) {}
  Vec values_;
};

/// v / ||v||. Throws DegenerateVectorError when ||v|| < 1e-12.
inline FeatureVector l2_normalize(std::span<const double> v) {
  if (v.empty()) throw EmptyInputError("l2_normalize: empty vector");
  const double n = l2_norm(v);
  if (!(n >= kDegenerateNormThreshold)) {
    throw DegenerateVectorError(
        "l2_normalize: vector norm below 1e-12 (collapsed feature)");
  }
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return FeatureVector(std::move(out));
}

inline FeatureVector l2_normalize(const Vec& v) {
  return l2_normalize(std::span<const double>(v));
}

/// Componentwise mean of the inputs, re-normalized to unit length.
inline FeatureVector renormalized_mean(std::span<const FeatureVector> vs) {
  if (vs.empty()) throw EmptyInputError("renormalized_mean: empty list");
  const std::size_t d = vs.front().dim();
  Vec mean(d, 0.0);
  for (const FeatureVector& v : vs) {
    if (v.dim() != d) {
      throw ShapeError("renormalized_mean: mixed dimensions");
    }
    for (std::size_t i = 0; i < d; ++i) mean[i] += v[i];
  }
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (double& x : mean) x *= inv;
  return l2_normalize(mean);
}

inline FeatureVector renormalized_mean(const std::vector<FeatureVector>& vs) {
  return renormalized_mean(std::span<const FeatureVector>(vs));
}

inline double euclidean_distance(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("euclidean_distance: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double euclidean_distance(const FeatureVector& a,
                                 const FeatureVector& b) {
  return euclidean_distance(std::span<const double>(a.values()),
                            std::span<const double>(b.values()));
}

inline double dot(const FeatureVector& a, const FeatureVector& b) {
  return dot(std::span<const double>(a.values()),
             std::span<const double>(b.values()));
}

/// Dense row-major matrix, sized once at construction.
class Matrix {
public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  Vec& data() { return data_; }
  const Vec& data() const { return data_; }

  /// Row view, length cols().
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_.data() + r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_.data() + r * cols_, cols_);
  }

  bool operator==(const Matrix& other) const = default;

private:
  std::size_t rows_;
  std::size_t cols_;
  Vec data_;
};

/// y = M x + b. b may be empty to mean zero.
inline Vec affine(const Matrix& m, std::span<const double> x,
                  std::span<const double> b) {
  if (m.cols() != x.size()) {
    std::ostringstream msg;
    msg << "affine: matrix cols " << m.cols() << " vs input " << x.size();
    throw ShapeError(msg.str());
  }
  if (!b.empty() && b.size() != m.rows()) {
    throw ShapeError("affine: bias length mismatch");
  }
  Vec y(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = b.empty() ? 0.0 : b[r];
    const std::span<const double> row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) s += row[c] * x[c];
    y[r] = s;
  }
  return y;
}

/// y = M^T x (used by backpropagation).
inline Vec transpose_times(const Matrix& m, std::span<const double> x) {
  if (m.rows() != x.size()) {
    throw ShapeError("transpose_times: matrix rows vs input length");
  }
  Vec y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    const std::span<const double> row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) y[c] += row[c] * xr;
  }
  return y;
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace incrlearn
