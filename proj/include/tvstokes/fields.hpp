#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvs {

/// Thrown when two fields (or a field and a solver) disagree on shape.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a solve detects NaN/Inf in its input or its iterates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major H x W grid of doubles. Index (i, j) is row i, column j;
/// axis 1 runs along rows (i), axis 2 along columns (j).
class ScalarField {
 public:
  ScalarField() = default;

  ScalarField(std::size_t height, std::size_t width, double fill = 0.0)
      : height_(height), width_(width), values_(height * width, fill) {
    if (height < 2 || width < 2) {
      throw DimensionError("field must be at least 2x2, got " + std::to_string(height) + "x" +
                           std::to_string(width));
    }
  }

  ScalarField(std::size_t height, std::size_t width, std::vector<double> values)
      : ScalarField(height, width) {
    if (values.size() != height * width) {
      throw DimensionError("value count does not match " + std::to_string(height) + "x" +
                           std::to_string(width));
    }
    values_ = std::move(values);
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * width_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * width_ + j];
  }
  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  bool same_shape(const ScalarField& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  ScalarField& operator+=(const ScalarField& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
  }
  ScalarField& operator+=(double c) noexcept {
    for (double& v : values_) v += c;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator-(ScalarField a) { return a *= -1.0; }

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

  void require_same_shape(const ScalarField& o) const {
    if (!same_shape(o)) {
      throw DimensionError("shape mismatch: " + std::to_string(height_) + "x" +
                           std::to_string(width_) + " vs " + std::to_string(o.height_) + "x" +
                           std::to_string(o.width_));
    }
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Per-pixel 2-vector (c1, c2), stored as two planes.
struct VectorField2 {
  ScalarField c1;
  ScalarField c2;

  VectorField2() = default;
  VectorField2(std::size_t height, std::size_t width, double fill = 0.0)
      : c1(height, width, fill), c2(height, width, fill) {}
  VectorField2(ScalarField first, ScalarField second)
      : c1(std::move(first)), c2(std::move(second)) {
    c1.require_same_shape(c2);
  }

  std::size_t height() const noexcept { return c1.height(); }
  std::size_t width() const noexcept { return c1.width(); }
  std::size_t size() const noexcept { return c1.size(); }

  bool same_shape(const ScalarField& s) const noexcept { return c1.same_shape(s); }
  bool same_shape(const VectorField2& v) const noexcept { return c1.same_shape(v.c1); }
  bool all_finite() const noexcept { return c1.all_finite() && c2.all_finite(); }

  VectorField2& operator+=(const VectorField2& o) {
    c1 += o.c1;
    c2 += o.c2;
    return *this;
  }
  VectorField2& operator-=(const VectorField2& o) {
    c1 -= o.c1;
    c2 -= o.c2;
    return *this;
  }
  VectorField2& operator*=(double s) noexcept {
    c1 *= s;
    c2 *= s;
    return *this;
  }

  friend VectorField2 operator+(VectorField2 a, const VectorField2& b) { return a += b; }
  friend VectorField2 operator-(VectorField2 a, const VectorField2& b) { return a -= b; }
  friend VectorField2 operator*(double s, VectorField2 a) { return a *= s; }
  friend VectorField2 operator*(VectorField2 a, double s) { return a *= s; }
  friend VectorField2 operator-(VectorField2 a) { return a *= -1.0; }

  friend bool operator==(const VectorField2&, const VectorField2&) = default;
};

/// Per-pixel 2x2 matrix. Row r holds the gradient of vector component r,
/// so (m11, m12) = grad c1 and (m21, m22) = grad c2.
struct MatrixField2x2 {
  ScalarField m11;
  ScalarField m12;
  ScalarField m21;
  ScalarField m22;

  MatrixField2x2() = default;
  MatrixField2x2(std::size_t height, std::size_t width, double fill = 0.0)
      : m11(height, width, fill),
        m12(height, width, fill),
        m21(height, width, fill),
        m22(height, width, fill) {}

  std::size_t height() const noexcept { return m11.height(); }
  std::size_t width() const noexcept { return m11.width(); }
  std::size_t size() const noexcept { return m11.size(); }

  bool same_shape(const MatrixField2x2& o) const noexcept { return m11.same_shape(o.m11); }
  bool all_finite() const noexcept {
    return m11.all_finite() && m12.all_finite() && m21.all_finite() && m22.all_finite();
  }

  /// Frobenius norm of the matrix at flat index k.
  double frobenius_at(std::size_t k) const noexcept {
    return std::sqrt(m11[k] * m11[k] + m12[k] * m12[k] + m21[k] * m21[k] + m22[k] * m22[k]);
  }

  MatrixField2x2& operator+=(const MatrixField2x2& o) {
    m11 += o.m11;
    m12 += o.m12;
    m21 += o.m21;
    m22 += o.m22;
    return *this;
  }
  MatrixField2x2& operator*=(double s) noexcept {
    m11 *= s;
    m12 *= s;
    m21 *= s;
    m22 *= s;
    return *this;
  }

  friend bool operator==(const MatrixField2x2&, const MatrixField2x2&) = default;
};

}  // namespace tvs
