#pragma once

// Pseudoinverse of the discrete Neumann Laplacian and the orthogonal
// projection onto divergence-free fields, Pi = I - grad lap^+ div.
//
// divergence(gradient(.)) with the stencils in grid_ops is the 5-point
// Laplacian with reflecting boundaries, which the type-II DCT diagonalizes
// exactly: eigenvalue -(2 - 2 cos(pi k / H)) - (2 - 2 cos(pi l / W)).
// The (0, 0) mode is the constant null space and is dropped.

#include <fftw3.h>

#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "tvstokes/fields.hpp"
#include "tvstokes/grid_ops.hpp"

namespace tvs {

namespace detail {

// Planner calls are not thread safe in FFTW; execution on fresh arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class DctPlans {
 public:
  DctPlans(std::size_t height, std::size_t width) {
    std::vector<double> in(height * width);
    std::vector<double> out(height * width);
    const int h = static_cast<int>(height);
    const int w = static_cast<int>(width);
    std::lock_guard lock(fftw_planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_r2r_2d(h, w, in.data(), out.data(), FFTW_REDFT10, FFTW_REDFT10, flags);
    inverse_ = fftw_plan_r2r_2d(h, w, in.data(), out.data(), FFTW_REDFT01, FFTW_REDFT01, flags);
  }
  ~DctPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  DctPlans(const DctPlans&) = delete;
  DctPlans& operator=(const DctPlans&) = delete;

  // Out-of-place; both calls may clobber `in`.
  void forward(double* in, double* out) const { fftw_execute_r2r(forward_, in, out); }
  void inverse(double* in, double* out) const { fftw_execute_r2r(inverse_, in, out); }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

}  // namespace detail

class PoissonSolver {
 public:
  PoissonSolver(std::size_t height, std::size_t width)
      : height_(height),
        width_(width),
        plans_(make_plans(height, width)),
        inverse_symbol_(height * width, 0.0) {
    // Unnormalized REDFT10 followed by REDFT01 scales by 4HW.
    const double norm = 4.0 * static_cast<double>(height * width);
    for (std::size_t k = 0; k < height; ++k) {
      const double ek = 2.0 - 2.0 * std::cos(std::numbers::pi * double(k) / double(height));
      for (std::size_t l = 0; l < width; ++l) {
        const double el = 2.0 - 2.0 * std::cos(std::numbers::pi * double(l) / double(width));
        const double eig = -(ek + el);
        inverse_symbol_[k * width + l] = (k == 0 && l == 0) ? 0.0 : 1.0 / (eig * norm);
      }
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  /// Eigenvalue of divergence∘gradient for cosine mode (k, l).
  double eigenvalue(std::size_t k, std::size_t l) const {
    const double ek = 2.0 - 2.0 * std::cos(std::numbers::pi * double(k) / double(height_));
    const double el = 2.0 - 2.0 * std::cos(std::numbers::pi * double(l) / double(width_));
    return -(ek + el);
  }

  void require_shape(std::size_t h, std::size_t w) const {
    if (h != height_ || w != width_) {
      throw DimensionError("PoissonSolver is " + std::to_string(height_) + "x" +
                           std::to_string(width_) + ", field is " + std::to_string(h) + "x" +
                           std::to_string(w));
    }
  }

  /// Zero-mean lambda with laplacian(lambda) = rhs - mean(rhs).
  ScalarField solve(const ScalarField& rhs) const {
    require_shape(rhs.height(), rhs.width());
    std::vector<double> in(rhs.begin(), rhs.end());
    std::vector<double> coef(in.size());
    plans_->forward(in.data(), coef.data());
    for (std::size_t k = 0; k < coef.size(); ++k) coef[k] *= inverse_symbol_[k];
    ScalarField out(height_, width_);
    plans_->inverse(coef.data(), out.data());
    return out;
  }

  /// Pi v = v - grad(lap^+ div v).
  VectorField2 project(const VectorField2& v) const {
    require_shape(v.height(), v.width());
    return v - gradient(solve(divergence(v)));
  }

 private:
  static std::shared_ptr<const detail::DctPlans> make_plans(std::size_t h, std::size_t w) {
    if (h < 2 || w < 2) throw DimensionError("PoissonSolver needs at least 2x2");
    return std::make_shared<const detail::DctPlans>(h, w);
  }

  std::size_t height_;
  std::size_t width_;
  std::shared_ptr<const detail::DctPlans> plans_;
  std::vector<double> inverse_symbol_;
};

inline ScalarField solve_neumann_poisson(const PoissonSolver& solver, const ScalarField& rhs) {
  return solver.solve(rhs);
}

inline VectorField2 project_div_free(const PoissonSolver& solver, const VectorField2& v) {
  return solver.project(v);
}

}  // namespace tvs
