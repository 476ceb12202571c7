#pragma once

// Two-step TV-Stokes denoising.
//
//   step 1: tau = argmin J(Pi tau) + (eta1/2)||tau - grad_perp f||^2
//   step 2: u   = argmin J(u) - alpha <grad u, n> + (eta2/2)||u - f||^2,
//           n the unit normal recovered from tau.
//
// Since <grad u, n> = -<u, div n>, completing the square turns step 2 into
// plain ROF on the shifted data f - (alpha/eta2) div n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include "tvstokes/fidelity.hpp"
#include "tvstokes/fields.hpp"
#include "tvstokes/grid_ops.hpp"
#include "tvstokes/poisson.hpp"
#include "tvstokes/rof.hpp"

namespace tvs {

struct TvsParams {
  /// Fidelities; when unset they follow eta = beta / gamma.
  std::optional<double> eta1;
  std::optional<double> eta2;
  double beta1 = 8.0;
  double beta2 = 2.5;
  double alpha = 0.9;
  /// Normalization floor for the unit normal; unset means the data-scaled default.
  std::optional<double> eps;
  InnerSolveConfig inner;

  void validate() const;
};

inline void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

inline void TvsParams::validate() const {
  require_alpha(alpha);
  if (eps && !(*eps > 0.0)) throw std::invalid_argument("eps must be positive");
  inner.validate();
}

/// Inverse of grad_perp on the staggered grid: rotating tau back by -90
/// degrees with a one-cell shift, so that rotate_back(grad_perp(f)) equals
/// gradient(f) exactly.
inline VectorField2 rotate_back(const VectorField2& tau) {
  const std::size_t h = tau.height();
  const std::size_t w = tau.width();
  VectorField2 n(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      n.c1(i, j) = (i + 1 < h) ? tau.c2(i + 1, j) : 0.0;
      n.c2(i, j) = (j + 1 < w) ? -tau.c1(i, j + 1) : 0.0;
    }
  }
  return n;
}

/// Unit normal n ~ grad u / |grad u| recovered from a tangent field, with
/// |.| floored at eps.
inline VectorField2 matching_normal(const VectorField2& tau, std::optional<double> eps = {}) {
  const VectorField2 n = rotate_back(tau);
  const double floor = eps ? *eps : default_perp_floor(tau);
  if (!(floor > 0.0)) throw std::invalid_argument("normal floor eps must be positive");
  VectorField2 out(n.height(), n.width());
  for (std::size_t k = 0; k < n.size(); ++k) {
    const double m = std::max(std::hypot(n.c1[k], n.c2[k]), floor);
    out.c1[k] = n.c1[k] / m;
    out.c2[k] = n.c2[k] / m;
  }
  return out;
}

/// J(u) - alpha <grad u, n> + (eta/2)||u - f||^2, evaluated directly.
inline double orientation_energy(const ScalarField& u, const ScalarField& f,
                                 const VectorField2& n, double alpha, double eta) {
  const double d = l2_norm(u - f);
  return tv_energy(u) - alpha * inner(gradient(u), n) + 0.5 * eta * d * d;
}

inline VectorField2 smooth_tangent_field(const ScalarField& f, double eta1,
                                         const PoissonSolver& solver,
                                         const InnerSolveConfig& cfg = {}) {
  return rof_vector_projected(grad_perp(f), eta1, solver, cfg).u;
}

/// Shifted data f - (alpha/eta) div n of the completed-square form.
inline ScalarField matching_data(const ScalarField& f, const VectorField2& n, double alpha,
                                 double eta) {
  if (alpha == 0.0) return f;
  return f - (alpha / eta) * divergence(n);
}

inline RofResult<ScalarField> match_surface_solve(const ScalarField& f, const VectorField2& tau,
                                                  double alpha, double eta2,
                                                  std::optional<double> eps,
                                                  const InnerSolveConfig& cfg = {}) {
  require_alpha(alpha);
  detail::check_fidelity(eta2);
  tau.c1.require_same_shape(f);
  if (alpha == 0.0) return rof_denoise(f, eta2, cfg);
  return rof_denoise(matching_data(f, matching_normal(tau, eps), alpha, eta2), eta2, cfg);
}

inline ScalarField match_surface(const ScalarField& f, const VectorField2& tau, double alpha,
                                 double eta2, std::optional<double> eps = {},
                                 const InnerSolveConfig& cfg = {}) {
  return match_surface_solve(f, tau, alpha, eta2, eps, cfg).u;
}

struct TvsResult {
  ScalarField u;
  VectorField2 tau;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

/// eta = beta / gamma for the tangent field grad_perp(f); nullopt if f is constant.
inline std::optional<double> default_eta1(const ScalarField& f, double beta1) {
  require_schedule_beta(beta1);
  const auto g = fidelity_gamma(grad_perp(f));
  if (!g) return std::nullopt;
  return beta1 / *g;
}

inline std::optional<double> default_eta2(const ScalarField& f, double beta2) {
  require_schedule_beta(beta2);
  const auto g = fidelity_gamma(f);
  if (!g) return std::nullopt;
  return beta2 / *g;
}

inline TvsResult tv_stokes_denoise(const ScalarField& f, const TvsParams& params,
                                   const PoissonSolver& solver) {
  params.validate();
  solver.require_shape(f.height(), f.width());
  const std::optional<double> eta1 = params.eta1 ? params.eta1 : default_eta1(f, params.beta1);
  const std::optional<double> eta2 = params.eta2 ? params.eta2 : default_eta2(f, params.beta2);
  if (!eta1 || !eta2) {
    // Constant (or zero) image: nothing to smooth, both steps are identities.
    return {f, VectorField2(f.height(), f.width()), eta1.value_or(0.0), eta2.value_or(0.0)};
  }
  VectorField2 tau = smooth_tangent_field(f, *eta1, solver, params.inner);
  ScalarField u = match_surface(f, tau, params.alpha, *eta2, params.eps, params.inner);
  return {std::move(u), std::move(tau), *eta1, *eta2};
}

}  // namespace tvs
