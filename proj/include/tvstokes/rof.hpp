#pragma once

// ROF denoising, min_u J(u) + (eta/2)||u - f||^2, by the semi-implicit dual
// fixed point
//
//   p <- (p + dt * grad(div p - eta f)) / (1 + dt * |grad(div p - eta f)|),
//   u  = f - div(p) / eta,
//
// started from p = 0. The update keeps |p| <= 1 per pixel whenever it holds
// before the step, so the dual variable stays feasible throughout.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "tvstokes/fields.hpp"
#include "tvstokes/grid_ops.hpp"
#include "tvstokes/poisson.hpp"

namespace tvs {

struct InnerSolveConfig {
  double step = 0.25;
  int max_iters = 2000;
  /// Stop once the largest per-pixel change of the dual variable drops below this.
  double rel_tol = 1e-5;

  void validate() const {
    if (!(step > 0.0 && step <= 0.25)) {
      throw std::invalid_argument("inner step must lie in (0, 0.25], got " + std::to_string(step));
    }
    if (max_iters < 1) throw std::invalid_argument("inner max_iters must be positive");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("inner rel_tol must be positive");
  }
};

struct InnerSolveStats {
  int iterations_used = 0;
  double final_dual_change = 0.0;
  double primal_energy = 0.0;
};

template <typename Field>
struct RofResult {
  Field u;
  InnerSolveStats stats;
};

namespace detail {

inline void check_fidelity(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw std::invalid_argument("fidelity eta must be positive and finite, got " +
                                std::to_string(eta));
  }
}

}  // namespace detail

/// J(u) + (eta/2)||u - f||^2.
inline double rof_energy(const ScalarField& u, const ScalarField& f, double eta) {
  const double d = l2_norm(u - f);
  return tv_energy(u) + 0.5 * eta * d * d;
}

inline RofResult<ScalarField> rof_denoise(const ScalarField& f, double eta,
                                          const InnerSolveConfig& cfg = {}) {
  detail::check_fidelity(eta);
  cfg.validate();
  if (!f.all_finite()) throw NumericalError("rof_denoise: input contains NaN or Inf");

  const std::size_t h = f.height();
  const std::size_t w = f.width();
  const std::size_t n = f.size();
  const double dt = cfg.step;

  ScalarField p1(h, w);
  ScalarField p2(h, w);
  ScalarField arg(h, w);  // div p - eta f
  InnerSolveStats stats;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const ScalarField div_p = divergence(VectorField2(p1, p2));
    for (std::size_t k = 0; k < n; ++k) arg[k] = div_p[k] - eta * f[k];

    double max_change = 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double g1 = (i + 1 < h) ? arg(i + 1, j) - arg(i, j) : 0.0;
        const double g2 = (j + 1 < w) ? arg(i, j + 1) - arg(i, j) : 0.0;
        const double denom = 1.0 + dt * std::hypot(g1, g2);
        const double q1 = (p1(i, j) + dt * g1) / denom;
        const double q2 = (p2(i, j) + dt * g2) / denom;
        max_change = std::max(max_change, std::hypot(q1 - p1(i, j), q2 - p2(i, j)));
        p1(i, j) = q1;
        p2(i, j) = q2;
      }
    }
    stats.iterations_used = it + 1;
    stats.final_dual_change = max_change;
    if (!std::isfinite(max_change)) throw NumericalError("rof_denoise: dual iterate diverged");
    if (max_change < cfg.rel_tol) break;
  }

  ScalarField u = f - (1.0 / eta) * divergence(VectorField2(std::move(p1), std::move(p2)));
  stats.primal_energy = rof_energy(u, f, eta);
  return {std::move(u), stats};
}

/// J(Pi tau) + (eta/2)||tau - tau0||^2.
inline double projected_vector_energy(const VectorField2& tau, const VectorField2& tau0,
                                      double eta, const PoissonSolver& solver) {
  const double d = l2_norm(tau - tau0);
  return tv_energy_vec(solver.project(tau)) + 0.5 * eta * d * d;
}

/// Approximate minimizer of J(Pi tau) + (eta/2)||tau - tau0||^2.
///
/// Pi is an orthogonal projection, so the objective splits: the gradient
/// part (I - Pi) tau0 passes through unchanged and the divergence-free part
/// is a vector ROF problem restricted to range(Pi), solved with a 2x2
/// matrix dual. Returns tau = tau0 - Pi(mat_divergence(p)) / eta.
inline RofResult<VectorField2> rof_vector_projected(const VectorField2& tau0, double eta,
                                                    const PoissonSolver& solver,
                                                    const InnerSolveConfig& cfg = {}) {
  detail::check_fidelity(eta);
  cfg.validate();
  solver.require_shape(tau0.height(), tau0.width());
  if (!tau0.all_finite()) throw NumericalError("rof_vector_projected: input contains NaN or Inf");

  const std::size_t n = tau0.size();
  const double dt = cfg.step;
  const VectorField2 target = eta * solver.project(tau0);

  MatrixField2x2 p(tau0.height(), tau0.width());
  InnerSolveStats stats;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const VectorField2 arg = solver.project(mat_divergence(p)) - target;
    const MatrixField2x2 g = vec_gradient(arg);

    double max_change = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double denom = 1.0 + dt * g.frobenius_at(k);
      const double q11 = (p.m11[k] + dt * g.m11[k]) / denom;
      const double q12 = (p.m12[k] + dt * g.m12[k]) / denom;
      const double q21 = (p.m21[k] + dt * g.m21[k]) / denom;
      const double q22 = (p.m22[k] + dt * g.m22[k]) / denom;
      const double d11 = q11 - p.m11[k];
      const double d12 = q12 - p.m12[k];
      const double d21 = q21 - p.m21[k];
      const double d22 = q22 - p.m22[k];
      max_change = std::max(max_change, std::sqrt(d11 * d11 + d12 * d12 + d21 * d21 + d22 * d22));
      p.m11[k] = q11;
      p.m12[k] = q12;
      p.m21[k] = q21;
      p.m22[k] = q22;
    }
    stats.iterations_used = it + 1;
    stats.final_dual_change = max_change;
    if (!std::isfinite(max_change)) {
      throw NumericalError("rof_vector_projected: dual iterate diverged");
    }
    if (max_change < cfg.rel_tol) break;
  }

  VectorField2 tau = tau0 - (1.0 / eta) * solver.project(mat_divergence(p));
  stats.primal_energy = projected_vector_energy(tau, tau0, eta, solver);
  return {std::move(tau), stats};
}

}  // namespace tvs
