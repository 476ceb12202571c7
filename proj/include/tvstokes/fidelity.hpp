#pragma once

// Adaptive fidelity rule: eta = beta / gamma with gamma = ||r||_inf * h / 2
// and h = 1. A lower bound on the G-norm of r, so beta > 1 keeps the ROF
// decomposition of a nonzero residual nontrivial.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "tvstokes/grid_ops.hpp"

namespace tvs {

/// Half the sup norm of the residual; nullopt when the residual is
/// identically zero (the iteration has converged and gamma is undefined).
inline std::optional<double> fidelity_gamma(const ScalarField& r_ex) {
  const double m = linf_norm(r_ex);
  if (m == 0.0) return std::nullopt;
  return m / 2.0;
}

/// Vector analog: half the largest per-pixel Euclidean magnitude.
inline std::optional<double> fidelity_gamma(const VectorField2& r_ex) {
  const double m = linf_norm(r_ex);
  if (m == 0.0) return std::nullopt;
  return m / 2.0;
}

inline void require_schedule_beta(double beta) {
  if (!(beta > 1.0)) {
    throw std::invalid_argument("beta must be greater than 1, got " + std::to_string(beta));
  }
}

/// max(beta / gamma(r_ex), eta_prev); nullopt when r_ex is zero.
template <typename Field>
std::optional<double> fidelity_schedule(const Field& r_ex, double beta, double eta_prev) {
  require_schedule_beta(beta);
  if (eta_prev < 0.0) throw std::invalid_argument("previous eta must be nonnegative");
  const auto gamma = fidelity_gamma(r_ex);
  if (!gamma) return std::nullopt;
  return std::max(beta / *gamma, eta_prev);
}

}  // namespace tvs
