#pragma once

// Finite-difference operators on the pixel grid (spacing h = 1).
//
// gradient:   forward differences, zero at the last row/column (Neumann).
// divergence: backward differences with boundary truncation; the exact
//             negative adjoint of gradient, <grad u, v> = -<u, div v>.
// grad_perp:  rotated gradient built from backward differences, so that
//             divergence(grad_perp(u)) vanishes at every interior pixel.

#include <cmath>
#include <cstddef>

#include "tvstokes/fields.hpp"

namespace tvs {

inline VectorField2 gradient(const ScalarField& u) {
  const std::size_t h = u.height();
  const std::size_t w = u.width();
  VectorField2 g(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      g.c1(i, j) = (i + 1 < h) ? u(i + 1, j) - u(i, j) : 0.0;
      g.c2(i, j) = (j + 1 < w) ? u(i, j + 1) - u(i, j) : 0.0;
    }
  }
  return g;
}

inline ScalarField divergence(const VectorField2& v) {
  const std::size_t h = v.height();
  const std::size_t w = v.width();
  ScalarField d(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double a = 0.0;
      if (i + 1 < h) a += v.c1(i, j);
      if (i > 0) a -= v.c1(i - 1, j);
      if (j + 1 < w) a += v.c2(i, j);
      if (j > 0) a -= v.c2(i, j - 1);
      d(i, j) = a;
    }
  }
  return d;
}

/// Row r of the result is gradient(component r).
inline MatrixField2x2 vec_gradient(const VectorField2& v) {
  MatrixField2x2 m;
  auto g1 = gradient(v.c1);
  auto g2 = gradient(v.c2);
  m.m11 = std::move(g1.c1);
  m.m12 = std::move(g1.c2);
  m.m21 = std::move(g2.c1);
  m.m22 = std::move(g2.c2);
  return m;
}

/// Rowwise divergence; exact negative adjoint of vec_gradient.
inline VectorField2 mat_divergence(const MatrixField2x2& p) {
  return VectorField2(divergence(VectorField2(p.m11, p.m12)),
                      divergence(VectorField2(p.m21, p.m22)));
}

/// Discrete Neumann Laplacian, divergence(gradient(u)).
inline ScalarField laplacian(const ScalarField& u) { return divergence(gradient(u)); }

/// 90 degree rotation (c1, c2) -> (-c2, c1).
inline VectorField2 perp(const VectorField2& v) { return VectorField2(-v.c2, v.c1); }

/// (-d2 u, d1 u) with backward differences; zero on the first column
/// (component 1) and the first row (component 2).
inline VectorField2 grad_perp(const ScalarField& u) {
  const std::size_t h = u.height();
  const std::size_t w = u.width();
  VectorField2 t(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      t.c1(i, j) = (j > 0) ? -(u(i, j) - u(i, j - 1)) : 0.0;
      t.c2(i, j) = (i > 0) ? u(i, j) - u(i - 1, j) : 0.0;
    }
  }
  return t;
}

/// max per-pixel Euclidean magnitude.
inline double linf_norm(const VectorField2& v) {
  double m = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) m = std::max(m, std::hypot(v.c1[k], v.c2[k]));
  return m;
}

inline double linf_norm(const ScalarField& u) {
  double m = 0.0;
  for (double x : u) m = std::max(m, std::abs(x));
  return m;
}

/// Default normalization floor: 1e-8 * (1 + max magnitude of v).
inline double default_perp_floor(const VectorField2& v) { return 1e-8 * (1.0 + linf_norm(v)); }

/// perp(v) / max(|v|, eps) per pixel; output magnitude never exceeds 1.
inline VectorField2 normalized_perp(const VectorField2& v, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("normalized_perp: eps must be positive");
  VectorField2 n(v.height(), v.width());
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double scale = 1.0 / std::max(std::hypot(v.c1[k], v.c2[k]), eps);
    n.c1[k] = -v.c2[k] * scale;
    n.c2[k] = v.c1[k] * scale;
  }
  return n;
}

inline VectorField2 normalized_perp(const VectorField2& v) {
  return normalized_perp(v, default_perp_floor(v));
}

inline double inner(const ScalarField& a, const ScalarField& b) {
  a.require_same_shape(b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double inner(const VectorField2& a, const VectorField2& b) {
  return inner(a.c1, b.c1) + inner(a.c2, b.c2);
}

inline double inner(const MatrixField2x2& a, const MatrixField2x2& b) {
  return inner(a.m11, b.m11) + inner(a.m12, b.m12) + inner(a.m21, b.m21) + inner(a.m22, b.m22);
}

inline double l2_norm(const ScalarField& u) { return std::sqrt(inner(u, u)); }
inline double l2_norm(const VectorField2& v) { return std::sqrt(inner(v, v)); }
inline double l2_norm(const MatrixField2x2& m) { return std::sqrt(inner(m, m)); }

/// max per-pixel Frobenius norm.
inline double linf_norm(const MatrixField2x2& m) {
  double r = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) r = std::max(r, m.frobenius_at(k));
  return r;
}

/// Isotropic total variation, sum of |grad u| over pixels.
inline double tv_energy(const ScalarField& u) {
  const auto g = gradient(u);
  double s = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) s += std::hypot(g.c1[k], g.c2[k]);
  return s;
}

/// Sum of per-pixel Frobenius norms of vec_gradient(v).
inline double tv_energy_vec(const VectorField2& v) {
  const auto m = vec_gradient(v);
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += m.frobenius_at(k);
  return s;
}

inline double mean(const ScalarField& u) {
  double s = 0.0;
  for (double x : u) s += x;
  return s / static_cast<double>(u.size());
}

}  // namespace tvs
