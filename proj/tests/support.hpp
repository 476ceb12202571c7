#pragma once

#include <cstdint>
#include <random>

#include "tvstokes/fields.hpp"

namespace testing_support {

inline tvs::ScalarField random_field(std::size_t h, std::size_t w, std::uint64_t seed,
                                     double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  tvs::ScalarField f(h, w);
  for (auto& v : f) v = dist(rng);
  return f;
}

inline tvs::VectorField2 random_vector(std::size_t h, std::size_t w, std::uint64_t seed,
                                       double lo = -1.0, double hi = 1.0) {
  return tvs::VectorField2(random_field(h, w, seed, lo, hi), random_field(h, w, seed + 7919, lo, hi));
}

inline tvs::MatrixField2x2 random_matrix(std::size_t h, std::size_t w, std::uint64_t seed) {
  tvs::MatrixField2x2 m(h, w);
  m.m11 = random_field(h, w, seed);
  m.m12 = random_field(h, w, seed + 1);
  m.m21 = random_field(h, w, seed + 2);
  m.m22 = random_field(h, w, seed + 3);
  return m;
}

inline double max_abs_diff(const tvs::ScalarField& a, const tvs::ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline double max_abs_diff(const tvs::VectorField2& a, const tvs::VectorField2& b) {
  return std::max(max_abs_diff(a.c1, b.c1), max_abs_diff(a.c2, b.c2));
}

}  // namespace testing_support
