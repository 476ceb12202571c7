#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tvstokes/fields.hpp"
#include "tvstokes/grid_ops.hpp"

namespace tvs {

struct MetricConfig {
  double peak = 255.0;
};

inline double mean_squared_error(const ScalarField& u, const ScalarField& g) {
  u.require_same_shape(g);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u[k] - g[k];
    s += d * d;
  }
  return s / static_cast<double>(u.size());
}

/// 10 log10(peak^2 / MSE). Identical inputs give +infinity.
inline double psnr(const ScalarField& u, const ScalarField& g, const MetricConfig& cfg = {}) {
  if (!(cfg.peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  const double mse = mean_squared_error(u, g);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(cfg.peak * cfg.peak / mse);
}

/// Root-mean-square difference against the clean image.
inline double noise_level(const ScalarField& u, const ScalarField& g) {
  return std::sqrt(mean_squared_error(u, g));
}

namespace noise {

/// Output number `counter` of a SplitMix64 stream whose state starts at `seed`.
constexpr std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t counter) noexcept {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Top 53 bits mapped to (0, 1].
constexpr double to_unit_open0(std::uint64_t x) noexcept {
  return static_cast<double>((x >> 11) + 1) * 0x1.0p-53;
}

/// Standard normal for pixel k: Box-Muller (cosine branch) on outputs
/// 2k and 2k+1 of the seeded stream.
inline double standard_normal(std::uint64_t seed, std::uint64_t k) noexcept {
  const double u1 = to_unit_open0(splitmix64_at(seed, 2 * k));
  const double u2 = to_unit_open0(splitmix64_at(seed, 2 * k + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace noise

/// g + sigma Z, Z i.i.d. standard normal keyed by (seed, pixel index);
/// optionally clamped to [0, peak].
inline ScalarField add_gaussian_noise(const ScalarField& g, double sigma, std::uint64_t seed,
                                      bool clip, const MetricConfig& cfg = {}) {
  if (!(sigma > 0.0)) throw std::invalid_argument("noise sigma must be positive");
  ScalarField f = g;
  for (std::size_t k = 0; k < f.size(); ++k) {
    double v = g[k] + sigma * noise::standard_normal(seed, k);
    if (clip) v = std::clamp(v, 0.0, cfg.peak);
    f[k] = v;
  }
  return f;
}

/// Clean test image: a tilted linear ramp, a smooth bump, and a disk with a
/// sharp edge. Values stay inside [0, 255].
inline ScalarField synthetic_ramp_disk(std::size_t height = 64, std::size_t width = 64) {
  ScalarField g(height, width);
  const double ci = 0.5 * double(height - 1);
  const double cj = 0.5 * double(width - 1);
  const double radius = 0.25 * double(std::min(height, width));
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const double y = double(i) / double(height - 1);
      const double x = double(j) / double(width - 1);
      double v = 40.0 + 90.0 * x + 30.0 * y;
      const double by = y - 0.8;
      const double bx = x - 0.2;
      v += 30.0 * std::exp(-(bx * bx + by * by) / 0.02);
      const double di = double(i) - ci;
      const double dj = double(j) - cj;
      if (di * di + dj * dj <= radius * radius) v += 70.0;
      g(i, j) = v;
    }
  }
  return g;
}

struct NoisyPair {
  ScalarField clean;
  ScalarField noisy;
};

inline NoisyPair synthetic_pair(std::size_t size, double sigma, std::uint64_t seed, bool clip) {
  ScalarField clean = synthetic_ramp_disk(size, size);
  ScalarField noisy = add_gaussian_noise(clean, sigma, seed, clip);
  return {std::move(clean), std::move(noisy)};
}

}  // namespace tvs
