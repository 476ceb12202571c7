#pragma once

// Outer iterative-regularization drivers.
//
//   osher_iterate       add the removed part back to the data (v accumulation)
//   richardson_step1    Richardson iteration on the tangent-field smoothing
//   richardson_step2    Richardson iteration on the image reconstruction,
//                       with the adaptive fidelity eta^k = max(beta/gamma, eta^{k-1})
//   richardson_both     step-1 loop followed by the step-2 loop
//
// Every Richardson driver keeps an exact residual r_ex and an accumulator
// (tau or u) that telescope: accumulator + r_ex equals the initial residual.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tvstokes/fidelity.hpp"
#include "tvstokes/fields.hpp"
#include "tvstokes/grid_ops.hpp"
#include "tvstokes/metrics.hpp"
#include "tvstokes/poisson.hpp"
#include "tvstokes/rof.hpp"
#include "tvstokes/two_step.hpp"

namespace tvs {

/// Run exactly `count` outer iterations (this cap replaces max_outer).
struct FixedCount {
  int count = 50;
};

/// Stop once ||r^k|| <= theta ||r^1||.
struct ResidualFloor {
  double theta = 1e-3;
};

/// Stop once ||r_ex^k|| <= sigma_hat * sqrt(pixel count).
struct Discrepancy {
  double sigma_hat = 0.0;
};

using StopRule = std::variant<FixedCount, ResidualFloor, Discrepancy>;

struct OuterConfig {
  double beta1 = 8.0;
  double beta2 = 2.5;
  double alpha = 0.9;
  int max_outer = 50;
  StopRule stop = FixedCount{50};
  /// Stop rule for the tangent-field loop of richardson_both; defaults to `stop`.
  std::optional<StopRule> stop_phase1;
  InnerSolveConfig inner;
  std::optional<double> eps;
  /// Evaluate u^k after every tangent-field iteration so the image curves
  /// are available for richardson_step1 (costs one scalar ROF per iteration).
  bool track_step1_image = true;
  MetricConfig metric;

  void validate() const {
    require_schedule_beta(beta1);
    require_schedule_beta(beta2);
    require_alpha(alpha);
    if (max_outer < 1) throw std::invalid_argument("max_outer must be positive");
    if (eps && !(*eps > 0.0)) throw std::invalid_argument("eps must be positive");
    validate_rule(stop);
    if (stop_phase1) validate_rule(*stop_phase1);
    inner.validate();
  }

  static void validate_rule(const StopRule& rule) {
    if (const auto* fc = std::get_if<FixedCount>(&rule); fc && fc->count < 1) {
      throw std::invalid_argument("fixed_count needs a positive count");
    }
    if (const auto* rf = std::get_if<ResidualFloor>(&rule); rf && !(rf->theta >= 0.0)) {
      throw std::invalid_argument("residual_floor theta must be nonnegative");
    }
    if (const auto* dc = std::get_if<Discrepancy>(&rule); dc && !(dc->sigma_hat >= 0.0)) {
      throw std::invalid_argument("discrepancy sigma_hat must be nonnegative");
    }
  }
};

struct IterationRecord {
  int k = 0;
  double eta = 0.0;
  double r_norm = 0.0;
  double rex_norm = 0.0;
  double u_minus_f = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> u_minus_g;
  std::optional<double> psnr;
  /// D^{s^k}(0, r^k) = <s^k, r^k> - J(r^k), s^k the subgradient of J at r^k
/// produced by the solve (eta r_ex^k, shifted by -alpha div n in the image loop).
  std::optional<double> bregman;
  double seconds = 0.0;
};

struct SolveReport {
  std::vector<IterationRecord> records;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  /// 1-based iteration minimizing ||u^k - g||, if the clean image was supplied.
  std::optional<int> best_k() const {
    std::optional<int> best;
    double best_v = std::numeric_limits<double>::infinity();
    for (const auto& r : records) {
      if (r.u_minus_g && *r.u_minus_g < best_v) {
        best_v = *r.u_minus_g;
        best = r.k;
      }
    }
    return best;
  }
};

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace detail

/// One row per outer iteration; empty cells for absent values. The seconds
/// column is left empty unless `with_timing`, so identical runs give
/// identical bytes.
inline std::string report_csv(const SolveReport& report, bool with_timing = false) {
  std::string out = "k,eta,r_norm,rex_norm,u_minus_f,u_minus_g,psnr,bregman,seconds\n";
  auto opt = [&out](const std::optional<double>& v) {
    if (v) detail::append_number(out, *v);
  };
  for (const auto& r : report.records) {
    out += std::to_string(r.k);
    out += ',';
    detail::append_number(out, r.eta);
    out += ',';
    detail::append_number(out, r.r_norm);
    out += ',';
    detail::append_number(out, r.rex_norm);
    out += ',';
    if (std::isfinite(r.u_minus_f)) detail::append_number(out, r.u_minus_f);
    out += ',';
    opt(r.u_minus_g);
    out += ',';
    opt(r.psnr);
    out += ',';
    opt(r.bregman);
    out += ',';
    if (with_timing) detail::append_number(out, r.seconds);
    out += '\n';
  }
  return out;
}

inline void write_report_csv(std::ostream& os, const SolveReport& report, bool with_timing = false) {
  os << report_csv(report, with_timing);
}

/// Callback payloads exposing the live iterates (valid only during the call).
struct ScalarIterate {
  int k;
  double eta;
  const ScalarField& r;      // increment added to u this iteration
  const ScalarField& r_ex;   // f - u^k
  const ScalarField& u;      // u^k
  const ScalarField* v_prev = nullptr;  // osher only: v^{k-1}
  const ScalarField* v_next = nullptr;  // osher only: v^k
};

struct VectorIterate {
  int k;
  double eta;
  const VectorField2& r;
  const VectorField2& r_ex;
  const VectorField2& tau;
};

struct Observers {
  std::function<void(const ScalarIterate&)> on_scalar;
  std::function<void(const VectorIterate&)> on_vector;
};

struct ImageResult {
  ScalarField u;
  SolveReport report;
};

struct Step1Result {
  ScalarField u;
  VectorField2 tau;
  SolveReport report;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

struct BothResult {
  ScalarField u;
  VectorField2 tau;
  SolveReport phase1;  // tangent-field loop (no image curves)
  SolveReport report;  // image loop
};

/// <s, r> - J(r) with s = eta r_ex: the Bregman distance from r to 0 under
/// the subgradient s. J is positively one-homogeneous, so this vanishes when
/// s is an exact subgradient at r and is otherwise <= 0 for feasible duals.
inline double bregman_to_zero(const ScalarField& r, const ScalarField& s, double j_at_r) {
  return inner(s, r) - j_at_r;
}

inline double bregman_to_zero(const VectorField2& r, const VectorField2& s, double j_at_r) {
  return inner(s, r) - j_at_r;
}

namespace detail {

inline int iteration_cap(const StopRule& rule, int max_outer) {
  if (const auto* fc = std::get_if<FixedCount>(&rule)) return fc->count;
  return max_outer;
}

/// True when the rule is satisfied after iteration k.
inline bool stop_now(const StopRule& rule, int k, double r_norm, double r1_norm, double rex_norm,
                     std::size_t pixels) {
  if (const auto* fc = std::get_if<FixedCount>(&rule)) return k >= fc->count;
  if (const auto* rf = std::get_if<ResidualFloor>(&rule)) return r_norm <= rf->theta * r1_norm;
  const auto& dc = std::get<Discrepancy>(rule);
  return rex_norm <= dc.sigma_hat * std::sqrt(static_cast<double>(pixels));
}

inline void fill_image_metrics(IterationRecord& rec, const ScalarField& u, const ScalarField& f,
                               const ScalarField* clean, const MetricConfig& metric) {
  rec.u_minus_f = l2_norm(u - f);
  if (clean) {
    rec.u_minus_g = l2_norm(u - *clean);
    rec.psnr = psnr(u, *clean, metric);
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline void require_finite(const ScalarField& f, const char* who) {
  if (!f.all_finite()) throw NumericalError(std::string(who) + ": input contains NaN or Inf");
}

inline void require_clean_shape(const ScalarField& f, const ScalarField* clean) {
  if (clean) f.require_same_shape(*clean);
}

// Tangent-field Richardson loop shared by step 1 and the first phase of
// the separated scheme. Returns tau; appends one record per iteration.
struct TangentLoopOutput {
  VectorField2 tau;
  double eta1 = 0.0;
};

inline TangentLoopOutput tangent_loop(const ScalarField& f, const OuterConfig& cfg,
                                      const StopRule& rule, const PoissonSolver& solver,
                                      double eta1, SolveReport& report,
                                      const std::function<void(IterationRecord&, const VectorField2&)>&
                                          per_iteration_image,
                                      const Observers& obs) {
  const std::size_t h = f.height();
  const std::size_t w = f.width();
  VectorField2 r_ex = grad_perp(f);
  VectorField2 tau(h, w);
  const int cap = iteration_cap(rule, cfg.max_outer);
  double r1_norm = 0.0;

  for (int k = 1; k <= cap; ++k) {
    if (linf_norm(r_ex) == 0.0) break;
    const auto t0 = std::chrono::steady_clock::now();
    auto solved = rof_vector_projected(r_ex, eta1, solver, cfg.inner);
    const VectorField2& r = solved.u;
    r_ex -= r;
    tau += r;

    IterationRecord rec;
    rec.k = k;
    rec.eta = eta1;
    rec.r_norm = l2_norm(r);
    rec.rex_norm = l2_norm(r_ex);
    rec.bregman = bregman_to_zero(r, eta1 * r_ex, tv_energy_vec(solver.project(r)));
    if (k == 1) r1_norm = rec.r_norm;
    if (per_iteration_image) per_iteration_image(rec, tau);
    rec.seconds = seconds_since(t0);
    report.records.push_back(rec);
    if (obs.on_vector) obs.on_vector(VectorIterate{k, eta1, r, r_ex, tau});
    if (!tau.all_finite()) throw NumericalError("tangent-field iteration produced NaN or Inf");
    if (stop_now(rule, k, rec.r_norm, r1_norm, rec.rex_norm, f.size())) break;
  }
  return {std::move(tau), eta1};
}

// Image Richardson loop with the adaptive fidelity schedule. `normal` is the
// fixed unit normal from the tangent field (ignored when alpha == 0).
inline ScalarField image_loop(const ScalarField& f, const OuterConfig& cfg, const StopRule& rule,
                              const VectorField2& normal, const ScalarField* clean,
                              SolveReport& report, const Observers& obs) {
  const std::size_t h = f.height();
  const std::size_t w = f.width();
  ScalarField r_ex = f;
  ScalarField u(h, w);
  const ScalarField div_n = divergence(normal);
  const int cap = iteration_cap(rule, cfg.max_outer);
  double eta = 0.0;
  double r1_norm = 0.0;

  for (int k = 1; k <= cap; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto next = fidelity_schedule(r_ex, cfg.beta2, eta);
    if (!next) break;  // zero residual: converged
    eta = *next;
    ScalarField data = (cfg.alpha == 0.0) ? r_ex : r_ex - (cfg.alpha / eta) * div_n;
    auto solved = rof_denoise(data, eta, cfg.inner);
    const ScalarField& r = solved.u;
    r_ex -= r;
    u += r;

    IterationRecord rec;
    rec.k = k;
    rec.eta = eta;
    rec.r_norm = l2_norm(r);
    rec.rex_norm = l2_norm(r_ex);
    // The optimality condition of the shifted ROF solve gives the
    // subgradient eta r_ex - alpha div n of J at r.
    const ScalarField s = (cfg.alpha == 0.0) ? eta * r_ex : eta * r_ex - cfg.alpha * div_n;
    rec.bregman = bregman_to_zero(r, s, tv_energy(r));
    if (k == 1) r1_norm = rec.r_norm;
    fill_image_metrics(rec, u, f, clean, cfg.metric);
    rec.seconds = seconds_since(t0);
    report.records.push_back(rec);
    if (obs.on_scalar) obs.on_scalar(ScalarIterate{k, eta, r, r_ex, u});
    if (!u.all_finite()) throw NumericalError("image iteration produced NaN or Inf");
    if (stop_now(rule, k, rec.r_norm, r1_norm, rec.rex_norm, f.size())) break;
  }
  // Constant-zero data never enters the loop; u = 0 = f is already correct.
  if (report.records.empty()) return f;
  return u;
}

}  // namespace detail

/// Iterative regularization by adding back the removed part:
/// u = ROF(f + v^k, eta), v^{k+1} = f + v^k - u, v^0 = 0.
inline ImageResult osher_iterate(const ScalarField& f, double eta, const OuterConfig& cfg,
                                 const ScalarField* clean = nullptr, const Observers& obs = {}) {
  detail::check_fidelity(eta);
  cfg.validate();
  detail::require_finite(f, "osher_iterate");
  detail::require_clean_shape(f, clean);

  const std::size_t h = f.height();
  const std::size_t w = f.width();
  ScalarField v(h, w);
  ScalarField u(h, w);
  SolveReport report;
  const int cap = detail::iteration_cap(cfg.stop, cfg.max_outer);
  double r1_norm = 0.0;

  for (int k = 1; k <= cap; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    auto solved = rof_denoise(f + v, eta, cfg.inner);
    ScalarField v_next = f + v - solved.u;
    const ScalarField r = solved.u - u;
    u = std::move(solved.u);
    const ScalarField r_ex = f - u;

    IterationRecord rec;
    rec.k = k;
    rec.eta = eta;
    rec.r_norm = l2_norm(r);
    rec.rex_norm = l2_norm(r_ex);
    // eta v^{k+1} is the subgradient of J at u^k.
    rec.bregman = bregman_to_zero(u, eta * v_next, tv_energy(u));
    if (k == 1) r1_norm = rec.r_norm;
    detail::fill_image_metrics(rec, u, f, clean, cfg.metric);
    rec.seconds = detail::seconds_since(t0);
    report.records.push_back(rec);
    if (obs.on_scalar) obs.on_scalar(ScalarIterate{k, eta, r, r_ex, u, &v, &v_next});
    v = std::move(v_next);
    if (!u.all_finite()) throw NumericalError("osher_iterate produced NaN or Inf");
    if (detail::stop_now(cfg.stop, k, rec.r_norm, r1_norm, rec.rex_norm, f.size())) break;
    if (linf_norm(r_ex) == 0.0) break;
  }
  return {std::move(u), std::move(report)};
}

/// Richardson iteration on the tangent-field step, then one matching step.
/// eta1 = beta1 / gamma(grad_perp f) is held fixed over the loop; the
/// matching step uses eta2 = beta2 / gamma(f).
inline Step1Result richardson_step1(const ScalarField& f, const OuterConfig& cfg,
                                    const PoissonSolver& solver,
                                    const ScalarField* clean = nullptr,
                                    const Observers& obs = {}) {
  cfg.validate();
  detail::require_finite(f, "richardson_step1");
  detail::require_clean_shape(f, clean);
  solver.require_shape(f.height(), f.width());

  const auto eta1 = default_eta1(f, cfg.beta1);
  const auto eta2 = default_eta2(f, cfg.beta2);
  if (!eta1 || !eta2) return {f, VectorField2(f.height(), f.width()), {}, 0.0, 0.0};

  SolveReport report;
  std::function<void(IterationRecord&, const VectorField2&)> image_hook;
  if (cfg.track_step1_image) {
    image_hook = [&](IterationRecord& rec, const VectorField2& tau) {
      const ScalarField uk = match_surface(f, tau, cfg.alpha, *eta2, cfg.eps, cfg.inner);
      detail::fill_image_metrics(rec, uk, f, clean, cfg.metric);
    };
  }
  auto loop = detail::tangent_loop(f, cfg, cfg.stop, solver, *eta1, report, image_hook, obs);
  ScalarField u = match_surface(f, loop.tau, cfg.alpha, *eta2, cfg.eps, cfg.inner);
  return {std::move(u), std::move(loop.tau), std::move(report), *eta1, *eta2};
}

/// One tangent-field smoothing, then the Richardson image loop.
inline ImageResult richardson_step2(const ScalarField& f, const OuterConfig& cfg,
                                    const PoissonSolver& solver,
                                    const ScalarField* clean = nullptr,
                                    const Observers& obs = {}) {
  cfg.validate();
  detail::require_finite(f, "richardson_step2");
  detail::require_clean_shape(f, clean);
  solver.require_shape(f.height(), f.width());

  VectorField2 normal(f.height(), f.width());
  if (const auto eta1 = default_eta1(f, cfg.beta1); eta1 && cfg.alpha != 0.0) {
    const VectorField2 tau = smooth_tangent_field(f, *eta1, solver, cfg.inner);
    normal = matching_normal(tau, cfg.eps);
  }
  SolveReport report;
  ScalarField u = detail::image_loop(f, cfg, cfg.stop, normal, clean, report, obs);
  return {std::move(u), std::move(report)};
}

/// Tangent-field loop (stop_phase1) followed by the image loop (stop).
inline BothResult richardson_both(const ScalarField& f, const OuterConfig& cfg,
                                  const PoissonSolver& solver,
                                  const ScalarField* clean = nullptr, const Observers& obs = {}) {
  cfg.validate();
  detail::require_finite(f, "richardson_both");
  detail::require_clean_shape(f, clean);
  solver.require_shape(f.height(), f.width());

  BothResult out{f, VectorField2(f.height(), f.width()), {}, {}};
  VectorField2 normal(f.height(), f.width());
  if (const auto eta1 = default_eta1(f, cfg.beta1)) {
    auto loop = detail::tangent_loop(f, cfg, cfg.stop_phase1.value_or(cfg.stop), solver, *eta1,
                                     out.phase1, {}, obs);
    out.tau = std::move(loop.tau);
    if (cfg.alpha != 0.0) normal = matching_normal(out.tau, cfg.eps);
  }
  out.u = detail::image_loop(f, cfg, cfg.stop, normal, clean, out.report, obs);
  return out;
}

}  // namespace tvs
