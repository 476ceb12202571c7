#pragma once

// Command-line front end: add-noise, denoise, metrics, curves.
// Exit codes: 0 ok, 2 usage, 3 I/O or format, 4 numerical failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "tvstokes/imgio.hpp"
#include "tvstokes/iterreg.hpp"

namespace tvs::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

enum class Algorithm { Rof, TvStokes, Osher, Tvs1, Tvs2, Tvs12 };

inline const std::map<std::string, Algorithm>& algorithm_names() {
  static const std::map<std::string, Algorithm> names{
      {"rof", Algorithm::Rof},     {"tvstokes", Algorithm::TvStokes}, {"osher", Algorithm::Osher},
      {"tvs1", Algorithm::Tvs1},   {"tvs2", Algorithm::Tvs2},         {"tvs12", Algorithm::Tvs12}};
  return names;
}

inline std::string algorithm_name(Algorithm a) {
  for (const auto& [name, value] : algorithm_names()) {
    if (value == a) return name;
  }
  return "?";
}

enum class StopKind { Fixed, Residual, Discrepancy };

struct Options {
  std::string input;
  std::string output;
  std::string clean;
  std::string csv;
  std::string residual;
  Algorithm algorithm = Algorithm::Tvs2;
  double beta1 = 8.0;
  double beta2 = 2.5;
  double alpha = 0.9;
  std::optional<double> eta;
  double sigma = 10.0;
  int iters_outer = 50;
  std::optional<int> iters_phase1;
  int iters_inner = 2000;
  double tol = 1e-5;
  std::optional<double> eps;
  std::uint64_t seed = 0;
  double peak = 255.0;
  bool clip = true;
  bool timing = false;
  StopKind stop = StopKind::Fixed;
  double theta = 1e-3;
  double sigma_hat = 0.0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string stem_with(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

inline std::optional<ScalarField> load_clean(const Options& o, const ScalarField& f) {
  if (o.clean.empty()) return std::nullopt;
  ScalarField g = read_image(o.clean);
  if (!g.same_shape(f)) throw UsageError("--clean image size does not match --input");
  return g;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

/// f - u mapped affinely onto [0, 255]; the sidecar records the inverse map.
inline void write_residual(const std::string& path, const ScalarField& res) {
  double lo = res[0];
  double hi = res[0];
  for (double v : res) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double scale = (hi > lo) ? 255.0 / (hi - lo) : 0.0;
  ScalarField img(res.height(), res.width());
  for (std::size_t k = 0; k < res.size(); ++k) img[k] = (res[k] - lo) * scale;
  write_image(path, img);
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# residual f - u, stored as pixel = (value - min) * scale\n";
  os << "min " << lo << "\nmax " << hi << "\nscale " << scale << "\n";
  write_text(path + ".txt", os.str());
}

inline StopRule make_rule(const Options& o, int count) {
  switch (o.stop) {
    case StopKind::Fixed: return FixedCount{count};
    case StopKind::Residual: return ResidualFloor{o.theta};
    case StopKind::Discrepancy: return Discrepancy{o.sigma_hat};
  }
  return FixedCount{count};
}

inline OuterConfig outer_config(const Options& o) {
  OuterConfig c;
  c.beta1 = o.beta1;
  c.beta2 = o.beta2;
  c.alpha = o.alpha;
  c.max_outer = o.iters_outer;
  c.stop = make_rule(o, o.iters_outer);
  if (o.iters_phase1) c.stop_phase1 = make_rule(o, *o.iters_phase1);
  c.inner.max_iters = o.iters_inner;
  c.inner.rel_tol = o.tol;
  c.eps = o.eps;
  c.metric.peak = o.peak;
  return c;
}

// One-row report for the single-solve algorithms: the solve is one
// Richardson step from u = 0 with r = u and r_ex = f - u.
inline SolveReport single_report(const ScalarField& u, const ScalarField& f, double eta,
                                 const ScalarField* clean, const MetricConfig& metric) {
  IterationRecord rec;
  rec.k = 1;
  rec.eta = eta;
  rec.r_norm = l2_norm(u);
  const ScalarField r_ex = f - u;
  rec.rex_norm = l2_norm(r_ex);
  rec.bregman = bregman_to_zero(u, eta * r_ex, tv_energy(u));
  tvs::detail::fill_image_metrics(rec, u, f, clean, metric);
  SolveReport rep;
  rep.records.push_back(rec);
  return rep;
}

struct RunOutput {
  ScalarField u;
  SolveReport report;
  std::optional<SolveReport> phase1;
};

inline RunOutput run_algorithm(const Options& o, const ScalarField& f, const ScalarField* clean) {
  if (o.eta && (o.algorithm == Algorithm::Tvs1 || o.algorithm == Algorithm::Tvs2 ||
                o.algorithm == Algorithm::Tvs12)) {
    throw UsageError("--eta does not apply to " + algorithm_name(o.algorithm) +
                     "; its fidelities follow --beta1/--beta2");
  }
  const OuterConfig cfg = outer_config(o);
  cfg.validate();

  switch (o.algorithm) {
    case Algorithm::Rof: {
      const auto eta = o.eta ? o.eta : default_eta2(f, o.beta2);
      if (!eta) return {f, single_report(f, f, 0.0, clean, cfg.metric), {}};
      ScalarField u = rof_denoise(f, *eta, cfg.inner).u;
      SolveReport rep = single_report(u, f, *eta, clean, cfg.metric);
      return {std::move(u), std::move(rep), {}};
    }
    case Algorithm::TvStokes: {
      TvsParams p;
      p.eta2 = o.eta;
      p.beta1 = o.beta1;
      p.beta2 = o.beta2;
      p.alpha = o.alpha;
      p.eps = o.eps;
      p.inner = cfg.inner;
      PoissonSolver solver(f.height(), f.width());
      auto res = tv_stokes_denoise(f, p, solver);
      SolveReport rep = single_report(res.u, f, res.eta2, clean, cfg.metric);
      return {std::move(res.u), std::move(rep), {}};
    }
    case Algorithm::Osher: {
      if (!o.eta) throw UsageError("--eta is required for --algorithm osher");
      auto res = osher_iterate(f, *o.eta, cfg, clean);
      return {std::move(res.u), std::move(res.report), {}};
    }
    case Algorithm::Tvs1: {
      PoissonSolver solver(f.height(), f.width());
      auto res = richardson_step1(f, cfg, solver, clean);
      return {std::move(res.u), std::move(res.report), {}};
    }
    case Algorithm::Tvs2: {
      PoissonSolver solver(f.height(), f.width());
      auto res = richardson_step2(f, cfg, solver, clean);
      return {std::move(res.u), std::move(res.report), {}};
    }
    case Algorithm::Tvs12: {
      PoissonSolver solver(f.height(), f.width());
      auto res = richardson_both(f, cfg, solver, clean);
      return {std::move(res.u), std::move(res.report), std::move(res.phase1)};
    }
  }
  throw UsageError("unknown algorithm");
}

inline void print_summary(std::ostream& out, const ScalarField& u, const ScalarField& f,
                          const ScalarField* clean, const SolveReport& rep, double peak) {
  out << "iterations " << rep.size() << "\n";
  if (!clean) return;
  MetricConfig m{peak};
  out << "noisy_psnr " << fmt(psnr(f, *clean, m)) << "\n";
  out << "noisy_noise_level " << fmt(noise_level(f, *clean)) << "\n";
  out << "psnr " << fmt(psnr(u, *clean, m)) << "\n";
  out << "noise_level " << fmt(noise_level(u, *clean)) << "\n";
  if (const auto k = rep.best_k()) {
    const auto& r = rep.records[static_cast<std::size_t>(*k - 1)];
    out << "best_k " << *k << "\n";
    if (r.psnr) out << "best_psnr " << fmt(*r.psnr) << "\n";
  }
}

}  // namespace detail

inline int cmd_add_noise(const Options& o, std::ostream& out) {
  const ScalarField g = read_image(o.input);
  const ScalarField f = add_gaussian_noise(g, o.sigma, o.seed, o.clip, MetricConfig{o.peak});
  write_image(o.output, f, o.peak);
  out << "noise_level " << detail::fmt(noise_level(f, g)) << "\n";
  out << "psnr " << detail::fmt(psnr(f, g, MetricConfig{o.peak})) << "\n";
  return kOk;
}

inline int cmd_metrics(const Options& o, std::ostream& out) {
  const ScalarField u = read_image(o.input);
  const ScalarField g = read_image(o.clean);
  if (!u.same_shape(g)) throw UsageError("--clean image size does not match --input");
  out << "psnr " << detail::fmt(psnr(u, g, MetricConfig{o.peak})) << "\n";
  out << "noise_level " << detail::fmt(noise_level(u, g)) << "\n";
  return kOk;
}

inline int cmd_denoise(const Options& o, std::ostream& out) {
  const ScalarField f = read_image(o.input);
  const auto clean = detail::load_clean(o, f);
  const ScalarField* g = clean ? &*clean : nullptr;
  auto run = detail::run_algorithm(o, f, g);

  write_image(o.output, run.u, o.peak);
  const std::string residual =
      o.residual.empty() ? detail::stem_with(o.output, "_residual.pgm") : o.residual;
  detail::write_residual(residual, f - run.u);
  const std::string csv = o.csv.empty() ? detail::stem_with(o.output, ".csv") : o.csv;
  detail::write_text(csv, report_csv(run.report, o.timing));
  if (run.phase1) detail::write_text(detail::stem_with(csv, "_phase1.csv"), report_csv(*run.phase1, o.timing));
  detail::print_summary(out, run.u, f, g, run.report, o.peak);
  return kOk;
}

/// Runs an algorithm for its curves only; CSV goes to --csv or stdout.
inline int cmd_curves(const Options& o, std::ostream& out) {
  const ScalarField f = read_image(o.input);
  const auto clean = detail::load_clean(o, f);
  auto run = detail::run_algorithm(o, f, clean ? &*clean : nullptr);
  const std::string text = report_csv(run.report, o.timing);
  if (o.csv.empty()) {
    out << text;
  } else {
    detail::write_text(o.csv, text);
    if (run.phase1) detail::write_text(detail::stem_with(o.csv, "_phase1.csv"), report_csv(*run.phase1, o.timing));
  }
  return kOk;
}

namespace detail {

struct BetaValidator : CLI::Validator {
  BetaValidator() : CLI::Validator("BETA>1") {
    func_ = [](std::string& s) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(s, v)) return "value " + s + " is not a number";
      if (!(v > 1.0)) return "beta must be greater than 1, got " + s;
      return {};
    };
  }
};

inline void add_algorithm_flags(CLI::App* sub, Options& o) {
  sub->add_option("--algorithm", o.algorithm, "rof | tvstokes | osher | tvs1 | tvs2 | tvs12")
      ->transform(CLI::CheckedTransformer(algorithm_names(), CLI::ignore_case).description(""))
      ->default_str("tvs2");
  sub->add_option("--beta1", o.beta1, "tangent-field fidelity factor, eta1 = beta1 / gamma")
      ->check(BetaValidator());
  sub->add_option("--beta2", o.beta2, "image fidelity factor, eta = beta2 / gamma")
      ->check(BetaValidator());
  sub->add_option("--alpha", o.alpha, "orientation matching weight")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--eta", o.eta,
                  "fixed fidelity (required for osher; rof and tvstokes default to beta2 / gamma)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--iters-outer", o.iters_outer, "outer iteration count / cap")
      ->check(CLI::Range(1, 100000));
  sub->add_option("--iters-phase1", o.iters_phase1,
                  "tvs12 tangent-field iteration count (default: --iters-outer)")
      ->check(CLI::Range(1, 100000));
  sub->add_option("--iters-inner", o.iters_inner, "inner dual iterations cap")
      ->check(CLI::Range(1, 100000000));
  sub->add_option("--tol", o.tol, "inner stop: max per-pixel dual change")
      ->check(CLI::PositiveNumber);
  sub->add_option("--eps", o.eps, "normal normalization floor (default 1e-8 (1 + max |tau|))")
      ->check(CLI::PositiveNumber);
  sub->add_option("--stop", o.stop, "outer stop rule: fixed | residual | discrepancy")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, StopKind>{{"fixed", StopKind::Fixed},
                                          {"residual", StopKind::Residual},
                                          {"discrepancy", StopKind::Discrepancy}},
          CLI::ignore_case).description(""))
      ->default_str("fixed");
  sub->add_option("--theta", o.theta, "residual rule: stop when |r^k| <= theta |r^1|")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--sigma-hat", o.sigma_hat,
                  "discrepancy rule: stop when |f - u| <= sigma_hat sqrt(N)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--clean", o.clean, "clean image for PSNR / |u - g| curves")
      ;
  sub->add_option("--csv", o.csv, "report CSV path");
  sub->add_flag("--timing", o.timing, "fill the seconds column of the CSV (breaks byte-identity)");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"TV-Stokes iterative regularization denoising"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  Options o;
  app.add_option("--peak", o.peak, "signal peak for PSNR and clipping")->check(CLI::PositiveNumber);

  auto* noise = app.add_subcommand("add-noise", "add seeded Gaussian noise to an image");
  noise->add_option("--input", o.input, "clean image")->required();
  noise->add_option("--output", o.output, "noisy image (.pgm or .png)")->required();
  noise->add_option("--sigma", o.sigma, "noise standard deviation")->check(CLI::PositiveNumber);
  noise->add_option("--seed", o.seed, "noise seed");
  noise->add_flag("--clip,!--no-clip", o.clip, "clamp to [0, peak]");

  auto* denoise = app.add_subcommand("denoise", "restore an image and write the report");
  denoise->add_option("--input", o.input, "noisy image")->required();
  denoise->add_option("--output", o.output, "restored image (.pgm or .png)")->required();
  denoise->add_option("--residual", o.residual, "residual image (default <output>_residual.pgm)");
  detail::add_algorithm_flags(denoise, o);

  auto* metrics = app.add_subcommand("metrics", "PSNR and noise level against a clean image");
  metrics->add_option("--input", o.input, "image to score")->required();
  metrics->add_option("--clean", o.clean, "reference image")->required();

  auto* curves = app.add_subcommand("curves", "print the per-iteration report CSV");
  curves->add_option("--input", o.input, "noisy image")->required();
  detail::add_algorithm_flags(curves, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*noise) return cmd_add_noise(o, out);
    if (*denoise) return cmd_denoise(o, out);
    if (*metrics) return cmd_metrics(o, out);
    return cmd_curves(o, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    err << "input error: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace tvs::cli
