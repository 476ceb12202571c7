// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance --cli <path to tvstokes binary> [--known-failures 6,7] [--lena <pgm/png>]
//
// Exit status is 0 when the set of failed criteria equals --known-failures.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "support.hpp"
#include "tvstokes/imgio.hpp"
#include "tvstokes/iterreg.hpp"

using namespace tvs;
using testing_support::random_field;
using testing_support::random_matrix;
using testing_support::random_vector;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_from(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::string failures;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures += (failures.empty() ? "" : "; ") + what;
    }
  }
};

InnerSolveConfig tight() {
  InnerSolveConfig c;
  c.max_iters = 1'000'000;
  c.rel_tol = 1e-12;
  return c;
}

constexpr long kOracleIters = 1'000'000;

// ---------------------------------------------------------------- 1

Verdict operator_suite() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> side(2, 64);
  double worst_adj = 0, worst_idem = 0, worst_self = 0, worst_orth = 0, worst_ann = 0;
  for (int s = 0; s < 50; ++s) {
    const std::size_t h = side(rng);
    const std::size_t w = side(rng);
    const auto seed = static_cast<std::uint64_t>(1000 + 10 * s);
    const auto u = random_field(h, w, seed);
    const auto a = random_vector(h, w, seed + 1);
    const auto b = random_vector(h, w, seed + 2);
    const auto q = random_matrix(h, w, seed + 3);

    const double adj1 = std::abs(inner(gradient(u), a) + inner(u, divergence(a))) /
                        (l2_norm(u) * l2_norm(a) + 1.0);
    const double adj2 = std::abs(inner(vec_gradient(a), q) + inner(a, mat_divergence(q))) /
                        (l2_norm(a) * l2_norm(q) + 1.0);
    worst_adj = std::max({worst_adj, adj1, adj2});

    const PoissonSolver solver(h, w);
    const auto pa = solver.project(a);
    const auto pb = solver.project(b);
    const double na = l2_norm(a);
    worst_idem = std::max(worst_idem, l2_norm(solver.project(pa) - pa) / (1.0 + na));
    worst_self = std::max(worst_self, std::abs(inner(pa, b) - inner(a, pb)) / (na * l2_norm(b) + 1.0));
    worst_orth = std::max(worst_orth, std::abs(inner(pa, a - pa)) / (na * na + 1.0));

    const auto d = divergence(grad_perp(u));
    for (std::size_t i = 1; i + 1 < h; ++i)
      for (std::size_t j = 1; j + 1 < w; ++j)
        worst_ann = std::max(worst_ann, std::abs(d(i, j)) / (1.0 + linf_norm(u)));
  }
  const double secs = seconds_from(t0);
  v.require(worst_adj <= 1e-10, "adjointness");
  v.require(worst_idem <= 1e-9, "projection idempotency");
  v.require(worst_self <= 1e-9, "projection self-adjointness");
  v.require(worst_orth <= 1e-9, "projection orthogonality");
  v.require(worst_ann <= 1e-12, "div of grad_perp on interior");
  v.require(secs < 10.0, "runtime");
  v.detail << "adj " << worst_adj << ", idem " << worst_idem << ", self " << worst_self
           << ", orth " << worst_orth << ", div.grad_perp " << worst_ann << ", " << secs << " s";
  return v;
}

// ---------------------------------------------------------------- 2, 3

Verdict oracle_equivalence(int instances) {
  Verdict v;
  const auto t0 = Clock::now();
  const PoissonSolver solver(4, 4);
  double worst_rof = 0, worst_vec = 0, worst_match = 0;
  for (int s = 0; s < instances; ++s) {
    const auto seed = static_cast<std::uint64_t>(500 + 10 * s);
    const double eta = 0.05 + 0.05 * s;

    const auto f = random_field(4, 4, seed, 0.0, 100.0);
    const auto u = rof_denoise(f, eta, tight());
    worst_rof = std::max(worst_rof,
                         std::abs(u.stats.primal_energy - oracle::scalar_tv_min(f, eta, kOracleIters).value));

    const auto t = random_vector(4, 4, seed + 1, -10.0, 10.0);
    const auto r = rof_vector_projected(t, eta, solver, tight());
    worst_vec = std::max(worst_vec, std::abs(r.stats.primal_energy -
                                             oracle::projected_vector_tv_min(t, eta, kOracleIters).value));

    // Completed-square objective: ROF on the shifted data.
    const auto tau = grad_perp(random_field(4, 4, seed + 2, 0.0, 100.0));
    const auto n = matching_normal(tau);
    const auto shifted = matching_data(f, n, 0.9, eta);
    const auto m = match_surface(f, tau, 0.9, eta, std::nullopt, tight());
    worst_match = std::max(worst_match, std::abs(rof_energy(m, shifted, eta) -
                                                 oracle::scalar_tv_min(shifted, eta, kOracleIters).value));
  }
  const double secs = seconds_from(t0);
  v.require(worst_rof <= 1e-3, "rof_denoise");
  v.require(worst_vec <= 1e-3, "rof_vector_projected");
  v.require(worst_match <= 1e-3, "match_surface");
  v.require(secs < 300.0, "runtime");
  v.detail << instances << " instances each; max |gap| rof " << worst_rof << ", vector " << worst_vec
           << ", match " << worst_match << ", " << secs << " s";
  return v;
}

Verdict completed_square(int instances) {
  Verdict v;
  double worst = 0;
  for (int s = 0; s < instances; ++s) {
    const auto seed = static_cast<std::uint64_t>(700 + 10 * s);
    const double eta = 0.05 + 0.05 * s;
    const auto f = random_field(4, 4, seed, 0.0, 100.0);
    const auto tau = grad_perp(random_field(4, 4, seed + 1, 0.0, 100.0));
    const auto n = matching_normal(tau);
    const auto u = match_surface(f, tau, 0.9, eta, std::nullopt, tight());
    const auto best = oracle::scalar_tv_min(f, eta, kOracleIters, &n, 0.9);
    worst = std::max(worst, std::abs(orientation_energy(u, f, n, 0.9, eta) - best.value));
  }
  v.require(worst <= 1e-3, "orientation functional");
  v.detail << instances << " instances; max |gap| " << worst;
  return v;
}

// ---------------------------------------------------------------- 4

Verdict monotonicity() {
  Verdict v;
  double worst = 0;
  std::vector<double> grid;
  for (int e = 0; e <= 12; ++e) grid.push_back(std::pow(10.0, -2.0 + 0.25 * e));
  for (int s = 0; s < 10; ++s) {
    const auto f = random_field(24, 24, static_cast<std::uint64_t>(900 + s), 0.0, 255.0);
    double prev = -1;
    for (double eta : grid) {
      const double d = l2_norm(rof_denoise(f, eta).u - f);
      if (prev >= 0) worst = std::max(worst, (d - prev) / prev);
      prev = d;
    }
  }
  v.require(worst <= 1e-6, "||u(eta) - f|| increased");
  v.detail << "10 images, eta in [1e-2, 10], worst relative increase " << worst;
  return v;
}

// ---------------------------------------------------------------- 5, 6, 7

struct DriverRun {
  std::string name;
  SolveReport report;
  double telescoping = 0;  // worst identity defect
  std::vector<double> j_of_r;  // J at the Bregman point, per record
  SolveReport phase1;      // tangent-field loop (both only)
};

struct FixtureRuns {
  NoisyPair pair;
  double noisy_psnr = 0;
  double osher_eta = 0;
  DriverRun osher, step1, step2, both;
};

OuterConfig fixed(int k, double beta1, double beta2) {
  OuterConfig c;
  c.beta1 = beta1;
  c.beta2 = beta2;
  c.max_outer = k;
  c.stop = FixedCount{k};
  return c;
}

FixtureRuns run_fixture() {
  FixtureRuns fx{synthetic_pair(64, 10.0, 1, false), 0, 0, {}, {}, {}, {}};
  const auto& f = fx.pair.noisy;
  const auto& g = fx.pair.clean;
  fx.noisy_psnr = psnr(f, g);
  const PoissonSolver solver(64, 64);

  // osher: eta matched to the first image-loop fidelity.
  fx.osher_eta = *default_eta2(f, 2.5);
  {
    Observers obs;
    double& worst = fx.osher.telescoping;
    obs.on_scalar = [&](const ScalarIterate& it) {
      worst = std::max(worst, linf_norm(f + *it.v_prev - it.u - *it.v_next));
      fx.osher.j_of_r.push_back(tv_energy(it.u));
    };
    fx.osher.name = "osher";
    fx.osher.report = osher_iterate(f, fx.osher_eta, fixed(20, 8.0, 2.5), &g, obs).report;
  }
  {
    const VectorField2 t0 = grad_perp(f);
    Observers obs;
    double& worst = fx.step1.telescoping;
    obs.on_vector = [&](const VectorIterate& it) {
      worst = std::max(worst, linf_norm(it.tau + it.r_ex - t0));
      fx.step1.j_of_r.push_back(tv_energy_vec(solver.project(it.r)));
    };
    fx.step1.name = "step1";
    fx.step1.report = richardson_step1(f, fixed(20, 6.5, 3.0), solver, &g, obs).report;
  }
  {
    Observers obs;
    double& worst = fx.step2.telescoping;
    obs.on_scalar = [&](const ScalarIterate& it) {
      worst = std::max(worst, linf_norm(it.u + it.r_ex - f));
      fx.step2.j_of_r.push_back(tv_energy(it.r));
    };
    fx.step2.name = "step2";
    fx.step2.report = richardson_step2(f, fixed(20, 8.0, 2.5), solver, &g, obs).report;
  }
  {
    const VectorField2 t0 = grad_perp(f);
    Observers obs;
    double& worst = fx.both.telescoping;
    obs.on_vector = [&](const VectorIterate& it) {
      worst = std::max(worst, linf_norm(it.tau + it.r_ex - t0));
    };
    obs.on_scalar = [&](const ScalarIterate& it) {
      worst = std::max(worst, linf_norm(it.u + it.r_ex - f));
      fx.both.j_of_r.push_back(tv_energy(it.r));
    };
    OuterConfig c = fixed(20, 6.5, 2.5);
    c.stop_phase1 = FixedCount{13};
    auto r = richardson_both(f, c, solver, &g, obs);
    fx.both.name = "both";
    fx.both.report = std::move(r.report);
    fx.both.phase1 = std::move(r.phase1);
  }
  return fx;
}

double loglog_slope(const SolveReport& r) {
  const auto& rec = r.records;
  return (std::log(rec.back().r_norm) - std::log(rec.front().r_norm)) / std::log(double(rec.size()));
}

// D(0, r^k) vanishes for an exact inner solve (J is one-homogeneous), so
// what is left is inner-solver error. Increases are allowed up to this
// fraction of J(r^{k-1}).
constexpr double kBregmanSlack = 1e-2;

Verdict richardson_invariants(const FixtureRuns& fx) {
  Verdict v;
  for (const auto* d : {&fx.osher, &fx.step1, &fx.step2, &fx.both}) {
    v.require(d->telescoping <= 1e-12, d->name + " telescoping");
    v.require(d->report.size() == 20, d->name + " stopped early");
    const double slope = loglog_slope(d->report);
    v.require(slope <= -0.3, d->name + " log-log slope");
    v.detail << d->name << " telescoping " << d->telescoping << " slope " << slope << "; ";
  }
  v.require(fx.both.phase1.size() == 13, "both: phase 1 stopped early");
  const auto& s1 = fx.step1.report.records;
  for (std::size_t k = 1; k < s1.size(); ++k) {
    const double h_now = 0.5 * s1[k].eta * s1[k].r_norm * s1[k].r_norm;
    const double h_prev = 0.5 * s1[k - 1].eta * s1[k - 1].r_norm * s1[k - 1].r_norm;
    v.require(h_now <= h_prev, "H(r^k, 0) increased at k=" + std::to_string(k + 1));
  }
  const auto& s2 = fx.step2.report.records;
  for (std::size_t k = 1; k < s2.size(); ++k) {
    v.require(s2[k].eta >= s2[k - 1].eta, "eta decreased at k=" + std::to_string(k + 1));
  }
  double worst_rise = 0;
  double worst_gap = 0;
  for (const auto* d : {&fx.osher, &fx.step1, &fx.step2, &fx.both}) {
    const auto& rec = d->report.records;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      worst_gap = std::max(worst_gap, std::abs(*rec[k].bregman) / d->j_of_r[k]);
      if (k < 2) continue;
      const double rise = (*rec[k].bregman - *rec[k - 1].bregman) / d->j_of_r[k - 1];
      worst_rise = std::max(worst_rise, rise);
      v.require(rise <= kBregmanSlack, d->name + " Bregman increased at k=" + std::to_string(k + 1));
    }
  }
  v.detail << "Bregman: worst |D|/J " << worst_gap << ", worst rise/J " << worst_rise;
  return v;
}

std::pair<int, double> best_of(const SolveReport& r) {
  int bk = 0;
  double best = std::numeric_limits<double>::infinity();
  double best_psnr = 0;
  for (const auto& x : r.records) {
    if (*x.u_minus_g < best) {
      best = *x.u_minus_g;
      bk = x.k;
      best_psnr = *x.psnr;
    }
  }
  return {bk, best_psnr};
}

Verdict stopping_shape(const FixtureRuns& fx) {
  Verdict v;
  for (const auto* d : {&fx.osher, &fx.step1, &fx.step2, &fx.both}) {
    const auto [bk, bp] = best_of(d->report);
    v.require(bk >= 2 && bk < 20, d->name + " argmin k*=" + std::to_string(bk));
    const auto& rec = d->report.records;
    bool mono = true;
    for (std::size_t k = 1; k < rec.size(); ++k) mono = mono && rec[k].u_minus_f <= rec[k - 1].u_minus_f;
    v.require(mono, d->name + " ||u-f|| not monotone");
    v.detail << d->name << " k*=" << bk << " (" << bp << " dB)" << (d == &fx.both ? "" : ", ");
  }
  return v;
}

Verdict improvement(const FixtureRuns& fx, const std::string& lena) {
  Verdict v;
  const auto [k2, p2] = best_of(fx.step2.report);
  const auto [k1, p1] = best_of(fx.osher.report);
  v.require(p2 >= fx.noisy_psnr + 2.0, "gain over noisy input");
  v.require(p2 >= p1 - 0.3, "behind osher_iterate");
  v.detail << "noisy " << fx.noisy_psnr << " dB, step2 " << p2 << " dB (k=" << k2 << "), osher " << p1
           << " dB (k=" << k1 << ")";
  if (lena.empty()) {
    v.detail << "; optional Lena check SKIPPED (no image given)";
    return v;
  }
  const auto t0 = Clock::now();
  const ScalarField g = read_image(lena);
  const ScalarField f = add_gaussian_noise(g, 7.97, 0, true);
  const PoissonSolver solver(g.height(), g.width());
  const auto r = richardson_step2(f, fixed(20, 8.0, 2.5), solver, &g);
  const double lp = best_of(r.report).second;
  const double secs = seconds_from(t0);
  v.require(lp >= 33.5 && lp <= 36.5, "Lena PSNR band");
  v.require(secs < 600.0, "Lena runtime");
  v.detail << "; Lena step2 " << lp << " dB in " << secs << " s";
  return v;
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string shell_arg(const fs::path& p) { return "\"" + p.string() + "\""; }

Verdict determinism(const std::string& cli) {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / "tvs_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_image(dir / "clean.pgm", synthetic_ramp_disk(48, 48));

  auto run_once = [&](const std::string& tag) {
    const fs::path sub = dir / tag;
    fs::create_directories(sub);
    const std::string noise = shell_arg(cli) + " add-noise --input " + shell_arg(dir / "clean.pgm") +
                              " --output " + shell_arg(sub / "noisy.pgm") + " --sigma 10 --seed 3";
    const std::string denoise = shell_arg(cli) + " denoise --input " + shell_arg(sub / "noisy.pgm") +
                                " --output " + shell_arg(sub / "out.png") + " --algorithm tvs12" +
                                " --iters-outer 4 --iters-phase1 3 --clean " +
                                shell_arg(dir / "clean.pgm") + " --csv " + shell_arg(sub / "curves.csv");
    const std::string quiet = " > " + shell_arg(sub / "stdout.txt") + " 2>&1";
    return std::system((noise + quiet).c_str()) == 0 && std::system((denoise + quiet).c_str()) == 0;
  };
  const bool ran = run_once("a") && run_once("b");
  v.require(ran, "CLI exited nonzero");
  if (ran) {
    for (const char* name : {"noisy.pgm", "out.png", "out_residual.pgm", "curves.csv",
                             "curves_phase1.csv", "stdout.txt"}) {
      const auto a = slurp(dir / "a" / name);
      v.require(!a.empty() && a == slurp(dir / "b" / name), std::string(name) + " differs");
    }
  }
  v.detail << "two tvs12 runs compared byte for byte";
  fs::remove_all(dir);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string cli;
  std::vector<int> known;
  std::string lena;
  int instances = 5;
  app.add_option("--cli", cli, "path to the tvstokes binary")->required();
  app.add_option("--known-failures", known, "criteria expected to fail")->delimiter(',');
  app.add_option("--lena", lena, "optional 512x512 Lena image");
  app.add_option("--oracle-instances", instances, "random 4x4 instances per oracle check")
      ->check(CLI::Range(5, 100));
  CLI11_PARSE(app, argc, argv);

  std::cout.precision(4);
  std::set<int> failed;
  auto report = [&](int id, const std::string& title, const Verdict& v) {
    std::cout << "criterion " << id << " " << (v.pass ? "PASS" : "FAIL") << "  " << title << ": "
              << v.detail.str();
    if (!v.pass) std::cout << " | failed: " << v.failures;
    std::cout << std::endl;
    if (!v.pass) failed.insert(id);
  };

  report(1, "operator suite", operator_suite());
  report(2, "oracle equivalence", oracle_equivalence(instances));
  report(3, "completed-square equivalence", completed_square(instances));
  report(4, "fidelity monotonicity", monotonicity());
  const FixtureRuns fx = run_fixture();
  report(5, "Richardson invariants", richardson_invariants(fx));
  report(6, "optimal-stopping shape", stopping_shape(fx));
  report(7, "denoising improvement", improvement(fx, lena));
  report(8, "CLI determinism", determinism(cli));

  const std::set<int> expected(known.begin(), known.end());
  if (failed == expected) {
    if (!failed.empty()) std::cout << "failures match the documented known-failure list" << std::endl;
    return 0;
  }
  std::cout << "failed set differs from the known-failure list" << std::endl;
  return 1;
}
