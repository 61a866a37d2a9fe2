// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "pme/barriers.hpp"
#include "pme/blowup.hpp"
#include "pme/geometry.hpp"
#include "pme/solver.hpp"
#include "support.hpp"

using namespace pme;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string f(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

const ModelManifold& quad() {
  static const auto M = ModelManifold::quad_critical(3, 0.5);
  return M;
}

const ComparisonConstants& quad_consts() {
  static const auto k = fit_comparison_constants(quad(), 1000.0, 4000);
  return k;
}

void barenblatt() {
  const auto t0 = Clock::now();
  const auto e2 = testing::barenblatt_error(2000);
  const double secs = seconds_since(t0);
  const auto e4 = testing::barenblatt_error(4000);
  const double ratio = e2.l1_relative / e4.l1_relative;
  report(1, e2.l1_relative < 0.02 && ratio >= 1.8 && secs < 60.0,
         f("L1 error %.3e at J=2000, ratio %.3f under doubling, %.2f s", e2.l1_relative, ratio, secs));
}

void supersolution() {
  bool all = true;
  std::string worst;
  double worst_rel = 1e300;
  for (const auto& M : testing::builtin_models()) {
    const auto t0 = Clock::now();
    const auto k = fit_comparison_constants(M, 1000.0, 4000);
    const BarrierParams p{supersolution_amplitude(k.c_prime, 2.0), 2.0, 1.0, 2.0};
    const auto c = certify_supersolution(p, M, k, certification_grid());
    const double secs = seconds_since(t0);
    const bool ok = c.pass && c.nodes == 10000 && secs < 5.0;
    all = all && ok;
    if (c.min_relative < worst_rel || !ok) {
      worst_rel = c.min_relative;
      worst = f("%s N=%d", M.name().c_str(), M.dim());
    }
  }
  report(2, all, f("8 models, smallest relative residual %.3e (%s)", worst_rel, worst.c_str()));
}

void subsolution() {
  const auto p = subsolution_params(quad_consts(), 2.0);
  const auto c = certify_subsolution(p, quad(), quad_consts(), certification_grid());
  report(3, c.pass && c.condition_ok && c.nodes == 10000,
         f("r=%g a=%.6g, smallest relative residual %.3e, amplitude condition %s", p.r, p.a, c.min_relative,
           c.condition_ok ? "holds" : "fails"));
}

void sandwich() {
  const auto t0 = Clock::now();
  const auto u0 = DatumSpec::log_growth(1.0);
  const auto et = existence_time(u0.sample(geometric_grid(1e-3, 1e3, 4000), 2.0), quad_consts(), 2.0, 2.0);
  RadialGrid g(quad(), 50.0, 1000);
  SolverConfig cfg;
  cfg.t_end = 0.5 * et.T;
  cfg.barrier_time = et.T;
  for (int k = 1; k < 10; ++k) cfg.snapshot_times.push_back(cfg.t_end * k / 10.0);
  const auto tr = solve(g, RadialField{0.0, g.sample_centers([&](double r) { return u0(r, 2.0); })}, cfg);
  const BarrierParams bar{et.amplitude, 2.0, et.T, 2.0};
  const auto rep = barrier_sandwich(tr, bar, et.norm, discretization_tolerance(tr.h));
  const double secs = seconds_since(t0);
  report(4, rep.violations == 0 && rep.max_norm_excess <= 1e-3 && secs < 120.0,
         f("T=%.6g, %zu violating cells, max |u|-ubar %.3e (tau %.3e), norm excess %.3e, %.2f s", et.T, rep.violations,
           rep.max_violation, rep.tau, rep.max_norm_excess, secs));
}

void exhaustion() {
  const auto u0 = DatumSpec::log_growth(1.0);
  const auto et = existence_time(u0.sample(geometric_grid(1e-3, 1e3, 4000), 2.0), quad_consts(), 2.0, 2.0);
  SolverConfig cfg;
  cfg.t_end = 0.5 * et.T;
  cfg.barrier_time = et.T;
  const double h = 0.05;
  const auto rep = exhaust(u0, cfg, quad(), {25.0, 50.0, 100.0}, h);
  const double tau = discretization_tolerance(h);
  bool mono = true;
  for (double v : rep.monotonicity_violation) mono = mono && v <= tau;
  const auto& inc = rep.inner_increments;
  const bool shrink = inc[0] >= 2.0 * inc[1];
  report(5, mono && shrink,
         f("violations %.3e, %.3e (tau %.3e); inner increments %.3e, %.3e", rep.monotonicity_violation[0],
           rep.monotonicity_violation[1], tau, inc[0], inc[1]));
}

struct LedgerCheck {
  bool ok = true;
  std::string why;
};

LedgerCheck check_ledger(const BlowupLedger& L) {
  LedgerCheck c;
  auto fail = [&](const std::string& w) {
    if (c.ok) c.why = w;
    c.ok = false;
  };
  if (L.status != BlowupStatus::blown_up) fail("status " + to_string(L.status) + ": " + L.stop_reason);
  double sum = 0.0, prev = L.initial_lognorm;
  for (std::size_t k = 0; k < L.stages.size(); ++k) {
    const auto& s = L.stages[k];
    if (!(s.S < s.T)) fail(f("S >= T at stage %d", s.n));
    if (k > 0) {
      const auto& q = L.stages[k - 1];
      if (!(s.T <= q.T - q.S + L.T1 / std::ldexp(1.0, static_cast<int>(k)))) fail(f("telescoping fails at stage %d", s.n));
    }
    if (!(s.lognorm > prev)) fail(f("lognorm not increasing at stage %d", s.n));
    prev = s.lognorm;
    sum += s.S;
  }
  if (!(sum <= 2.0 * L.T1 + 1e-6)) fail(f("sum of S %.9g exceeds 2 T1", sum));
  if (L.stages.empty() || !(L.stages.back().lognorm >= 1e3 * L.initial_lognorm)) fail("final lognorm below 1e3 x initial");
  return c;
}

void blowup() {
  BlowupConfig cfg;
  cfg.R = 20.0;
  cfg.cells = 400;
  const auto L1 = run_blowup(DatumSpec::log_growth(1.0), quad(), quad_consts(), cfg);
  const auto L2 = run_blowup(DatumSpec::log_growth(2.0), quad(), quad_consts(), cfg);
  const auto c1 = check_ledger(L1), c2 = check_ledger(L2);
  const double ratio = L2.tau / L1.tau;
  const double target = std::pow(2.0, 1.0 - cfg.m);
  const bool scaling = std::abs(ratio - target) <= 0.1 * target;
  std::string why = c1.ok ? (c2.ok ? "" : " [b=2: " + c2.why + "]") : " [b=1: " + c1.why + "]";
  report(6, c1.ok && c2.ok && scaling,
         f("b=1: %zu stages, tau=%.6g, T1=%.6g, final/initial lognorm %.4g; tau(2b)/tau(b)=%.4f (target %.3f)",
           L1.stages.size(), L1.tau, L1.T1,
           L1.stages.empty() ? 0.0 : L1.stages.back().lognorm / L1.initial_lognorm, ratio, target) +
             why);
}

void uniqueness() {
  const double K = select_K(1.0);
  EtaBarrierParams p;
  p.K = K;
  p.C2 = 1.0;
  const auto k = fit_comparison_constants(ModelManifold::log_critical(2, 1.0), 1000.0, 4000);
  const double c_m = k.c_m.value_or(1.0);
  const double crit = K / (2.0 * c_m);
  p.T = 0.45 * crit;
  const auto eta = certify_eta(p, 2, 1e3);
  const double lo = log_decay_product(c_m, K, 0.45 * crit, 2.0, 100.0);
  const double hi = log_decay_product(c_m, K, 2.0 * crit, 2.0, 100.0);
  const bool decay = lo < std::log(1e-30) && hi > std::log(1e10);
  const auto proxy = testing::refinement_proxy(200, 0);
  report(7, eta.pass && eta.nodes == 10000 && decay && proxy.ratio() >= 1.8,
         f("K=%.6g, eta max relative %.3e on %zu nodes; C_M=%.6g, log10 F(100) = %.1f / %.1f; refinement ratio %.3f",
           K, eta.max_relative, eta.nodes, c_m, lo / std::log(10.0), hi / std::log(10.0), proxy.ratio()));
}

void comparison() {
  std::mt19937_64 gen(20240611);
  double worst = -1e300;
  int trials = 0;
  for (const auto& M : testing::builtin_models()) {
    for (int i = 0; i < 50; ++i, ++trials) worst = std::max(worst, testing::comparison_trial(M, gen));
  }
  report(8, worst <= 1e-12, f("%d ordered pairs over 8 models, largest u - v = %.3e", trials, worst));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  auto guarded = [](int id, auto fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  };
  guarded(1, barenblatt);
  guarded(2, supersolution);
  guarded(3, subsolution);
  guarded(4, sandwich);
  guarded(5, exhaustion);
  guarded(6, blowup);
  guarded(7, uniqueness);
  guarded(8, comparison);
  std::printf("%d of 8 criteria failed, %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
