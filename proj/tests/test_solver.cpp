#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pme/barriers.hpp"
#include "pme/solver.hpp"
#include "pme/tridiagonal.hpp"
#include "support.hpp"

using namespace pme;
using pme::testing::builtin_models;

namespace {

const ModelManifold& quad() {
  static const auto M = ModelManifold::quad_critical(3, 0.5);
  return M;
}

const ComparisonConstants& quad_consts() {
  static const auto k = fit_comparison_constants(quad(), 1000.0, 4000);
  return k;
}

struct SandwichRun {
  Trajectory tr;
  BarrierParams bar;
  double norm0 = 0.0;
};

// Datum on B_R, barrier from the existence time, run to half of it.
SandwichRun sandwich_run(const DatumSpec& u0, double R, std::size_t cells) {
  RadialGrid g(quad(), R, cells);
  const auto rho = geometric_grid(1e-3, 1e3, 2000);
  const auto et = existence_time(u0.sample(rho, 2.0), quad_consts(), 2.0, 2.0);
  SandwichRun out;
  out.norm0 = et.norm;
  out.bar = {et.amplitude, 2.0, et.T, 2.0};
  SolverConfig cfg;
  cfg.t_end = 0.5 * et.T;
  cfg.barrier_time = et.T;
  for (int k = 1; k < 10; ++k) cfg.snapshot_times.push_back(0.05 * k * et.T);
  out.tr = solve(g, RadialField{0.0, g.sample_centers([&](double r) { return u0(r, 2.0); })}, cfg);
  return out;
}

}  // namespace

TEST(Tridiagonal, MatchesDenseSolve) {
  std::mt19937 gen(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const std::size_t n = 30;
  std::vector<double> lo(n), di(n), up(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = d(gen);
    up[i] = d(gen);
    di[i] = 3.0 + d(gen);
    rhs[i] = d(gen);
  }
  std::vector<double> x = rhs;
  ASSERT_TRUE(solve_tridiagonal(lo, di, up, x));
  for (std::size_t i = 0; i < n; ++i) {
    double r = di[i] * x[i] - rhs[i];
    if (i > 0) r += lo[i] * x[i - 1];
    if (i + 1 < n) r += up[i] * x[i + 1];
    EXPECT_NEAR(r, 0.0, 1e-13);
  }
}

TEST(Grid, VolumesAndPoleFace) {
  const auto M = ModelManifold::euclidean(3);
  RadialGrid g(M, 2.0, 4);
  const auto& lv = g.log_volumes();
  for (std::size_t j = 0; j < 4; ++j) {
    const double a = 0.5 * j, b = a + 0.5;
    EXPECT_NEAR(std::exp(lv[j]), 4.0 * std::numbers::pi * (b * b * b - a * a * a) / 3.0, 1e-12);
  }
  EXPECT_EQ(g.log_face_areas().front(), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(g.kappa_minus().front(), 0.0);
  EXPECT_THROW(RadialGrid(M, 1.0, 1), DomainError);
  EXPECT_THROW(RadialGrid(M, std::vector<double>{0.0, 1.0, 1.0}), DomainError);
}

TEST(Step, ZeroIsAFixedPoint) {
  for (const auto& M : builtin_models()) {
    RadialGrid g(M, 5.0, 50);
    SolverConfig cfg;
    const auto out = step(RadialField{0.0, std::vector<double>(50, 0.0)}, cfg, g, 0.1);
    for (double x : out.u) EXPECT_EQ(x, 0.0) << M.name();
    EXPECT_DOUBLE_EQ(out.t, 0.1);
  }
  auto u0 = solve_ball(DatumSpec::bounded(0.0), SolverConfig{}, quad(), 5.0, 40);
  for (const auto& s : u0.snapshots) {
    for (double x : s.u) EXPECT_EQ(x, 0.0);
  }
}

TEST(Step, NewtonResidualBelowTolerance) {
  const auto M = ModelManifold::hyperbolic(3);
  RadialGrid g(M, 4.0, 80);
  std::vector<double> u(80);
  for (std::size_t j = 0; j < 80; ++j) u[j] = 1.0 + std::sin(g.centers()[j]);
  const auto r = newton_solve(g, u, 2.0, 0.01, 0.5, 1e-12, 60);
  ASSERT_TRUE(r.converged);
  std::vector<double> v(80), F(80);
  detail::implicit_residual(g, r.u, u, 2.0, 0.01, 0.25, v, F);
  EXPECT_LE(detail::max_abs(F), 1e-12 * std::max(1.0, detail::max_abs(u)));
  EXPECT_LE(r.residual, 1e-12 * 2.0);
}

TEST(Solve, BarenblattOracleAndOrder) {
  const auto e1 = pme::testing::barenblatt_error(1000);
  const auto e2 = pme::testing::barenblatt_error(2000);
  EXPECT_LT(e2.l1_relative, 0.02);
  EXPECT_GE(e1.l1_relative / e2.l1_relative, 1.8);
  EXPECT_LT(e2.max_abs, tau_constant * 8.0 / 2000);
}

TEST(Solve, BarenblattMassConservedInsideSupport) {
  const auto M = ModelManifold::euclidean(2);
  const pme::testing::Barenblatt B;
  RadialGrid g(M, 8.0, 400);
  SolverConfig cfg;
  cfg.t_end = 2.0;
  cfg.dt0 = 0.01;
  const auto tr = solve(g, RadialField{1.0, g.cell_averages(M, [&](double r) { return B(r, 1.0); })}, cfg);
  EXPECT_NEAR(tr.masses.back(), tr.initial_mass, 1e-10 * tr.initial_mass);
}

TEST(Solve, MassAuditWithOutflow) {
  for (const auto& M : {ModelManifold::euclidean(3), quad()}) {
    SolverConfig cfg;
    cfg.t_end = 0.5;
    cfg.dt0 = 1e-3;
    const auto tr = solve_ball(DatumSpec::bounded(1.0), cfg, M, 3.0, 120);
    double prev = tr.initial_mass;
    for (const auto& s : tr.steps) {
      EXPECT_LT(s.mass, prev);
      EXPECT_GT(s.outflow, 0.0);
      EXPECT_LE(std::abs((prev - s.mass) - s.outflow), 1e-6 * (prev - s.mass)) << M.name() << " t=" << s.t;
      prev = s.mass;
    }
  }
}

TEST(Solve, StepPolicyIndependentOfSolution) {
  SolverConfig cfg;
  cfg.t_end = 0.2;
  const auto a = solve_ball(DatumSpec::bounded(1.0), cfg, quad(), 3.0, 60);
  const auto b = solve_ball(DatumSpec::log_growth(2.0), cfg, quad(), 3.0, 60);
  ASSERT_EQ(a.steps.size(), b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) EXPECT_EQ(a.steps[i].dt, b.steps[i].dt);
  EXPECT_EQ(a.snapshots.back().t, 0.2);
}

TEST(Solve, RejectsBadInput) {
  RadialGrid g(quad(), 3.0, 30);
  SolverConfig cfg;
  EXPECT_THROW(solve(g, RadialField{0.0, std::vector<double>(29, 0.0)}, cfg), DomainError);
  cfg.m = 0.5;
  EXPECT_THROW(solve(g, RadialField{0.0, std::vector<double>(30, 0.0)}, cfg), ConfigError);
  cfg.m = 2.0;
  cfg.barrier_time = 0.5;
  EXPECT_THROW(solve(g, RadialField{0.0, std::vector<double>(30, 0.0)}, cfg), DomainError);
}

TEST(Comparison, RandomOrderedPairsStayOrdered) {
  std::mt19937_64 gen(20240611);
  for (const auto& M : builtin_models()) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 50; ++i) worst = std::max(worst, pme::testing::comparison_trial(M, gen));
    EXPECT_LE(worst, 1e-12) << M.name();
  }
}

TEST(ExistenceTime, ClosedFormExamples) {
  ComparisonConstants k;
  k.c_prime = 3.0;
  const auto rho = geometric_grid(1e-2, 1e6, 4000);
  RadialDatum d{rho, {}, std::nullopt};
  for (double r : rho) d.values.push_back(std::log(4.0 + r * r));
  const auto et = existence_time(d, k, 2.0, 2.0);
  EXPECT_NEAR(et.norm, 1.0, 1e-14);
  EXPECT_NEAR(et.T, 1.0 / 24.0, 1e-15);
  EXPECT_FALSE(et.global);
  for (auto& x : d.values) x *= 2.0;
  EXPECT_NEAR(existence_time(d, k, 2.0, 2.0).T, 0.5 / 24.0, 1e-15);
  const auto b = existence_time(DatumSpec::bounded(3.0).sample(rho, 2.0), k, 2.0, 2.0);
  EXPECT_TRUE(b.global);
  EXPECT_TRUE(std::isinf(b.T_limit));
  EXPECT_TRUE(std::isfinite(b.T));
  // The limit version uses the asymptotic norm and is never shorter.
  const auto g = existence_time(DatumSpec::log_growth(1.0).sample(rho, 3.0), k, 3.0, 2.0);
  EXPECT_GE(g.T_limit, g.T);
}

TEST(Sandwich, CanonicalDatumStaysBelowBarrier) {
  const auto run = sandwich_run(DatumSpec::log_growth(1.0), 20.0, 400);
  const auto rep = barrier_sandwich(run.tr, run.bar, run.norm0, discretization_tolerance(run.tr.h));
  EXPECT_EQ(rep.violations, 0u);
  EXPECT_LE(rep.max_violation, rep.tau);
  EXPECT_LE(rep.max_norm_excess, 1e-3);
  EXPECT_EQ(run.tr.snapshots.size(), 11u);
}

TEST(Sandwich, NegativeDatumBoundedBelow) {
  const auto run = sandwich_run(DatumSpec::log_growth(-1.0), 20.0, 400);
  const auto rep = barrier_sandwich(run.tr, run.bar, run.norm0, discretization_tolerance(run.tr.h));
  EXPECT_EQ(rep.violations, 0u);
  for (const auto& s : run.tr.snapshots) {
    for (std::size_t j = 0; j < s.u.size(); ++j) {
      const double ub = separable_barrier(run.bar, run.tr.centers[j], s.t);
      EXPECT_GE(s.u[j], -ub - rep.tau * std::max(1.0, ub));
      EXPECT_LE(s.u[j], 1e-12);
    }
  }
}

TEST(Sandwich, DetectsInflatedSolution) {
  auto run = sandwich_run(DatumSpec::log_growth(1.0), 10.0, 100);
  for (auto& x : run.tr.snapshots.back().u) x *= 3.0;
  const auto rep = barrier_sandwich(run.tr, run.bar, run.norm0, discretization_tolerance(run.tr.h));
  EXPECT_GT(rep.violations, 0u);
}

TEST(Exhaust, MonotoneInRadiusWithShrinkingIncrements) {
  SolverConfig cfg;
  cfg.t_end = 0.03;
  const auto rep = exhaust(DatumSpec::log_growth(1.0), cfg, quad(), {10.0, 20.0, 40.0}, 0.1);
  ASSERT_EQ(rep.monotonicity_violation.size(), 2u);
  for (double v : rep.monotonicity_violation) EXPECT_LE(v, discretization_tolerance(0.1));
  EXPECT_GE(rep.inner_increments[0], 2.0 * rep.inner_increments[1]);
  EXPECT_EQ(rep.inner_radius, 5.0);
}

TEST(Exhaust, ZeroDatumGivesIdenticalLevels) {
  SolverConfig cfg;
  cfg.t_end = 0.1;
  const auto rep = exhaust(DatumSpec::bounded(0.0), cfg, quad(), {5.0, 10.0, 20.0}, 0.25);
  for (double v : rep.inner_increments) EXPECT_EQ(v, 0.0);
  for (double v : rep.monotonicity_violation) EXPECT_EQ(v, 0.0);
}

TEST(Exhaust, CompactSupportDoesNotFeelTheBoundary) {
  SolverConfig cfg;
  cfg.t_end = 0.1;
  const auto bump = DatumSpec::table({0.0, 4.0, 5.0}, {2.0, 2.0, 0.0});
  const auto rep = exhaust(bump, cfg, quad(), {25.0, 50.0}, 0.1);
  double inc = 0.0;
  const auto& a = rep.runs[0];
  const auto& b = rep.runs[1];
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    for (std::size_t j = 0; j < a.centers.size() && a.centers[j] <= 10.0; ++j) {
      inc = std::max(inc, std::abs(a.snapshots[s].u[j] - b.snapshots[s].u[j]));
    }
  }
  EXPECT_LT(inc, 10.0 * discretization_tolerance(0.1));
}

TEST(Exhaust, RejectsNonNestedGrids) {
  SolverConfig cfg;
  EXPECT_THROW(exhaust(DatumSpec::bounded(1.0), cfg, quad(), {10.0, 20.0}, 0.3), ConfigError);
  EXPECT_THROW(exhaust(DatumSpec::bounded(1.0), cfg, quad(), {20.0, 10.0}, 0.1), ConfigError);
  EXPECT_THROW(exhaust(DatumSpec::bounded(1.0), cfg, quad(), {10.0}, 0.1), ConfigError);
}

TEST(Refinement, HalvingHShrinksChangesAndPoliciesAgree) {
  const auto a = pme::testing::refinement_proxy(100, 0);
  EXPECT_GE(a.ratio(), 1.8);
  // The growing policy mixes time and space errors of opposite sign, so only
  // its limit is compared.
  const auto b = pme::testing::refinement_proxy(100, 1);
  for (std::size_t i = 0; i < a.finest.size(); ++i) {
    EXPECT_LE(std::abs(a.finest[i] - b.finest[i]), a.fine_change + b.fine_change);
  }
}
