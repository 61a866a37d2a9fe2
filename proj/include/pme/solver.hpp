#pragma once

// Fully implicit conservative finite-volume solver for the radial porous medium
// equation u_t = psi^{1-N} (psi^{N-1} (u^m)_rho)_rho on a ball, plus the
// exhaustion over nested balls and the barrier comparisons used to audit runs.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pme/barriers.hpp"
#include "pme/error.hpp"
#include "pme/geometry.hpp"
#include "pme/grid.hpp"
#include "pme/tridiagonal.hpp"
#include "pme/xlog.hpp"

namespace pme {

/// Dirichlet datum on the sphere of radius R.
struct Boundary {
  enum class Kind { homogeneous_dirichlet, barrier_dirichlet, function };
  Kind kind = Kind::homogeneous_dirichlet;
  BarrierParams barrier;
  double delta = 0.0;
  std::function<double(double)> fn;

  static Boundary homogeneous() { return {}; }
  /// (1 - t/T)^{-1/(m-1)} (max(W_{T,r}^m - delta, 0))^{1/m} at rho = R.
  static Boundary barrier_dirichlet(const BarrierParams& p, double delta = 0.0) {
    p.validate();
    if (!(delta >= 0.0)) throw DomainError("barrier boundary shift must be nonnegative");
    return {Kind::barrier_dirichlet, p, delta, {}};
  }
  static Boundary function(std::function<double(double)> g) { return {Kind::function, {}, 0.0, std::move(g)}; }

  double value(double t, double R) const {
    switch (kind) {
      case Kind::homogeneous_dirichlet: return 0.0;
      case Kind::barrier_dirichlet:
        if (!(t < barrier.T)) throw DomainError("barrier boundary evaluated at or beyond its blow-up time");
        return std::pow(1.0 - t / barrier.T, -barrier.exponent()) * shifted_subsolution(barrier, delta, R);
      case Kind::function: return fn(t);
    }
    return 0.0;
  }
};

struct SolverConfig {
  double m = 2.0;
  double dt0 = 1e-4;
  double dt_growth = 1.25;
  double dt_max = std::numeric_limits<double>::infinity();
  double newton_tol = 1e-12;
  int newton_max_iter = 60;
  int max_halvings = 40;
  Boundary boundary;
  double t_end = 1.0;
  /// When set, steps are capped at 0.01 (T - t).
  std::optional<double> barrier_time;
  /// Report times in (t0, t_end]; t_end is always reported.
  std::vector<double> snapshot_times;
  double norm_r = 2.0;

  void validate() const {
    if (!(m > 1.0)) throw ConfigError("PME exponent must satisfy m > 1");
    if (!(dt0 > 0.0)) throw ConfigError("dt0 must be positive");
    if (!(dt_growth >= 1.0)) throw ConfigError("dt_growth must be >= 1");
    if (!(dt_max > 0.0)) throw ConfigError("dt_max must be positive");
    if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
    if (newton_max_iter < 1 || max_halvings < 0) throw ConfigError("Newton iteration limits must be positive");
    if (!(norm_r >= 2.0)) throw ConfigError("norm r must be >= 2");
  }
};

/// Outcome of one Newton solve of the implicit system.
struct NewtonResult {
  std::vector<double> u;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

namespace detail {

inline void implicit_residual(const RadialGrid& g, std::span<const double> u, std::span<const double> u_old,
                              double m, double dt, double v_boundary, std::vector<double>& v, std::vector<double>& F) {
  const std::size_t J = u.size();
  const auto& kp = g.kappa_plus();
  const auto& km = g.kappa_minus();
  for (std::size_t j = 0; j < J; ++j) v[j] = signed_pow(u[j], m);
  for (std::size_t j = 0; j < J; ++j) {
    const double vr = (j + 1 < J) ? v[j + 1] : v_boundary;
    double div = kp[j] * (vr - v[j]);
    if (j > 0) div -= km[j] * (v[j] - v[j - 1]);
    F[j] = u[j] - u_old[j] - dt * div;
  }
}

inline double max_abs(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

}  // namespace detail

/// Solves u - u_old = dt * div(A grad u^m) / V with u^m = g^m on the outer face,
/// by damped Newton in u. The Jacobian uses d(u^m)/du = m (|u|^{m-1} + 1e-12).
inline NewtonResult newton_solve(const RadialGrid& g, std::span<const double> u_old, double m, double dt,
                                 double g_new, double tol, int max_iter) {
  const std::size_t J = u_old.size();
  if (J != g.size()) throw DomainError("field size does not match the grid");
  NewtonResult res;
  res.u.assign(u_old.begin(), u_old.end());
  std::vector<double> v(J), F(J), trial(J), Ft(J), vt(J);
  std::vector<double> lo(J), di(J), up(J), rhs(J);
  const double vb = signed_pow(g_new, m);
  const double scale = std::max({1.0, detail::max_abs(u_old), std::abs(g_new)});
  const auto& kp = g.kappa_plus();
  const auto& km = g.kappa_minus();

  detail::implicit_residual(g, res.u, u_old, m, dt, vb, v, F);
  double norm = detail::max_abs(F);
  for (int it = 0; it <= max_iter; ++it) {
    res.iterations = it;
    res.residual = norm;
    if (!std::isfinite(norm)) return res;
    if (norm <= tol * scale) {
      res.converged = true;
      return res;
    }
    if (it == max_iter) break;
    for (std::size_t j = 0; j < J; ++j) {
      const double dv = m * (std::pow(std::abs(res.u[j]), m - 1.0) + 1e-12);
      di[j] = 1.0 + dt * (kp[j] + km[j]) * dv;
      // Column j couples to row j-1 through kp[j-1] and to row j+1 through km[j+1].
      if (j > 0) up[j - 1] = -dt * kp[j - 1] * dv;
      if (j + 1 < J) lo[j + 1] = -dt * km[j + 1] * dv;
      rhs[j] = -F[j];
    }
    if (!solve_tridiagonal(lo, di, up, rhs)) return res;
    double lambda = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      for (std::size_t j = 0; j < J; ++j) trial[j] = res.u[j] + lambda * rhs[j];
      detail::implicit_residual(g, trial, u_old, m, dt, vb, vt, Ft);
      const double tn = detail::max_abs(Ft);
      if (tn <= (1.0 - 1e-4 * lambda) * norm || tn <= tol * scale) {
        res.u.swap(trial);
        F.swap(Ft);
        norm = tn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) return res;
  }
  return res;
}

/// Bookkeeping for one accepted step. Mass and outflow are in units of
/// exp(grid.log_mass_scale()).
struct StepRecord {
  double t = 0.0;   // time at the end of the step
  double dt = 0.0;
  double mass = 0.0;
  double outflow = 0.0;
  int iterations = 0;
};

/// One implicit step of size dt, halving on Newton failure until the whole
/// interval is covered. Throws SolverFailure after cfg.max_halvings halvings.
inline RadialField step(const RadialField& u, const SolverConfig& cfg, const RadialGrid& g, double dt,
                        std::vector<StepRecord>* log = nullptr) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  RadialField cur = u;
  const double t_target = u.t + dt;
  double h = dt;
  int halvings = 0;
  while (cur.t < t_target) {
    const bool last = cur.t + h >= t_target * (1.0 - 1e-14) - 1e-300;
    const double t_new = last ? t_target : cur.t + h;
    const double dt_try = t_new - cur.t;
    const double gb = cfg.boundary.value(t_new, g.radius());
    auto r = newton_solve(g, cur.u, cfg.m, dt_try, gb, cfg.newton_tol, cfg.newton_max_iter);
    if (!r.converged) {
      if (++halvings > cfg.max_halvings) {
        throw SolverFailure("Newton failed to converge at t = " + std::to_string(cur.t) + " with dt = " +
                                std::to_string(dt_try),
                            cur.t, dt_try);
      }
      h = 0.5 * dt_try;
      continue;
    }
    if (log) {
      const double vb = signed_pow(gb, cfg.m);
      const double vl = signed_pow(r.u.back(), cfg.m);
      log->push_back({t_new, dt_try, scaled_mass(g, r.u), dt_try * g.scaled_boundary_conductance() * (vl - vb),
                      r.iterations});
    }
    cur.u = std::move(r.u);
    cur.t = t_new;
  }
  return cur;
}

/// Time-ordered snapshots with per-snapshot norms and masses.
struct Trajectory {
  std::vector<double> centers;
  double h = 0.0;
  double R = 0.0;
  double log_mass_scale = 0.0;
  double initial_mass = 0.0;
  std::vector<RadialField> snapshots;
  std::vector<double> log_norms;         // ||u(t)||_{log,r} over the cell centers
  std::vector<double> limsup_estimates;  // sup |u|/(log rho)^{1/(m-1)} over centers with rho >= max(R/10, e)
  std::vector<double> masses;
  std::vector<StepRecord> steps;
};

namespace detail {

inline double window_limsup(const std::vector<double>& c, const std::vector<double>& u, double m, double R) {
  const double lo = std::max(R / 10.0, std::numbers::e);
  double s = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (c[j] < lo) continue;
    s = std::max(s, std::abs(u[j]) / std::pow(std::log(c[j]), 1.0 / (m - 1.0)));
  }
  return s;
}

inline void push_snapshot(Trajectory& tr, const RadialGrid& g, RadialField f, const SolverConfig& cfg) {
  tr.log_norms.push_back(log_norm(tr.centers, f.u, LogNorm{cfg.norm_r, cfg.m}));
  tr.limsup_estimates.push_back(window_limsup(tr.centers, f.u, cfg.m, g.radius()));
  tr.masses.push_back(scaled_mass(g, f.u));
  tr.snapshots.push_back(std::move(f));
}

}  // namespace detail

/// Evolves `init` to cfg.t_end. Step sizes follow dt0 * growth^k capped by
/// dt_max, by 0.01 (T - t) near a barrier time, and truncated to land on report
/// times; they do not depend on the solution unless Newton fails.
inline Trajectory solve(const RadialGrid& g, const RadialField& init, const SolverConfig& cfg) {
  cfg.validate();
  if (init.u.size() != g.size()) throw DomainError("initial field does not match the grid");
  for (double x : init.u) {
    if (!std::isfinite(x)) throw DomainError("initial field is not finite");
  }
  if (!(cfg.t_end >= init.t)) throw ConfigError("t_end precedes the initial time");
  // Steps capped at 0.01 (T - t) never reach T.
  if (cfg.barrier_time && !(cfg.t_end < *cfg.barrier_time)) throw DomainError("t_end must precede the barrier time");
  Trajectory tr;
  tr.centers = g.centers();
  tr.h = g.h();
  tr.R = g.radius();
  tr.log_mass_scale = g.log_mass_scale();
  tr.initial_mass = scaled_mass(g, init.u);

  std::vector<double> reports;
  for (double t : cfg.snapshot_times) {
    if (t > init.t && t < cfg.t_end) reports.push_back(t);
  }
  std::sort(reports.begin(), reports.end());
  reports.erase(std::unique(reports.begin(), reports.end()), reports.end());
  if (cfg.t_end > init.t) reports.push_back(cfg.t_end);

  detail::push_snapshot(tr, g, init, cfg);
  RadialField cur = init;
  double dt_nominal = std::min(cfg.dt0, cfg.dt_max);
  for (double target : reports) {
    while (cur.t < target) {
      double dt = dt_nominal;
      if (cfg.barrier_time) {
        const double gap = *cfg.barrier_time - cur.t;
        if (!(gap > 0.0)) throw DomainError("run reaches the barrier time");
        dt = std::min(dt, 0.01 * gap);
      }
      const bool hits = cur.t + dt >= target - 1e-12 * std::max(1.0, std::abs(target));
      if (hits) dt = target - cur.t;
      const std::size_t before = tr.steps.size();
      cur = step(cur, cfg, g, dt, &tr.steps);
      if (hits) cur.t = target;
      const bool halved = tr.steps.size() > before + 1;
      dt_nominal = halved ? tr.steps.back().dt : std::min(dt_nominal * cfg.dt_growth, cfg.dt_max);
    }
    detail::push_snapshot(tr, g, cur, cfg);
  }
  return tr;
}

/// Solves on the uniform grid of B_R with `cells` cells, starting from u0 sampled
/// at the cell centers at time 0.
inline Trajectory solve_ball(const DatumSpec& u0, const SolverConfig& cfg, const ModelManifold& M, double R,
                             std::size_t cells) {
  RadialGrid g(M, R, cells);
  RadialField init{0.0, g.sample_centers([&](double rho) { return u0(rho, cfg.m); })};
  return solve(g, init, cfg);
}

/// Result of the exhaustion over nested balls.
struct ExhaustReport {
  std::vector<double> radii;
  std::vector<Trajectory> runs;
  /// max over shared cells and snapshots of u_{R_k} - u_{R_{k+1}}.
  std::vector<double> monotonicity_violation;
  /// sup |u_{R_{k+1}} - u_{R_k}| over cells inside B_{R_1/2} and all snapshots.
  std::vector<double> inner_increments;
  double inner_radius = 0.0;
};

/// Runs on B_{R_k} with a common uniform spacing h, so that the first R_k/h cells
/// of every grid coincide.
inline ExhaustReport exhaust(const DatumSpec& u0, const SolverConfig& cfg, const ModelManifold& M,
                             const std::vector<double>& radii, double h) {
  if (radii.size() < 2) throw ConfigError("exhaust needs at least two radii");
  if (!(h > 0.0)) throw ConfigError("exhaust needs a positive spacing");
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (!(radii[k] > radii[k - 1])) throw ConfigError("exhaust radii must be strictly increasing");
  }
  ExhaustReport rep;
  rep.radii = radii;
  rep.inner_radius = radii.front() / 2.0;
  for (double R : radii) {
    const double cells = R / h;
    if (std::abs(cells - std::round(cells)) > 1e-9 * cells || std::round(cells) < 2) {
      throw ConfigError("radius " + std::to_string(R) + " is not a multiple of the spacing; grids would not nest");
    }
    rep.runs.push_back(solve_ball(u0, cfg, M, R, static_cast<std::size_t>(std::llround(cells))));
  }
  for (std::size_t k = 0; k + 1 < rep.runs.size(); ++k) {
    const auto& a = rep.runs[k];
    const auto& b = rep.runs[k + 1];
    if (a.snapshots.size() != b.snapshots.size()) throw ConfigError("nested runs report different times");
    double viol = -std::numeric_limits<double>::infinity();
    double inc = 0.0;
    for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
      const auto& ua = a.snapshots[s].u;
      const auto& ub = b.snapshots[s].u;
      for (std::size_t j = 0; j < ua.size(); ++j) {
        viol = std::max(viol, ua[j] - ub[j]);
        if (a.centers[j] <= rep.inner_radius) inc = std::max(inc, std::abs(ub[j] - ua[j]));
      }
    }
    rep.monotonicity_violation.push_back(viol);
    rep.inner_increments.push_back(inc);
  }
  return rep;
}

/// Local existence time a^{m-1} ||u0||_{log,r}^{1-m}, together with its r -> infinity
/// limit taken with the asymptotic norm.
struct ExistenceTime {
  double T = std::numeric_limits<double>::infinity();
  double T_limit = std::numeric_limits<double>::infinity();
  double norm = 0.0;
  double asymptotic_norm = 0.0;
  double amplitude = 0.0;
  /// Zero asymptotic norm: the solution exists for all times.
  bool global = false;
};

inline ExistenceTime existence_time(const RadialDatum& u0, const ComparisonConstants& consts, double m, double r) {
  ExistenceTime out;
  out.amplitude = supersolution_amplitude(consts.c_prime, m);
  out.norm = log_norm(u0, LogNorm{r, m});
  out.asymptotic_norm = asymptotic_norm(u0, m);
  const double am = std::pow(out.amplitude, m - 1.0);
  if (out.norm > 0.0) out.T = am * std::pow(out.norm, 1.0 - m);
  if (out.asymptotic_norm > 0.0) {
    out.T_limit = am * std::pow(out.asymptotic_norm, 1.0 - m);
  } else {
    out.global = true;
  }
  return out;
}

/// Discretization tolerance tau_h = C h, applied relative to max(1, |barrier|).
/// C is the ratio of the maximal pointwise Barenblatt error to h at J = 2000
/// (N = 2, m = 2, R = 8, t from 1 to 2), rounded up.
inline constexpr double tau_constant = 0.2;

inline double discretization_tolerance(double h) { return tau_constant * h; }

/// Comparison of a trajectory against the separable supersolution.
struct SandwichReport {
  double max_violation = -std::numeric_limits<double>::infinity();  // max of |u| - ubar
  std::size_t violations = 0;  // cells with |u| > ubar + tau max(1, ubar)
  double worst_rho = 0.0;
  double worst_t = 0.0;
  double max_norm_excess = -std::numeric_limits<double>::infinity();  // max of ||u(t)|| / bound - 1
  double tau = 0.0;
};

/// Checks |u| <= (1 - t/T)^{-1/(m-1)} W_{T,r} + tau and the norm bound
/// ||u(t)||_{log,r} <= (1 - t/T)^{-1/(m-1)} norm0 at every snapshot. The norm
/// series is read from the trajectory, so `bar.r` must match the config's norm_r.
inline SandwichReport barrier_sandwich(const Trajectory& tr, const BarrierParams& bar, double norm0, double tau) {
  bar.validate();
  SandwichReport rep;
  rep.tau = tau;
  std::vector<double> w(tr.centers.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = barrier_profile_T(bar, tr.centers[j]);
  for (std::size_t s = 0; s < tr.snapshots.size(); ++s) {
    const double t = tr.snapshots[s].t;
    const double amp = std::pow(1.0 - t / bar.T, -bar.exponent());
    const auto& u = tr.snapshots[s].u;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double ub = amp * w[j];
      const double d = std::abs(u[j]) - ub;
      if (d > rep.max_violation) {
        rep.max_violation = d;
        rep.worst_rho = tr.centers[j];
        rep.worst_t = t;
      }
      if (d > tau * std::max(1.0, ub)) ++rep.violations;
    }
    if (norm0 > 0.0) rep.max_norm_excess = std::max(rep.max_norm_excess, tr.log_norms[s] / (amp * norm0) - 1.0);
  }
  return rep;
}

}  // namespace pme
