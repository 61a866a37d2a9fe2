#pragma once

// Staged construction of a solution whose X_log norm diverges in finite time.
// Each stage restarts the separable subsolution from the current state, solves
// on a fixed ball with a Dirichlet datum between the barriers, and continues
// until the weighted norm has grown past a threshold.
//
// Asymptotic ratios enter the stage formulas through the normalization of the
// norm family: lambda = lim_{r -> infinity} of the weighted quantities, which is
// 2^{-1/(m-1)} times limsup |u| / (log rho)^{1/(m-1)}. With that normalization the
// tail of V_n is exactly (1 - eps_n) times the tail of u(t_n).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pme/barriers.hpp"
#include "pme/error.hpp"
#include "pme/geometry.hpp"
#include "pme/grid.hpp"
#include "pme/solver.hpp"
#include "pme/xlog.hpp"

namespace pme {

/// T_{n+1} = (a_hat / (1 - eps))^{m-1} liminf^{1-m}.
inline double stage_T(double liminf_est, double eps, double a_hat, double m) {
  if (!(liminf_est > 0.0)) throw NotApplicable("blow-up scheme needs a positive liminf");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("stage tolerance must lie in (0, 1)");
  return std::pow(a_hat / (1.0 - eps), m - 1.0) * std::pow(liminf_est, 1.0 - m);
}

/// Largest eps = 2^{-j}, j >= 1, with [(1 - eps)^{1-m} - 1](T_n - S_n) <= T_1 / 2^n.
inline double stage_epsilon(int n, double T_n, double S_n, double T_1, double m) {
  if (n < 1) throw DomainError("stage_epsilon needs n >= 1");
  if (!(T_n >= S_n)) throw DomainError("stage_epsilon needs T_n >= S_n");
  const double gap = T_n - S_n;
  const double budget = T_1 / std::ldexp(1.0, n);
  double eps = 0.5;
  for (int j = 1; j < 1100; ++j, eps *= 0.5) {
    if ((std::pow(1.0 - eps, 1.0 - m) - 1.0) * gap <= budget) return eps;
  }
  return eps;
}

/// S_{n+1} = (a_tilde / 2)^{m-1} limsup^{1-m}.
inline double stage_S(double limsup_est, double a_tilde, double m) {
  if (!(limsup_est > 0.0)) throw NotApplicable("stage length needs a positive limsup");
  return std::pow(0.5 * a_tilde, m - 1.0) * std::pow(limsup_est, 1.0 - m);
}

/// Smallest certified delta with u >= (max(W_{T,r}^m - delta, 0))^{1/m} at every
/// cell, by bisection on [0, max W^m] to 1e-6 relative. The returned value is
/// the upper end of the final bracket, so it always satisfies the inequality.
/// Throws StageFailure when u is negative where W is positive.
inline double stage_delta(std::span<const double> rho, std::span<const double> u, const BarrierParams& p,
                          int stage = 0) {
  p.validate();
  if (rho.size() != u.size() || rho.empty()) throw DomainError("stage_delta: ragged or empty field");
  std::vector<double> wm(rho.size());
  double hi = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    wm[i] = std::pow(barrier_profile_T(p, rho[i]), p.m);
    hi = std::max(hi, wm[i]);
  }
  auto admissible = [&](double delta) {
    for (std::size_t i = 0; i < rho.size(); ++i) {
      const double base = wm[i] - delta;
      const double v = base > 0.0 ? std::pow(base, 1.0 / p.m) : 0.0;
      if (u[i] < v) return false;
    }
    return true;
  };
  if (admissible(0.0)) return 0.0;
  if (!admissible(hi)) throw StageFailure("no shift makes the subsolution fit under the state", stage);
  double lo = 0.0;
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (admissible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

/// True when tail(rho) >= (max(W_{T,r}^m - delta, 0))^{1/m} for all rho >= rho0,
/// scanned in log rho up to rho = e^690 together with the limit ratio.
inline bool tail_dominates(const TailDescriptor& tail, const BarrierParams& p, double delta, double rho0) {
  const double x0 = std::log(rho0);
  const double x1 = 690.0;
  const double scale = std::pow(p.T, p.exponent());
  constexpr int samples = 20000;
  for (int i = 0; i <= samples; ++i) {
    const double x = x0 + (x1 - x0) * i / samples;
    const double w = p.a * std::pow(detail::log_r2_plus_rho2(p.r, x), p.exponent()) / scale;
    const double base = std::pow(w, p.m) - delta;
    const double v = base > 0.0 ? std::pow(base, 1.0 / p.m) : 0.0;
    const double u = tail.value_at_log(x, p.m);
    if (u < v * (1.0 - 1e-12)) return false;
  }
  const double v_ratio = p.a / scale * std::pow(2.0, p.exponent());
  return tail.literal_ratio_limit(p.m) >= v_ratio * (1.0 - 1e-12);
}

/// One completed stage n >= 1: the state at t_n = t_{n-1} + S_n.
struct StageRecord {
  int n = 0;
  double T = 0.0;      // T_n
  double S = 0.0;      // S_n
  double eps = 0.0;    // eps_{n-1}
  double delta = 0.0;  // delta_{n-1}
  double t = 0.0;      // t_n
  double liminf_est = 0.0;  // asymptotic liminf at t_n
  double limsup_est = 0.0;  // asymptotic limsup at t_n
  double lognorm = 0.0;     // ||u(t_n)||_{log,r}
  double r_tilde = 2.0;     // norm index of the supersolution used for the stage
  double S_r_tilde = 0.0;   // its existence time
  double sub_violation = 0.0;    // max over the stage of (subsolution - u) / max(1, subsolution)
  double super_violation = 0.0;  // max over the stage of (u - supersolution) / max(1, supersolution)
};

enum class BlowupStatus { running, blown_up, stalled };

inline std::string to_string(BlowupStatus s) {
  switch (s) {
    case BlowupStatus::running: return "running";
    case BlowupStatus::blown_up: return "blown-up";
    case BlowupStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct BlowupLedger {
  double m = 2.0;
  double a_tilde = 0.0;
  double a_hat = 0.0;
  double r_hat = 2.0;
  double initial_liminf = 0.0;
  double initial_limsup = 0.0;
  double initial_lognorm = 0.0;
  double T1 = 0.0;
  double tau_bound = 0.0;  // 2 T_1
  double tau = 0.0;        // t at the last completed stage
  double tau_h = 0.0;
  std::vector<StageRecord> stages;
  BlowupStatus status = BlowupStatus::running;
  std::string stop_reason;
};

struct BlowupConfig {
  double m = 2.0;
  double R = 20.0;
  std::size_t cells = 400;
  double norm_r = 2.0;
  /// Stop as blown-up once lognorm >= threshold * initial lognorm.
  double threshold = 1e3;
  /// Stop as stalled once S_n < s_min_factor * T_1.
  double s_min_factor = 1e-7;
  int max_stages = 5000;
  /// Fixed number of implicit steps per stage.
  int steps_per_stage = 10;
  double newton_tol = 1e-12;
  double eps0 = 0.5;
  /// For n >= 1, also require the stage to raise the liminf strictly.
  bool strict_growth = true;
  /// Dirichlet datum on the sphere of radius R. `subsolution`: the shifted
  /// subsolution. `trace`: the boundary value reached at the stage start times
  /// (1 - t/T_n)^{-1/(m-1)}, floored by the subsolution. Both sit between the barriers.
  enum class BoundaryMode { subsolution, trace };
  BoundaryMode boundary_mode = BoundaryMode::trace;

  void validate() const {
    if (!(m > 1.0)) throw ConfigError("PME exponent must satisfy m > 1");
    if (!(R > 0.0) || cells < 2) throw ConfigError("blow-up grid needs R > 0 and at least two cells");
    if (!(threshold > 1.0)) throw ConfigError("blow-up threshold must exceed 1");
    if (!(s_min_factor > 0.0)) throw ConfigError("s_min factor must be positive");
    if (max_stages < 1 || steps_per_stage < 1) throw ConfigError("stage counts must be positive");
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ConfigError("eps0 must lie in (0, 1)");
  }
};

/// Receives each stage's trajectory (stage index n >= 1).
using StageObserver = std::function<void(int, const Trajectory&)>;

namespace detail {

// Centers plus the boundary value at R, then the tail.
inline RadialDatum state_datum(const RadialGrid& g, const std::vector<double>& u, double u_R,
                               const TailDescriptor& tail) {
  RadialDatum d;
  d.rho = g.centers();
  d.values = u;
  d.rho.push_back(g.radius());
  d.values.push_back(u_R);
  d.tail = tail;
  return d;
}

}  // namespace detail

/// Runs the staged construction from u0 (which must carry a tail descriptor with
/// positive liminf) on the model M.
inline BlowupLedger run_blowup(const DatumSpec& u0, const ModelManifold& M, const ComparisonConstants& consts,
                               const BlowupConfig& cfg, const StageObserver& observer = {}) {
  cfg.validate();
  const double m = cfg.m;
  const double p = 1.0 / (m - 1.0);
  const auto tail0 = u0.tail();
  if (!tail0) throw NotApplicable("blow-up scheme needs initial data with a known tail");

  BlowupLedger L;
  L.m = m;
  L.a_tilde = supersolution_amplitude(consts.c_prime, m);
  const BarrierParams sub = subsolution_params(consts, m);
  L.a_hat = sub.a;
  L.r_hat = sub.r;

  RadialGrid g(M, cfg.R, cfg.cells);
  L.tau_h = discretization_tolerance(g.h());
  std::vector<double> u = g.sample_centers([&](double rho) { return u0(rho, m); });
  TailDescriptor tail = *tail0;
  {
    // The grid stores u0 only up to R; its tail descriptor may start earlier.
    tail.rho_tail = std::max(tail.rho_tail, g.radius() * (1.0 + 1e-12));
  }
  double u_R = u0(g.radius(), m);
  auto datum = detail::state_datum(g, u, u_R, tail);
  double lambda = asymptotic_liminf(datum, m);
  double Lambda = asymptotic_norm(datum, m);
  if (!(lambda > 0.0)) throw NotApplicable("blow-up scheme needs initial data with positive liminf");
  L.initial_liminf = lambda;
  L.initial_limsup = Lambda;
  L.initial_lognorm = log_norm(datum, LogNorm{cfg.norm_r, m});

  double t = 0.0;
  double T_prev = 0.0, S_prev = 0.0;
  // For n >= 1 the lambda update makes stage_T equal to (1 - eps)^{1-m} (T_n - S_n).
  // That form keeps T_{n+1} <= T_n - S_n + T_1/2^n exact in floating point once
  // T_1/2^n drops below an ulp of T_n.
  auto next_T = [&](int n, double eps) {
    if (n == 0) return stage_T(lambda, eps, L.a_hat, m);
    return std::pow(1.0 - eps, 1.0 - m) * (T_prev - S_prev);
  };
  for (int n = 0; n < cfg.max_stages; ++n) {
    const double S_next = stage_S(Lambda, L.a_tilde, m);
    double eps = n == 0 ? cfg.eps0 : stage_epsilon(n, T_prev, S_prev, L.T1, m);
    if (n > 0 && cfg.strict_growth) {
      // Halve further until (1 - eps)(1 - S/T)^{-1/(m-1)} > 1.
      while (eps > 1e-300 && (1.0 - eps) * std::pow(1.0 - S_next / next_T(n, eps), -p) <= 1.0) {
        eps *= 0.5;
      }
    }
    const double T_next = next_T(n, eps);
    if (n == 0) {
      L.T1 = T_next;
      L.tau_bound = 2.0 * T_next;
    }
    if (!(S_next < T_next)) throw StageFailure("stage length does not stay below the subsolution time", n + 1);
    if (S_next < cfg.s_min_factor * L.T1) {
      L.status = BlowupStatus::stalled;
      L.stop_reason = "stage length below s_min";
      return L;
    }

    const BarrierParams bsub{L.a_hat, L.r_hat, T_next, m};
    const double delta = stage_delta(g.centers(), u, bsub, n + 1);
    if (!tail_dominates(tail, bsub, delta, g.radius())) {
      throw StageFailure("state tail does not dominate the shifted subsolution", n + 1);
    }

    // Supersolution index r~: smallest power of two whose existence time covers the stage.
    double r_tilde = 2.0, S_rt = 0.0;
    for (; r_tilde < 1e150; r_tilde *= 2.0) {
      const double nr = log_norm(datum, LogNorm{r_tilde, m});
      S_rt = std::pow(L.a_tilde, m - 1.0) * std::pow(nr, 1.0 - m);
      if (S_rt >= S_next) break;
    }
    const BarrierParams bsup{L.a_tilde, r_tilde, S_rt, m};

    SolverConfig sc;
    sc.m = m;
    sc.dt0 = S_next / cfg.steps_per_stage;
    sc.dt_growth = 1.0;
    sc.newton_tol = cfg.newton_tol;
    if (cfg.boundary_mode == BlowupConfig::BoundaryMode::trace) {
      const double u_start = u_R, R = g.radius();
      sc.boundary = Boundary::function([bsub, delta, u_start, R, p](double s) {
        return std::pow(1.0 - s / bsub.T, -p) * std::max(u_start, shifted_subsolution(bsub, delta, R));
      });
    } else {
      sc.boundary = Boundary::barrier_dirichlet(bsub, delta);
    }
    sc.t_end = S_next;
    sc.norm_r = cfg.norm_r;
    for (int k = 1; k < cfg.steps_per_stage; ++k) sc.snapshot_times.push_back(S_next * k / cfg.steps_per_stage);
    Trajectory tr;
    try {
      tr = solve(g, RadialField{0.0, u}, sc);
    } catch (const SolverFailure& e) {
      throw StageFailure(std::string("stage solve failed: ") + e.what(), n + 1);
    }
    if (observer) observer(n + 1, tr);

    StageRecord rec;
    rec.n = n + 1;
    rec.T = T_next;
    rec.S = S_next;
    rec.eps = eps;
    rec.delta = delta;
    rec.r_tilde = r_tilde;
    rec.S_r_tilde = S_rt;
    rec.sub_violation = -std::numeric_limits<double>::infinity();
    rec.super_violation = -std::numeric_limits<double>::infinity();
    for (const auto& snap : tr.snapshots) {
      const double grow_sub = std::pow(1.0 - snap.t / T_next, -p);
      const double grow_sup = snap.t < S_rt ? std::pow(1.0 - snap.t / S_rt, -p) : std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < snap.u.size(); ++j) {
        const double rho = tr.centers[j];
        const double lo = grow_sub * shifted_subsolution(bsub, delta, rho);
        const double hi = grow_sup * barrier_profile_T(bsup, rho);
        rec.sub_violation = std::max(rec.sub_violation, (lo - snap.u[j]) / std::max(1.0, lo));
        if (std::isfinite(hi)) rec.super_violation = std::max(rec.super_violation, (snap.u[j] - hi) / std::max(1.0, hi));
      }
    }

    // Advance the state; outside the ball it is the subsolution at the end of the stage.
    u = tr.snapshots.back().u;
    u_R = sc.boundary.value(S_next, g.radius());
    const double grow = std::pow(1.0 - S_next / T_next, -p);
    tail = TailDescriptor::barrier(grow * L.a_hat / std::pow(T_next, p), L.r_hat, std::pow(grow, m) * delta,
                                   g.radius() * (1.0 + 1e-12));
    datum = detail::state_datum(g, u, u_R, tail);
    lambda = (1.0 - eps) * grow * lambda;
    Lambda = lambda;
    t += S_next;
    T_prev = T_next;
    S_prev = S_next;

    rec.t = t;
    rec.liminf_est = lambda;
    rec.limsup_est = Lambda;
    rec.lognorm = log_norm(datum, LogNorm{cfg.norm_r, m});
    L.stages.push_back(rec);
    L.tau = t;
    if (rec.lognorm >= cfg.threshold * L.initial_lognorm) {
      L.status = BlowupStatus::blown_up;
      L.stop_reason = "log norm exceeded the threshold";
      return L;
    }
  }
  L.status = BlowupStatus::stalled;
  L.stop_reason = "maximum number of stages reached";
  return L;
}

}  // namespace pme
