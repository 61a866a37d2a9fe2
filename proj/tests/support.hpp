// Oracles and run helpers shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "pme/geometry.hpp"
#include "pme/solver.hpp"

namespace pme::testing {

inline std::vector<ModelManifold> builtin_models() {
  return {ModelManifold::euclidean(2),         ModelManifold::euclidean(3),          ModelManifold::hyperbolic(2),
          ModelManifold::hyperbolic(3),        ModelManifold::quad_critical(2, 1.0), ModelManifold::quad_critical(3, 0.5),
          ModelManifold::log_critical(2, 1.0), ModelManifold::log_critical(3, 0.5)};
}

/// Euclidean self-similar source solution
/// U = t^{-alpha} (C - k rho^2 t^{-2 beta})_+^{1/(m-1)}.
struct Barenblatt {
  int N = 2;
  double m = 2.0;
  double C = 1.0;

  double alpha() const { return N / (N * (m - 1.0) + 2.0); }
  double beta() const { return alpha() / N; }
  double k() const { return alpha() * (m - 1.0) / (2.0 * m * N); }
  double operator()(double rho, double t) const {
    const double s = C - k() * rho * rho * std::pow(t, -2.0 * beta());
    return s > 0.0 ? std::pow(t, -alpha()) * std::pow(s, 1.0 / (m - 1.0)) : 0.0;
  }
};

struct BarenblattError {
  double l1_relative = 0.0;
  double max_abs = 0.0;
  std::size_t steps = 0;
};

/// Evolves the profile from t = 1 to t = 2 on B_8 with J cells and dt = h/2,
/// comparing cell averages in the weighted L1 norm.
inline BarenblattError barenblatt_error(std::size_t J) {
  const auto M = ModelManifold::euclidean(2);
  const Barenblatt B;
  RadialGrid g(M, 8.0, J);
  RadialField f{1.0, g.cell_averages(M, [&](double r) { return B(r, 1.0); })};
  SolverConfig cfg;
  cfg.m = 2.0;
  cfg.dt0 = 0.5 * g.h();
  cfg.dt_growth = 1.0;
  cfg.t_end = 2.0;
  const auto tr = solve(g, f, cfg);
  const auto exact = g.cell_averages(M, [&](double r) { return B(r, 2.0); });
  const auto& u = tr.snapshots.back().u;
  const auto& vol = g.scaled_volumes();
  double e = 0.0, n = 0.0, mx = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    e += vol[j] * std::abs(u[j] - exact[j]);
    n += vol[j] * exact[j];
    mx = std::max(mx, std::abs(u[j] - exact[j]));
  }
  return {e / n, mx, tr.steps.size()};
}

inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t k = static_cast<std::size_t>(it - x.begin());
  if (k == 0) return y.front();
  if (k >= x.size()) return y.back();
  const double w = (at - x[k - 1]) / (x[k] - x[k - 1]);
  return (1.0 - w) * y[k - 1] + w * y[k];
}

struct RefinementResult {
  double coarse_change = 0.0;  // max |u_h - u_{h/2}| at the probes
  double fine_change = 0.0;    // max |u_{h/2} - u_{h/4}|
  std::vector<double> finest;  // u_{h/4} at the probes
  double ratio() const { return coarse_change / fine_change; }
};

/// Log-growth datum b = 1 on the log-critical model (N = 3, c = 1), B_10 with the
/// datum held at the boundary, t in [0, 0.05]. Grids with J0, 2 J0, 4 J0 cells;
/// `policy` picks dt = 0.1 h fixed (0) or dt0 = 0.02 h growing by 1.25 up to 0.2 h (1).
inline RefinementResult refinement_proxy(std::size_t J0 = 200, int policy = 0) {
  const auto M = ModelManifold::log_critical(3, 1.0);
  const double R = 10.0, m = 2.0;
  const auto u0 = DatumSpec::log_growth(1.0);
  const std::vector<double> probes = {0.5, 1.0, 2.0, 4.0, 6.0};
  std::vector<std::vector<double>> vals;
  for (std::size_t k = 0; k < 3; ++k) {
    RadialGrid g(M, R, J0 << k);
    SolverConfig cfg;
    cfg.m = m;
    cfg.t_end = 0.05;
    if (policy == 0) {
      cfg.dt0 = 0.1 * g.h();
      cfg.dt_growth = 1.0;
    } else {
      cfg.dt0 = 0.02 * g.h();
      cfg.dt_growth = 1.25;
      cfg.dt_max = 0.2 * g.h();
    }
    const double gb = u0(R, m);
    cfg.boundary = Boundary::function([gb](double) { return gb; });
    const auto tr = solve(g, RadialField{0.0, g.sample_centers([&](double r) { return u0(r, m); })}, cfg);
    std::vector<double> v;
    for (double p : probes) v.push_back(interpolate(tr.centers, tr.snapshots.back().u, p));
    vals.push_back(std::move(v));
  }
  RefinementResult out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    out.coarse_change = std::max(out.coarse_change, std::abs(vals[0][i] - vals[1][i]));
    out.fine_change = std::max(out.fine_change, std::abs(vals[1][i] - vals[2][i]));
  }
  out.finest = vals[2];
  return out;
}

/// One randomized comparison trial: ordered initial data u <= v (possibly sign
/// changing) and ordered constant boundary values, evolved side by side on the
/// same grid. Returns the largest u - v seen over all steps (<= 0 when ordered).
inline double comparison_trial(const ModelManifold& M, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double m = std::array<double, 3>{1.5, 2.0, 3.0}[gen() % 3];
  RadialGrid g(M, 2.0 + 4.0 * unit(gen), 40 + gen() % 40);
  const std::size_t J = g.size();
  std::vector<double> u(J), v(J);
  const double amp = 0.5 + 2.5 * unit(gen);
  const bool sign_changing = gen() % 2 == 0;
  for (std::size_t j = 0; j < J; ++j) {
    u[j] = amp * (sign_changing ? 2.0 * unit(gen) - 1.0 : unit(gen));
    // Zero gaps on some cells keep the pair touching there.
    v[j] = u[j] + (gen() % 3 == 0 ? 0.0 : amp * unit(gen));
  }
  const double gu = amp * (sign_changing ? 2.0 * unit(gen) - 1.0 : unit(gen));
  const double gv = gu + (gen() % 2 == 0 ? 0.0 : amp * unit(gen));
  SolverConfig cu;
  cu.m = m;
  cu.dt0 = 1e-3 * (0.5 + unit(gen));
  cu.dt_growth = 1.5;
  cu.t_end = 0.05;
  cu.newton_tol = 1e-14;
  for (int s = 1; s < 5; ++s) cu.snapshot_times.push_back(0.01 * s);
  SolverConfig cv = cu;
  cu.boundary = Boundary::function([gu](double) { return gu; });
  cv.boundary = Boundary::function([gv](double) { return gv; });
  const auto a = solve(g, RadialField{0.0, u}, cu);
  const auto b = solve(g, RadialField{0.0, v}, cv);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
    for (std::size_t j = 0; j < J; ++j) worst = std::max(worst, a.snapshots[s].u[j] - b.snapshots[s].u[j]);
  }
  return worst;
}

}  // namespace pme::testing
