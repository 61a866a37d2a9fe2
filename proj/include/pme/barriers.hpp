#pragma once

// Explicit barriers: the separable supersolution, the separable subsolution and
// its shifted variant, the backward barrier eta, and the decay product used on
// the uniqueness side.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pme/error.hpp"
#include "pme/geometry.hpp"

namespace pme {

/// Parameters of W(rho) = a [log(r^2 + rho^2)]^{1/(m-1)} and W_{T,r} = W / T^{1/(m-1)}.
struct BarrierParams {
  double a = 1.0;
  double r = 2.0;
  double T = 1.0;
  double m = 2.0;

  double exponent() const { return 1.0 / (m - 1.0); }

  void validate() const {
    if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
    if (!(a > 0.0)) throw DomainError("barrier amplitude must be positive");
    if (!(T > 0.0)) throw DomainError("barrier time must be positive");
    if (!(r >= 2.0)) throw DomainError("barrier parameter r must be >= 2");
  }
};

/// a = [2m (C' + (m+1)/(m-1))]^{-1/(m-1)}.
inline double supersolution_amplitude(double c_prime, double m) {
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  if (!(c_prime > 0.0)) throw DomainError("C' must be positive");
  return std::pow(2.0 * m * (c_prime + (m + 1.0) / (m - 1.0)), -1.0 / (m - 1.0));
}

/// Unit-time profile W(rho).
inline double barrier_profile(const BarrierParams& p, double rho) {
  return p.a * std::pow(std::log(p.r * p.r + rho * rho), p.exponent());
}

/// W_{T,r}(rho) = W(rho) / T^{1/(m-1)}.
inline double barrier_profile_T(const BarrierParams& p, double rho) {
  return barrier_profile(p, rho) / std::pow(p.T, p.exponent());
}

/// (1 - t/T)^{-1/(m-1)} W_{T,r}(rho), defined for 0 <= t < T.
inline double separable_barrier(const BarrierParams& p, double rho, double t) {
  if (!(t < p.T)) throw DomainError("separable barrier evaluated at t >= T");
  return std::pow(1.0 - t / p.T, -p.exponent()) * barrier_profile_T(p, rho);
}

/// First and second radial derivatives of W^m for the unit-time profile.
struct WmDerivatives {
  double first;
  double second;
};

inline WmDerivatives wm_derivatives(const BarrierParams& p, double rho) {
  const double m = p.m;
  const double s = p.r * p.r + rho * rho;
  const double L = std::log(s);
  const double Lp = std::pow(L, p.exponent());
  const double am = std::pow(p.a, m);
  const double k = 2.0 * m / (m - 1.0);
  const double first = am * k * rho / s * Lp;
  const double second =
      am * k * Lp / s * (1.0 - 2.0 * rho * rho / s + 2.0 * rho * rho / ((m - 1.0) * s * L));
  return {first, second};
}

/// Delta(W^m)(rho) = (W^m)'' + m(rho) (W^m)' for the unit-time profile W.
inline double radial_laplacian_of_Wm(const BarrierParams& p, const ModelManifold& M, double rho) {
  if (!(rho > 0.0)) throw DomainError("radial_laplacian_of_Wm: rho must be positive");
  const auto d = wm_derivatives(p, rho);
  return d.second + drift(M, rho) * d.first;
}

/// Default certification grid: 10^4 geometric nodes on [1e-3, 1e3].
inline std::vector<double> certification_grid(double lo = 1e-3, double hi = 1e3, std::size_t n = 10000) {
  return geometric_grid(lo, hi, n);
}

/// Outcome of a grid certificate. Residuals are signed so that nonnegative means
/// the inequality holds; `min_relative` divides by the local scale.
struct BarrierCertificate {
  bool pass = false;
  double min_residual = std::numeric_limits<double>::infinity();
  double min_relative = std::numeric_limits<double>::infinity();
  double argmin_rho = 0.0;
  /// Sufficient analytic condition (supersolution: the C' inequality; subsolution:
  /// the lower bound on a) and the node where it is tightest.
  bool condition_ok = true;
  double condition_argmin = 0.0;
  BarrierParams params;
  std::size_t nodes = 0;
};

namespace detail {

inline void record(BarrierCertificate& c, double residual, double scale, double rho) {
  const double rel = residual / std::max(scale, std::numeric_limits<double>::min());
  if (rel < c.min_relative) {
    c.min_relative = rel;
    c.min_residual = residual;
    c.argmin_rho = rho;
  }
}

constexpr double certificate_tolerance = 1e-10;

}  // namespace detail

/// Checks W >= (m-1) Delta(W^m) node by node, and the sufficient condition
/// 2m a^{m-1} [C'(1+rho^2) + (m+1)/(m-1)] <= r^2 + rho^2.
inline BarrierCertificate certify_supersolution(const BarrierParams& p, const ModelManifold& M,
                                                const ComparisonConstants& consts, std::span<const double> grid) {
  p.validate();
  BarrierCertificate c;
  c.params = p;
  c.nodes = grid.size();
  const double m = p.m;
  double worst_cond = std::numeric_limits<double>::infinity();
  for (double rho : grid) {
    const double w = barrier_profile(p, rho);
    const double lap = (m - 1.0) * radial_laplacian_of_Wm(p, M, rho);
    detail::record(c, w - lap, std::abs(w) + std::abs(lap), rho);
    const double lhs = 2.0 * m * std::pow(p.a, m - 1.0) * (consts.c_prime * (1.0 + rho * rho) + (m + 1.0) / (m - 1.0));
    const double slack = (p.r * p.r + rho * rho - lhs) / (p.r * p.r + rho * rho);
    if (slack < worst_cond) {
      worst_cond = slack;
      c.condition_argmin = rho;
    }
  }
  c.condition_ok = worst_cond >= -1e-14;
  c.pass = c.min_relative >= -detail::certificate_tolerance;
  return c;
}

/// Smallest integer r >= 2 with (C''/2)(1+rho^2) + 1 - 2 rho^2/(r^2+rho^2) >= 0 for
/// all rho >= 0, and a = (r^2 / (C'' m))^{1/(m-1)}. Returned with T = 1.
inline BarrierParams subsolution_params(const ComparisonConstants& consts, double m) {
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  if (!consts.c_double_prime) throw NotApplicable("model carries no lower quadratic drift bound C''");
  const double C = *consts.c_double_prime;
  if (!(C > 0.0)) throw NotApplicable("lower drift constant C'' must be positive");
  static const std::vector<double> probes = geometric_grid(1e-3, 1e6, 20000);
  const double rho_max = probes.back();
  for (int r = 2;; ++r) {
    const double r2 = static_cast<double>(r) * r;
    bool ok = 0.5 * C + 1.0 >= 0.0;
    for (std::size_t i = 0; ok && i < probes.size(); ++i) {
      const double s = probes[i] * probes[i];
      ok = 0.5 * C * (1.0 + s) + 1.0 - 2.0 * s / (r2 + s) >= 0.0;
    }
    // Beyond the grid the left side increases once C'' >= 4 r^2 / (r^2 + rho^2)^2.
    ok = ok && C >= 4.0 * r2 / ((r2 + rho_max * rho_max) * (r2 + rho_max * rho_max));
    if (ok) return {std::pow(r2 / (C * m), 1.0 / (m - 1.0)), static_cast<double>(r), 1.0, m};
    if (r > 1000000) throw NotApplicable("no admissible r found for C'' = " + std::to_string(C));
  }
}

/// Checks W <= (m-1) Delta(W^m) node by node, and a >= (r^2/(C'' m))^{1/(m-1)}.
inline BarrierCertificate certify_subsolution(const BarrierParams& p, const ModelManifold& M,
                                              const ComparisonConstants& consts, std::span<const double> grid) {
  p.validate();
  if (!consts.c_double_prime) throw NotApplicable("model carries no lower quadratic drift bound C''");
  BarrierCertificate c;
  c.params = p;
  c.nodes = grid.size();
  for (double rho : grid) {
    const double w = barrier_profile(p, rho);
    const double lap = (p.m - 1.0) * radial_laplacian_of_Wm(p, M, rho);
    detail::record(c, lap - w, std::abs(w) + std::abs(lap), rho);
  }
  c.condition_ok = p.a >= std::pow(p.r * p.r / (*consts.c_double_prime * p.m), 1.0 / (p.m - 1.0));
  c.pass = c.min_relative >= -detail::certificate_tolerance;
  return c;
}

/// V = (max(W_{T,r}^m - delta, 0))^{1/m}.
inline double shifted_subsolution(const BarrierParams& p, double delta, double rho) {
  if (!(delta >= 0.0)) throw DomainError("shift delta must be nonnegative");
  const double wm = std::pow(barrier_profile_T(p, rho), p.m);
  const double base = wm - delta;
  return base > 0.0 ? std::pow(base, 1.0 / p.m) : 0.0;
}

/// Checks V <= (m-1) T Delta(V^m) on the nodes where W_{T,r}^m > delta. There
/// V^m = W_{T,r}^m - delta, so Delta(V^m) = Delta(W^m) / T^{m/(m-1)}.
inline BarrierCertificate certify_shifted_subsolution(const BarrierParams& p, double delta, const ModelManifold& M,
                                                      std::span<const double> grid) {
  p.validate();
  BarrierCertificate c;
  c.params = p;
  const double tscale = std::pow(p.T, p.m / (p.m - 1.0));
  for (double rho : grid) {
    if (!(std::pow(barrier_profile_T(p, rho), p.m) > delta)) continue;
    ++c.nodes;
    const double v = shifted_subsolution(p, delta, rho);
    const double rhs = (p.m - 1.0) * p.T * radial_laplacian_of_Wm(p, M, rho) / tscale;
    detail::record(c, rhs - v, std::abs(v) + std::abs(rhs), rho);
  }
  c.pass = c.min_relative >= -detail::certificate_tolerance;
  return c;
}

/// Parameters of eta(rho, t) = lambda exp{-K/(2T - t) rho^2 / log rho}.
struct EtaBarrierParams {
  double K = 0.0;
  double lambda = 1.0;
  double T = 1.0;
  double R0 = 2.0;
  double C2 = 1.0;

  void validate() const {
    if (!(K > 0.0)) throw DomainError("eta barrier needs K > 0");
    if (!(lambda > 0.0)) throw DomainError("eta barrier needs lambda > 0");
    if (!(T > 0.0)) throw DomainError("eta barrier needs T > 0");
    if (!(R0 >= 2.0)) throw DomainError("eta barrier needs R0 >= 2");
  }
};

inline double eta_barrier(const EtaBarrierParams& p, double rho, double t) {
  if (!(rho > 1.0)) throw DomainError("eta barrier needs rho > 1");
  return p.lambda * std::exp(-p.K / (2.0 * p.T - t) * rho * rho / std::log(rho));
}

/// eta_t, eta_rho and eta_rhorho, each divided by eta.
struct EtaLogDerivatives {
  double t;
  double rho;
  double rhorho;
};

inline EtaLogDerivatives eta_log_derivatives(const EtaBarrierParams& p, double rho, double t) {
  if (!(rho > 1.0)) throw DomainError("eta barrier needs rho > 1");
  const double L = std::log(rho);
  const double k = p.K / (2.0 * p.T - t);
  const double dt = -p.K / ((2.0 * p.T - t) * (2.0 * p.T - t)) * rho * rho / L;
  const double dr = -k * rho * (2.0 * L - 1.0) / (L * L);
  const double drr = -k / (L * L * L * L) *
                     (-k * rho * rho * (2.0 * L - 1.0) * (2.0 * L - 1.0) + 2.0 * L * L * L - 3.0 * L * L + 2.0 * L);
  return {dt, dr, drr};
}

/// The bracket log(2+rho)(2 log rho - 1)^2 / (log rho)^3.
inline double eta_bracket(double rho) {
  const double L = std::log(rho);
  return std::log(2.0 + rho) * (2.0 * L - 1.0) * (2.0 * L - 1.0) / (L * L * L);
}

/// G* = sup_{rho >= R0} of the bracket: grid maximum on [R0, 1e6] and the limit 4.
inline double eta_bracket_sup(double R0) {
  if (!(R0 >= 2.0)) throw DomainError("R0 must be >= 2");
  double best = 4.0;
  if (R0 < 1e6) {
    for (double rho : geometric_grid(R0, 1e6, 20000)) best = std::max(best, eta_bracket(rho));
  }
  return best;
}

/// K = 1 / ((1 + margin) C2 G*).
inline double select_K(double C2, double R0 = 2.0, double margin = 0.1) {
  if (!(C2 > 0.0)) throw DomainError("C2 must be positive");
  return 1.0 / ((1.0 + margin) * C2 * eta_bracket_sup(R0));
}

struct EtaCertificate {
  bool pass = false;
  /// Largest value of [eta_t + C2 log(2+rho) (Delta eta)^+] / (eta * scale).
  double max_relative = -std::numeric_limits<double>::infinity();
  double worst_rho = 0.0;
  double worst_t = 0.0;
  bool signs_ok = true;  // eta_t < 0 and eta_rho < 0 at every node
  std::size_t nodes = 0;
};

/// Verifies eta_t + C2 log(2+rho) (Delta eta)^+ <= 0 on an n_rho x n_t grid over
/// (R0, rho_max) x (0, T(1 - 1e-6)). Delta eta uses the Euclidean drift floor
/// (N-1)/rho, which is the least favorable drift because eta_rho < 0.
inline EtaCertificate certify_eta(const EtaBarrierParams& p, int dim, double rho_max, std::size_t n_rho = 100,
                                  std::size_t n_t = 100) {
  p.validate();
  if (!(rho_max > p.R0)) throw DomainError("certify_eta needs rho_max > R0");
  EtaCertificate c;
  const auto rhos = geometric_grid(p.R0 * (1.0 + 1e-9), rho_max, n_rho);
  const double t_hi = p.T * (1.0 - 1e-6);
  for (std::size_t j = 0; j < n_t; ++j) {
    const double t = t_hi * (static_cast<double>(j) + 0.5) / static_cast<double>(n_t);
    for (double rho : rhos) {
      const auto d = eta_log_derivatives(p, rho, t);
      if (!(d.t < 0.0) || !(d.rho < 0.0)) c.signs_ok = false;
      const double lap = d.rhorho + (dim - 1) / rho * d.rho;
      const double coef = p.C2 * std::log(2.0 + rho);
      const double lhs = d.t + coef * std::max(lap, 0.0);
      const double scale = std::abs(d.t) + coef * std::abs(lap);
      const double rel = lhs / scale;
      if (rel > c.max_relative) {
        c.max_relative = rel;
        c.worst_rho = rho;
        c.worst_t = t;
      }
      ++c.nodes;
    }
  }
  c.pass = c.signs_ok && c.max_relative <= 1e-12;
  return c;
}

/// log F(R) for F(R) = (log R)^{m/(m-1)} exp{C_M R^2/log R - (K/(2T)) (R-1)^2/log(R-1)}.
inline double log_decay_product(double c_m, double K, double T, double m, double R) {
  if (!(R >= 3.0)) throw DomainError("decay product needs R >= 3");
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  if (!(T > 0.0)) throw DomainError("decay product needs T > 0");
  return m / (m - 1.0) * std::log(std::log(R)) + c_m * R * R / std::log(R) -
         K / (2.0 * T) * (R - 1.0) * (R - 1.0) / std::log(R - 1.0);
}

/// F(R) itself; overflows to +inf and underflows to 0 outside double range.
inline double uniqueness_decay_product(double c_m, double K, double T, double m, double R) {
  return std::exp(log_decay_product(c_m, K, T, m, R));
}

enum class DecayVerdict { decaying, growing, inconclusive };

inline std::string to_string(DecayVerdict v) {
  switch (v) {
    case DecayVerdict::decaying: return "decaying";
    case DecayVerdict::growing: return "growing";
    case DecayVerdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

/// Compares T with K/(2 C_M); equality (to 1e-12 relative) is the boundary case.
inline DecayVerdict decay_verdict(double c_m, double K, double T) {
  const double crit = K / (2.0 * c_m);
  if (std::abs(T - crit) <= 1e-12 * crit) return DecayVerdict::inconclusive;
  return T < crit ? DecayVerdict::decaying : DecayVerdict::growing;
}

/// C1 = m C_eps^{m-1}: the bound a(x,t) <= C1 log(2+rho) on the coefficient
/// (u^m - v^m)/(u - v) when |u|, |v| <= C_eps [log(2+rho)]^{1/(m-1)}.
inline double coefficient_bound(double c_eps, double m) {
  if (!(c_eps > 0.0)) throw DomainError("C_eps must be positive");
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  return m * std::pow(c_eps, m - 1.0);
}

}  // namespace pme
