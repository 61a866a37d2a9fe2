#pragma once

// Rotationally symmetric model manifolds M_psi with metric d rho^2 + psi(rho)^2 d theta^2.
//
// Every quantity that can overflow for the exponentially warped families is
// exposed in logarithmic or ratio form (log psi, psi'/psi, psi''/psi), which is
// what the drift, the curvatures and the finite-volume weights actually need.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pme/error.hpp"

namespace pme {

enum class ModelKind { euclidean, hyperbolic, quad_critical, log_critical, custom };

inline std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::euclidean: return "euclidean";
    case ModelKind::hyperbolic: return "hyperbolic";
    case ModelKind::quad_critical: return "quad-critical";
    case ModelKind::log_critical: return "log-critical";
    case ModelKind::custom: return "custom";
  }
  return "unknown";
}

/// Geometric probe grid: n points from lo to hi with constant ratio.
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw DomainError("geometric_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> out(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

/// |S^{N-1}| = 2 pi^{N/2} / Gamma(N/2).
inline double unit_sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
}

class ModelManifold {
 public:
  using ScalarFn = std::function<double(double)>;

  static ModelManifold euclidean(int dim) {
    ModelManifold m(dim, ModelKind::euclidean, 0.0);
    m.validate();
    return m;
  }

  static ModelManifold hyperbolic(int dim) {
    ModelManifold m(dim, ModelKind::hyperbolic, 0.0);
    m.validate();
    return m;
  }

  /// psi(rho) = rho exp(c rho^2): K_omega = -(6c + 4c^2 rho^2).
  static ModelManifold quad_critical(int dim, double c) {
    if (!(c > 0.0)) throw DomainError("quad-critical model needs c > 0");
    ModelManifold m(dim, ModelKind::quad_critical, c);
    m.validate();
    return m;
  }

  /// psi(rho) = rho exp(c rho^2 / log(e + rho)).
  static ModelManifold log_critical(int dim, double c) {
    if (!(c > 0.0)) throw DomainError("log-critical model needs c > 0");
    ModelManifold m(dim, ModelKind::log_critical, c);
    m.validate();
    return m;
  }

  /// User-supplied warping function; derivatives come from difference quotients.
  static ModelManifold custom(int dim, ScalarFn psi) {
    if (!psi) throw DomainError("custom model needs a warping function");
    ModelManifold m(dim, ModelKind::custom, 0.0);
    m.custom_psi_ = std::move(psi);
    m.validate();
    return m;
  }

  int dim() const noexcept { return dim_; }
  ModelKind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  bool is_builtin() const noexcept { return kind_ != ModelKind::custom; }
  std::string name() const { return to_string(kind_); }

  double psi(double rho) const {
    require_positive(rho);
    if (kind_ == ModelKind::custom) return custom_psi_(rho);
    return std::exp(log_psi(rho));
  }

  double log_psi(double rho) const {
    require_positive(rho);
    switch (kind_) {
      case ModelKind::euclidean: return std::log(rho);
      case ModelKind::hyperbolic:
        if (rho < 20.0) return std::log(std::sinh(rho));
        return rho - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * rho));
      case ModelKind::quad_critical: return std::log(rho) + c_ * rho * rho;
      case ModelKind::log_critical: return std::log(rho) + c_ * rho * rho / std::log(std::numbers::e + rho);
      case ModelKind::custom: {
        const double v = custom_psi_(rho);
        if (!(v > 0.0)) throw InvalidManifold("psi(rho) <= 0 at rho = " + std::to_string(rho));
        return std::log(v);
      }
    }
    return 0.0;
  }

  /// psi'(rho) / psi(rho).
  double dpsi_over_psi(double rho) const {
    require_positive(rho);
    switch (kind_) {
      case ModelKind::euclidean: return 1.0 / rho;
      case ModelKind::hyperbolic: return 1.0 / std::tanh(rho);
      case ModelKind::quad_critical: return 1.0 / rho + 2.0 * c_ * rho;
      case ModelKind::log_critical: return 1.0 / rho + log_exponent_d1(rho);
      case ModelKind::custom: return custom_d1(rho) / checked_custom_psi(rho);
    }
    return 0.0;
  }

  /// psi''(rho) / psi(rho).
  double ddpsi_over_psi(double rho) const {
    require_positive(rho);
    switch (kind_) {
      case ModelKind::euclidean: return 0.0;
      case ModelKind::hyperbolic: return 1.0;
      case ModelKind::quad_critical: return 6.0 * c_ + 4.0 * c_ * c_ * rho * rho;
      case ModelKind::log_critical: {
        const double g1 = log_exponent_d1(rho);
        return 2.0 * g1 / rho + g1 * g1 + log_exponent_d2(rho);
      }
      case ModelKind::custom: return custom_d2(rho) / checked_custom_psi(rho);
    }
    return 0.0;
  }

  double dpsi(double rho) const {
    if (kind_ == ModelKind::custom) return custom_d1(rho);
    return psi(rho) * dpsi_over_psi(rho);
  }

  double ddpsi(double rho) const {
    if (kind_ == ModelKind::custom) return custom_d2(rho);
    return psi(rho) * ddpsi_over_psi(rho);
  }

  /// Central difference for psi' at h = 1e-5 max(1, rho).
  double difference_dpsi(double rho) const {
    const double h = std::min(1e-5 * std::max(1.0, rho), 0.5 * rho);
    return (raw_psi(rho + h) - raw_psi(rho - h)) / (2.0 * h);
  }

  /// Five-point fourth-order stencil for psi''. The step is 1e-3 max(1, rho):
  /// at 1e-5 the cancellation error of any second difference exceeds 1e-6.
  double difference_ddpsi(double rho) const {
    const double h = std::min(1e-3 * std::max(1.0, rho), 0.25 * rho);
    const double f0 = raw_psi(rho);
    const double fp1 = raw_psi(rho + h), fm1 = raw_psi(rho - h);
    const double fp2 = raw_psi(rho + 2 * h), fm2 = raw_psi(rho - 2 * h);
    return (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
  }

 private:
  ModelManifold(int dim, ModelKind kind, double c) : dim_(dim), kind_(kind), c_(c) {
    if (dim < 2) throw DomainError("model dimension must be >= 2");
  }

  static void require_positive(double rho) {
    if (!(rho > 0.0)) throw DomainError("radial coordinate must be positive");
  }

  double raw_psi(double rho) const {
    if (kind_ == ModelKind::custom) return custom_psi_(rho);
    return std::exp(log_psi(rho));
  }

  double checked_custom_psi(double rho) const {
    const double v = custom_psi_(rho);
    if (!(v > 0.0)) throw InvalidManifold("psi(rho) <= 0 at rho = " + std::to_string(rho));
    return v;
  }

  double custom_d1(double rho) const { return difference_dpsi(rho); }
  double custom_d2(double rho) const { return difference_ddpsi(rho); }

  // Exponent g(rho) = c rho^2 / log(e + rho) of the log-critical family.
  double log_exponent_d1(double rho) const {
    const double L = std::log(std::numbers::e + rho);
    const double s = std::numbers::e + rho;
    return c_ * (2.0 * rho / L - rho * rho / (L * L * s));
  }

  double log_exponent_d2(double rho) const {
    const double L = std::log(std::numbers::e + rho);
    const double s = std::numbers::e + rho;
    return c_ * (2.0 / L - 4.0 * rho / (L * L * s) + rho * rho * (2.0 / (L * L * L) + 1.0 / (L * L)) / (s * s));
  }

  // Class A limits along rho = 1e-2, 1e-3, 1e-4 (deviations must shrink and end
  // below 1e-4), positivity, and convexity psi'' >= 0 on a probe grid.
  void validate() const {
    const double probes[] = {1e-2, 1e-3, 1e-4};
    double prev_val = std::numeric_limits<double>::infinity();
    double prev_der = std::numeric_limits<double>::infinity();
    for (double rho : probes) {
      const double v = raw_psi(rho);
      if (!(v > 0.0)) throw InvalidManifold("psi must be positive near the pole");
      const double dev_val = std::abs(v / rho - 1.0);
      const double dev_der = std::abs(dpsi(rho) - 1.0);
      if (dev_val > prev_val * (1.0 + 1e-9) + 1e-9 || dev_der > prev_der * (1.0 + 1e-9) + 1e-9) {
        throw InvalidManifold("psi(0+) = 0, psi'(0+) = 1 not approached along the pole probes");
      }
      prev_val = dev_val;
      prev_der = dev_der;
    }
    if (prev_val > 1e-4 || prev_der > 1e-4) {
      throw InvalidManifold("psi is not in class A: psi(rho)/rho or psi'(rho) deviates from 1 at rho = 1e-4");
    }
    for (double rho : geometric_grid(1e-3, 100.0, 200)) {
      if (kind_ == ModelKind::custom) checked_custom_psi(rho);
      const double k = ddpsi_over_psi(rho);
      if (!std::isfinite(k)) throw InvalidManifold("psi''/psi not finite at rho = " + std::to_string(rho));
      if (k < -1e-12 * std::max(1.0, std::abs(k))) {
        throw InvalidManifold("psi is not convex (positive sectional curvature) at rho = " + std::to_string(rho));
      }
    }
  }

  int dim_;
  ModelKind kind_;
  double c_;
  ScalarFn custom_psi_;
};

/// Radial drift m(rho) = (N-1) psi'/psi, the Laplacian of the distance function.
inline double drift(const ModelManifold& M, double rho) {
  if (!(rho > 0.0)) throw DomainError("drift: rho must be positive");
  return (M.dim() - 1) * M.dpsi_over_psi(rho);
}

struct CurvatureSample {
  double sectional;     // K_omega
  double ricci_radial;  // Ric_o
};

inline CurvatureSample curvature(const ModelManifold& M, double rho) {
  if (!(rho > 0.0)) throw DomainError("curvature: rho must be positive");
  const double k = -M.ddpsi_over_psi(rho);
  return {k, (M.dim() - 1) * k};
}

inline double log_surface_measure(const ModelManifold& M, double R) {
  if (!(R > 0.0)) throw DomainError("surface_measure: R must be positive");
  return std::log(unit_sphere_area(M.dim())) + (M.dim() - 1) * M.log_psi(R);
}

/// meas(S_R) = |S^{N-1}| psi(R)^{N-1}.
inline double surface_measure(const ModelManifold& M, double R) { return std::exp(log_surface_measure(M, R)); }

/// Certified constants of the Laplacian and volume comparison bounds. Each
/// optional is absent when the model does not satisfy the corresponding bound.
struct ComparisonConstants {
  double c_prime = 0.0;                   // m <= C'(1+rho^2)/rho
  std::optional<double> c_double_prime;   // m >= C''(1+rho^2)/rho
  double c_o = 0.0;                       // Ric_o >= -C_o (1+rho^2)
  std::optional<double> c_o_log;          // Ric_o >= -C_o (1+rho^2)/log(2+rho)^2
  std::optional<double> k_o;              // K_omega <= -K_o rho^2 for rho >= r_o
  double r_o = 1.0;
  std::optional<double> c_m;              // meas(S_R) <= exp(C_M R^2/log R), R >= 2
  double margin = 1e-3;
  /// Probe at which each extremum is attained; 0 = pole limit, +inf = tail limit.
  std::map<std::string, double> attained_at;
};

namespace detail {

struct Extremum {
  double value;
  double at;
};

inline Extremum take_max(Extremum a, Extremum b) { return b.value > a.value ? b : a; }
inline Extremum take_min(Extremum a, Extremum b) { return b.value < a.value ? b : a; }

// Limits of the probed ratios at rho -> 0+ and rho -> infinity, per built-in family.
struct FamilyLimits {
  std::optional<double> drift_origin, drift_tail;
  std::optional<double> ric_origin, ric_tail;
  std::optional<double> ric_log_tail;  // nullopt with diverges = true means unbounded
  bool ric_log_diverges = false;
  std::optional<double> sect_tail;
  std::optional<double> meas_tail;
  bool meas_diverges = false;
};

inline FamilyLimits family_limits(const ModelManifold& M) {
  const double n1 = M.dim() - 1;
  const double c = M.c();
  FamilyLimits f;
  f.drift_origin = n1;  // rho m(rho) -> N-1 for every psi in class A
  switch (M.kind()) {
    case ModelKind::euclidean:
      f.drift_tail = 0.0;
      f.ric_origin = 0.0;
      f.ric_tail = 0.0;
      f.ric_log_tail = 0.0;
      f.sect_tail = 0.0;
      f.meas_tail = 0.0;
      break;
    case ModelKind::hyperbolic:
      f.drift_tail = 0.0;
      f.ric_origin = n1;
      f.ric_tail = 0.0;
      f.ric_log_tail = 0.0;
      f.sect_tail = 0.0;
      f.meas_tail = 0.0;
      break;
    case ModelKind::quad_critical:
      f.drift_tail = 2.0 * c * n1;
      f.ric_origin = 6.0 * c * n1;
      f.ric_tail = 4.0 * c * c * n1;
      f.ric_log_diverges = true;
      f.sect_tail = 4.0 * c * c;
      f.meas_diverges = true;
      break;
    case ModelKind::log_critical:
      f.drift_tail = 0.0;
      f.ric_origin = 6.0 * c * n1;
      f.ric_tail = 0.0;
      f.ric_log_tail = 4.0 * c * c * n1;
      f.sect_tail = 0.0;
      f.meas_tail = n1 * c;
      break;
    case ModelKind::custom:
      f.drift_origin = n1;
      break;
  }
  return f;
}

// Grid growth check: a ratio that keeps growing by more than 2x over the last
// decade of probes is treated as unbounded.
inline void check_bounded(const std::vector<double>& probes, const std::vector<double>& values, const char* what) {
  const std::size_t n = probes.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values[i])) {
      throw NotCritical(std::string(what) + " is not finite at probe rho = " + std::to_string(probes[i]), probes[i]);
    }
  }
  const double decade = probes.back() / 10.0;
  std::size_t k = 0;
  while (k + 1 < n && probes[k] < decade) ++k;
  if (values[n - 1] > 2.0 * values[k] && values[n - 1] > values[n - 2] && values[n - 1] > 0.0) {
    throw NotCritical(std::string(what) + " grows faster than the quadratic bound; offending probe rho = " +
                          std::to_string(probes.back()),
                      probes.back());
  }
}

}  // namespace detail

/// Fits certified comparison constants on a geometric probe grid [1e-3, rho_max]
/// and, for the built-in families, the analytic pole and tail limits. Each
/// supremum is inflated (each infimum deflated) by the relative margin 1e-3.
inline ComparisonConstants fit_comparison_constants(const ModelManifold& M, double rho_max, std::size_t n_probe) {
  if (rho_max < 10.0) throw DomainError("fit_comparison_constants: rho_max must be >= 10");
  if (n_probe < 1000) throw DomainError("fit_comparison_constants: n_probe must be >= 1000");
  using detail::Extremum;
  const double inf = std::numeric_limits<double>::infinity();
  const auto probes = geometric_grid(1e-3, rho_max, n_probe);
  const double n1 = M.dim() - 1;
  const auto lim = detail::family_limits(M);
  const bool builtin = M.is_builtin();

  ComparisonConstants out;
  const double margin = out.margin;

  std::vector<double> q(n_probe), s(n_probe), slog(n_probe), sect(n_probe);
  for (std::size_t i = 0; i < n_probe; ++i) {
    const double r = probes[i];
    const double w = 1.0 + r * r;
    q[i] = r * drift(M, r) / w;
    const double pp = M.ddpsi_over_psi(r);
    s[i] = n1 * pp / w;
    const double lg = std::log(2.0 + r);
    slog[i] = s[i] * lg * lg;
    sect[i] = pp / (r * r);
  }
  if (!builtin) {
    detail::check_bounded(probes, q, "rho m(rho)/(1+rho^2)");
    detail::check_bounded(probes, s, "-Ric_o/(1+rho^2)");
  }

  // Upper drift constant C'.
  Extremum sup_q{-inf, 0.0}, inf_q{inf, 0.0};
  for (std::size_t i = 0; i < n_probe; ++i) {
    sup_q = detail::take_max(sup_q, {q[i], probes[i]});
    inf_q = detail::take_min(inf_q, {q[i], probes[i]});
  }
  if (lim.drift_origin) {
    sup_q = detail::take_max(sup_q, {*lim.drift_origin, 0.0});
    inf_q = detail::take_min(inf_q, {*lim.drift_origin, 0.0});
  }
  if (builtin && lim.drift_tail) {
    sup_q = detail::take_max(sup_q, {*lim.drift_tail, inf});
    inf_q = detail::take_min(inf_q, {*lim.drift_tail, inf});
  } else if (!builtin && q.back() < q[q.size() - 2]) {
    // A decreasing custom tail cannot be certified from below.
    inf_q = {0.0, inf};
  }
  out.c_prime = (1.0 + margin) * sup_q.value;
  out.attained_at["c_prime"] = sup_q.at;
  if (inf_q.value > 1e-12) {
    out.c_double_prime = inf_q.value / (1.0 + margin);
    out.attained_at["c_double_prime"] = inf_q.at;
  }

  // Ricci bound C_o.
  Extremum sup_s{-inf, 0.0};
  for (std::size_t i = 0; i < n_probe; ++i) sup_s = detail::take_max(sup_s, {s[i], probes[i]});
  if (lim.ric_origin) sup_s = detail::take_max(sup_s, {*lim.ric_origin, 0.0});
  if (builtin && lim.ric_tail) sup_s = detail::take_max(sup_s, {*lim.ric_tail, inf});
  out.c_o = (1.0 + margin) * std::max(sup_s.value, 0.0);
  out.attained_at["c_o"] = sup_s.at;

  // Logarithmically improved Ricci bound.
  if (!lim.ric_log_diverges) {
    Extremum sup_l{-inf, 0.0};
    for (std::size_t i = 0; i < n_probe; ++i) sup_l = detail::take_max(sup_l, {slog[i], probes[i]});
    if (lim.ric_origin) sup_l = detail::take_max(sup_l, {*lim.ric_origin * std::log(2.0) * std::log(2.0), 0.0});
    if (builtin && lim.ric_log_tail) sup_l = detail::take_max(sup_l, {*lim.ric_log_tail, inf});
    bool bounded = builtin;
    if (!builtin) {
      try {
        detail::check_bounded(probes, slog, "-Ric_o log(2+rho)^2/(1+rho^2)");
        bounded = true;
      } catch (const NotCritical&) {
        bounded = false;
      }
    }
    if (bounded) {
      out.c_o_log = (1.0 + margin) * std::max(sup_l.value, 0.0);
      out.attained_at["c_o_log"] = sup_l.at;
    }
  }

  // Sectional upper bound K_omega <= -K_o rho^2 beyond R_o = 1.
  {
    Extremum inf_k{inf, 0.0};
    for (std::size_t i = 0; i < n_probe; ++i) {
      if (probes[i] >= out.r_o) inf_k = detail::take_min(inf_k, {sect[i], probes[i]});
    }
    if (builtin && lim.sect_tail) inf_k = detail::take_min(inf_k, {*lim.sect_tail, inf});
    if (!builtin && sect.back() < sect[sect.size() - 2]) inf_k = {0.0, inf};
    if (inf_k.value > 1e-12) {
      out.k_o = inf_k.value / (1.0 + margin);
      out.attained_at["k_o"] = inf_k.at;
    }
  }

  // Surface-measure exponent: log meas(S_R) log R / R^2 over R >= 2.
  if (!lim.meas_diverges) {
    std::vector<double> rp, sig;
    for (double r : probes) {
      if (r < 2.0) continue;
      rp.push_back(r);
      sig.push_back(log_surface_measure(M, r) * std::log(r) / (r * r));
    }
    Extremum sup_m{-inf, 0.0};
    for (std::size_t i = 0; i < rp.size(); ++i) sup_m = detail::take_max(sup_m, {sig[i], rp[i]});
    bool bounded = builtin;
    if (builtin && lim.meas_tail) sup_m = detail::take_max(sup_m, {*lim.meas_tail, inf});
    if (!builtin && rp.size() > 2) {
      try {
        detail::check_bounded(rp, sig, "log meas(S_R) log R / R^2");
        bounded = true;
      } catch (const NotCritical&) {
        bounded = false;
      }
    }
    if (bounded) {
      // A positive floor keeps the exponent a valid (positive) constant on flat models.
      out.c_m = (1.0 + margin) * std::max(sup_m.value, margin);
      out.attained_at["c_m"] = sup_m.at;
    }
  }
  return out;
}

}  // namespace pme
