#pragma once

// The weighted space X_log of functions growing at most like (log rho)^{1/(m-1)},
// with the norms ||f||_{log,r} = sup |f| / [log(r^2 + rho^2)]^{1/(m-1)}, r >= 2.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pme/error.hpp"

namespace pme {

/// Parameters of one member of the norm family.
struct LogNorm {
  double r = 2.0;
  double m = 2.0;

  double exponent() const { return 1.0 / (m - 1.0); }

  void validate() const {
    if (!(r >= 2.0)) throw DomainError("log norm needs r >= 2");
    if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  }
};

namespace detail {

// log(r^2 + rho^2) evaluated from x = log rho without forming rho^2.
inline double log_r2_plus_rho2(double r, double x) {
  if (x > 300.0) return 2.0 * x + std::log1p(r * r * std::exp(-2.0 * x));
  const double rho = std::exp(x);
  return std::log(r * r + rho * rho);
}

}  // namespace detail

/// Closed-form description of a radial function beyond rho_tail.
struct TailDescriptor {
  enum class Kind {
    log_growth,  // amplitude * (log rho)^{1/(m-1)}
    bounded,     // the constant amplitude
    barrier,     // (amplitude^m [log(r^2+rho^2)]^{m/(m-1)} - shift)_+^{1/m}
  };

  Kind kind = Kind::log_growth;
  double rho_tail = std::numbers::e;
  double amplitude = 1.0;
  double r = 2.0;
  double shift = 0.0;

  static TailDescriptor log_growth(double b, double rho_tail = std::numbers::e) {
    if (!(rho_tail >= 1.0)) throw DomainError("log-growth tail must start at rho >= 1");
    return {Kind::log_growth, rho_tail, b, 2.0, 0.0};
  }
  static TailDescriptor bounded(double B, double rho_tail = 0.0) { return {Kind::bounded, rho_tail, B, 2.0, 0.0}; }
  static TailDescriptor barrier(double A, double r, double shift, double rho_tail) {
    return {Kind::barrier, rho_tail, A, r, shift};
  }

  /// Value at x = log rho.
  double value_at_log(double x, double m) const {
    const double p = 1.0 / (m - 1.0);
    switch (kind) {
      case Kind::log_growth: return amplitude * std::pow(std::max(x, 0.0), p);
      case Kind::bounded: return amplitude;
      case Kind::barrier: {
        const double base = std::pow(std::abs(amplitude), m) * std::pow(detail::log_r2_plus_rho2(r, x), m * p) - shift;
        const double mag = base > 0.0 ? std::pow(base, 1.0 / m) : 0.0;
        return amplitude < 0.0 ? -mag : mag;
      }
    }
    return 0.0;
  }

  double value(double rho, double m) const { return value_at_log(std::log(rho), m); }

  /// lim_{rho -> infinity} |f(rho)| / (log rho)^{1/(m-1)}.
  double literal_ratio_limit(double m) const {
    const double p = 1.0 / (m - 1.0);
    switch (kind) {
      case Kind::log_growth: return std::abs(amplitude);
      case Kind::bounded: return 0.0;
      case Kind::barrier: return std::abs(amplitude) * std::pow(2.0, p);
    }
    return 0.0;
  }
};

/// Samples of a radial function on nodes, plus an optional exact tail.
struct RadialDatum {
  std::vector<double> rho;
  std::vector<double> values;
  std::optional<TailDescriptor> tail;
};

/// Checks the three outermost nodes inside the tail region against the tail.
inline void check_tail_consistency(const RadialDatum& f, double m) {
  if (!f.tail) return;
  int checked = 0;
  for (std::size_t i = f.rho.size(); i-- > 0 && checked < 3;) {
    if (f.rho[i] < f.tail->rho_tail) break;
    const double expected = f.tail->value(f.rho[i], m);
    const double err = std::abs(f.values[i] - expected);
    if (err > 1e-8 * std::max(std::abs(expected), 1e-300)) {
      throw TailMismatch("tail descriptor disagrees with the sample at rho = " + std::to_string(f.rho[i]));
    }
    ++checked;
  }
}

namespace detail {

// sup over rho >= rho_tail of |tail(rho)| / [log(r^2+rho^2)]^p, scanned in log rho
// up to rho = e^690 and closed with the limit at infinity.
inline double tail_weighted_sup(const TailDescriptor& tail, const LogNorm& n) {
  const double p = n.exponent();
  const double x0 = tail.rho_tail > 0.0 ? std::log(tail.rho_tail) : std::log(1e-12);
  const double x1 = 690.0;
  double best = std::pow(2.0, -p) * tail.literal_ratio_limit(n.m);
  if (!(x1 > x0)) return best;
  constexpr int samples = 20000;
  for (int i = 0; i <= samples; ++i) {
    const double x = x0 + (x1 - x0) * i / samples;
    const double w = std::pow(log_r2_plus_rho2(n.r, x), p);
    best = std::max(best, std::abs(tail.value_at_log(x, n.m)) / w);
  }
  return best;
}

}  // namespace detail

/// ||f||_{log,r}: discrete supremum over the nodes combined with the exact tail supremum.
inline double log_norm(const RadialDatum& f, const LogNorm& n) {
  n.validate();
  if (f.rho.empty() || f.rho.size() != f.values.size()) throw DomainError("log_norm: empty or ragged grid");
  check_tail_consistency(f, n.m);
  const double p = n.exponent();
  double best = 0.0;
  for (std::size_t i = 0; i < f.rho.size(); ++i) {
    if (f.tail && f.rho[i] >= f.tail->rho_tail) continue;  // covered exactly by the tail
    const double w = std::pow(std::log(n.r * n.r + f.rho[i] * f.rho[i]), p);
    best = std::max(best, std::abs(f.values[i]) / w);
  }
  if (f.tail) best = std::max(best, detail::tail_weighted_sup(*f.tail, n));
  return best;
}

/// Plain node supremum, used on solver states where no tail exists.
inline double log_norm(std::span<const double> rho, std::span<const double> values, const LogNorm& n) {
  n.validate();
  if (rho.empty() || rho.size() != values.size()) throw DomainError("log_norm: empty or ragged grid");
  const double p = n.exponent();
  double best = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    best = std::max(best, std::abs(values[i]) / std::pow(std::log(n.r * n.r + rho[i] * rho[i]), p));
  }
  return best;
}

struct RatioEstimate {
  double value = 0.0;
  bool estimate = false;  // true when read off the grid window rather than a tail
};

namespace detail {

template <class Reduce>
RatioEstimate window_ratio(const RadialDatum& f, double m, Reduce reduce, double init) {
  if (f.rho.empty()) throw DomainError("ratio estimate: empty grid");
  const double rho_max = *std::max_element(f.rho.begin(), f.rho.end());
  if (rho_max < 1e3) throw DomainError("ratio estimate needs a grid reaching rho >= 1e3 or a tail descriptor");
  const double p = 1.0 / (m - 1.0);
  double acc = init;
  for (std::size_t i = 0; i < f.rho.size(); ++i) {
    if (f.rho[i] < rho_max / 10.0) continue;
    acc = reduce(acc, std::abs(f.values[i]) / std::pow(std::log(f.rho[i]), p));
  }
  return {acc, true};
}

}  // namespace detail

/// limsup_{rho -> infinity} |f| / (log rho)^{1/(m-1)}.
inline RatioEstimate limsup_ratio(const RadialDatum& f, double m) {
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  if (f.tail) return {f.tail->literal_ratio_limit(m), false};
  return detail::window_ratio(f, m, [](double a, double b) { return std::max(a, b); }, 0.0);
}

/// liminf_{rho -> infinity} f / (log rho)^{1/(m-1)} for nonnegative tails.
inline RatioEstimate liminf_ratio(const RadialDatum& f, double m) {
  if (!(m > 1.0)) throw DomainError("PME exponent must satisfy m > 1");
  if (f.tail) {
    const double v = f.tail->amplitude > 0.0 ? f.tail->literal_ratio_limit(m) : 0.0;
    return {v, false};
  }
  return detail::window_ratio(
      f, m, [](double a, double b) { return std::min(a, b); }, std::numeric_limits<double>::infinity());
}

/// lim_{r -> infinity} ||f||_{log,r}. Since log(r^2+rho^2) ~ 2 log rho this is
/// 2^{-1/(m-1)} times the limsup ratio.
inline double asymptotic_norm(const RadialDatum& f, double m) {
  return std::pow(2.0, -1.0 / (m - 1.0)) * limsup_ratio(f, m).value;
}

inline double asymptotic_liminf(const RadialDatum& f, double m) {
  return std::pow(2.0, -1.0 / (m - 1.0)) * liminf_ratio(f, m).value;
}

/// Analytic initial data: u0 = log-growth(b) | bounded(B) | table(path).
struct DatumSpec {
  enum class Kind { log_growth, bounded, table };
  Kind kind = Kind::log_growth;
  double amplitude = 1.0;
  std::vector<double> table_rho;
  std::vector<double> table_value;

  static DatumSpec log_growth(double b) { return {Kind::log_growth, b, {}, {}}; }
  static DatumSpec bounded(double B) { return {Kind::bounded, B, {}, {}}; }
  static DatumSpec table(std::vector<double> rho, std::vector<double> value) {
    if (rho.size() < 2 || rho.size() != value.size()) throw DomainError("table datum needs >= 2 matching rows");
    if (!std::is_sorted(rho.begin(), rho.end())) throw DomainError("table datum rho column must increase");
    return {Kind::table, 1.0, std::move(rho), std::move(value)};
  }

  /// b [log max(rho, e)]^{1/(m-1)} for log-growth; constant for bounded; linear
  /// interpolation (constant extrapolation) for tables.
  double operator()(double rho, double m) const {
    switch (kind) {
      case Kind::log_growth:
        return amplitude * std::pow(std::log(std::max(rho, std::numbers::e)), 1.0 / (m - 1.0));
      case Kind::bounded: return amplitude;
      case Kind::table: {
        if (rho <= table_rho.front()) return table_value.front();
        if (rho >= table_rho.back()) return table_value.back();
        const auto it = std::upper_bound(table_rho.begin(), table_rho.end(), rho);
        const std::size_t k = static_cast<std::size_t>(it - table_rho.begin());
        const double s = (rho - table_rho[k - 1]) / (table_rho[k] - table_rho[k - 1]);
        return (1.0 - s) * table_value[k - 1] + s * table_value[k];
      }
    }
    return 0.0;
  }

  std::optional<TailDescriptor> tail() const {
    switch (kind) {
      case Kind::log_growth: return TailDescriptor::log_growth(amplitude);
      case Kind::bounded: return TailDescriptor::bounded(amplitude);
      case Kind::table: return std::nullopt;
    }
    return std::nullopt;
  }

  RadialDatum sample(std::span<const double> rho, double m) const {
    RadialDatum out;
    out.rho.assign(rho.begin(), rho.end());
    out.values.reserve(rho.size());
    for (double r : rho) out.values.push_back((*this)(r, m));
    out.tail = tail();
    return out;
  }
};

/// Reads a two-column `rho,value` CSV with a header row.
inline DatumSpec read_table_datum(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table datum '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("table datum '" + path + "' is empty");
  std::vector<double> rho, val;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b)) {
      throw ConfigError("table datum line " + std::to_string(lineno) + ": expected rho,value");
    }
    try {
      rho.push_back(std::stod(a));
      val.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw ConfigError("table datum line " + std::to_string(lineno) + ": not a number");
    }
  }
  try {
    return DatumSpec::table(std::move(rho), std::move(val));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("table datum: ") + e.what());
  }
}

}  // namespace pme
