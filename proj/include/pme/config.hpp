#pragma once

// Line-oriented `key = value` scenario files and their typed view.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pme/error.hpp"
#include "pme/geometry.hpp"
#include "pme/xlog.hpp"

namespace pme {

/// Raw key/value pairs in file order. `#` starts a comment.
struct ConfigFile {
  std::string source = "<string>";
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  bool has(const std::string& key) const { return values.count(key) != 0; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string where(const ConfigFile& f, const std::string& key) {
  auto it = f.lines.find(key);
  return it == f.lines.end() ? f.source : f.source + ":" + std::to_string(it->second);
}

}  // namespace detail

inline ConfigFile parse_config(const std::string& text, const std::string& source = "<string>") {
  ConfigFile f;
  f.source = source;
  std::istringstream in(text);
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(no) + ": expected `key = value`");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(no) + ": empty key");
    if (value.empty()) throw ConfigError(source + ":" + std::to_string(no) + ": empty value for `" + key + "`");
    if (f.values.count(key)) throw ConfigError(source + ":" + std::to_string(no) + ": duplicate key `" + key + "`");
    f.values[key] = value;
    f.lines[key] = no;
  }
  return f;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

/// Parses the whole string as a finite double.
inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto t = detail::trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
    throw ConfigError(what + ": `" + s + "` is not a finite number");
  }
  return v;
}

inline long parse_int(const std::string& s, const std::string& what) {
  long v = 0;
  const auto t = detail::trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(what + ": `" + s + "` is not an integer");
  }
  return v;
}

/// Comma-separated list of numbers.
inline std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, what));
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

/// `euclidean | hyperbolic | quad-critical | log-critical`; c is ignored by the first two.
inline ModelManifold make_manifold(const std::string& name, int dim, double c) {
  if (dim < 2) throw ConfigError("dim must be an integer >= 2");
  if (name == "euclidean") return ModelManifold::euclidean(dim);
  if (name == "hyperbolic") return ModelManifold::hyperbolic(dim);
  if (name == "quad-critical" || name == "log-critical") {
    if (!(c > 0.0)) throw ConfigError("manifold " + name + " needs c > 0");
    return name == "quad-critical" ? ModelManifold::quad_critical(dim, c) : ModelManifold::log_critical(dim, c);
  }
  throw ConfigError("unknown manifold `" + name + "` (euclidean | hyperbolic | quad-critical | log-critical)");
}

/// `log-growth(b) | bounded(B) | table(<csv path>)`.
inline DatumSpec parse_datum(const std::string& s) {
  static const std::regex re(R"(^\s*([a-z-]+)\s*\(\s*(.*?)\s*\)\s*$)");
  std::smatch mt;
  if (!std::regex_match(s, mt, re)) throw ConfigError("u0: `" + s + "` is not of the form kind(argument)");
  const std::string kind = mt[1], arg = mt[2];
  if (kind == "log-growth") return DatumSpec::log_growth(parse_double(arg, "u0 log-growth amplitude"));
  if (kind == "bounded") return DatumSpec::bounded(parse_double(arg, "u0 bounded level"));
  if (kind == "table") {
    if (arg.empty()) throw ConfigError("u0: table() needs a csv path");
    return read_table_datum(arg);
  }
  throw ConfigError("u0: unknown datum kind `" + kind + "` (log-growth | bounded | table)");
}

/// End time given either absolutely or as a multiple of the existence time (`0.5T`).
struct TimeSpec {
  double value = 0.5;
  bool relative = true;

  double resolve(double T) const { return relative ? value * T : value; }
};

inline TimeSpec parse_time(const std::string& s) {
  auto t = detail::trim(s);
  if (!t.empty() && t.back() == 'T') {
    t.pop_back();
    const double x = parse_double(t.empty() ? "1" : t, "t_end");
    if (!(x > 0.0 && x < 1.0)) throw ConfigError("t_end as a multiple of T must lie in (0, 1)");
    return {x, true};
  }
  const double x = parse_double(t, "t_end");
  if (!(x > 0.0)) throw ConfigError("t_end must be positive");
  return {x, false};
}

/// Typed scenario settings. Keys not listed in `known_keys()` are rejected.
struct Scenario {
  std::string manifold = "euclidean";
  int dim = 3;
  double c = 0.5;
  double m = 2.0;
  std::string u0_text = "log-growth(1)";
  std::optional<double> R;
  std::optional<long> cells;
  TimeSpec t_end;
  std::string boundary = "homogeneous";
  double dt0 = 1e-4;
  double dt_growth = 1.25;
  std::optional<double> dt_max;
  double newton_tol = 1e-12;
  double norm_r = 2.0;
  long snapshots = 10;
  double rho_max = 1000.0;
  long n_probe = 4000;
  std::vector<double> radii{25.0, 50.0, 100.0};
  double h = 0.05;
  double threshold = 1e3;
  double s_min_factor = 1e-7;
  long max_stages = 5000;
  long steps_per_stage = 10;
  double eps0 = 0.5;
  std::string blowup_boundary = "trace";
  std::vector<double> sweep_b, sweep_c, sweep_m;

  static const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "manifold", "dim",       "c",         "m",           "u0",           "R",          "cells",
        "t_end",    "boundary",  "dt0",       "dt_growth",   "dt_max",       "newton_tol", "norm_r",
        "snapshots", "rho_max",  "n_probe",   "radii",       "h",            "threshold",  "s_min_factor",
        "max_stages", "steps_per_stage", "eps0", "blowup_boundary", "sweep_b", "sweep_c",  "sweep_m"};
    return keys;
  }

  ModelManifold model() const { return make_manifold(manifold, dim, c); }
  DatumSpec datum() const { return parse_datum(u0_text); }

  /// Range checks that do not need the model or the datum.
  void validate() const {
    if (dim < 2) throw ConfigError("dim must be an integer >= 2");
    if (!(m > 1.0)) throw ConfigError("m must satisfy m > 1 (got " + std::to_string(m) + ")");
    if (R && !(*R > 0.0)) throw ConfigError("R must be positive");
    if (cells && *cells < 2) throw ConfigError("cells must be >= 2");
    if (boundary != "homogeneous" && boundary != "supersolution") {
      throw ConfigError("boundary must be homogeneous | supersolution");
    }
    if (!(dt0 > 0.0)) throw ConfigError("dt0 must be positive");
    if (!(dt_growth >= 1.0)) throw ConfigError("dt_growth must be >= 1");
    if (dt_max && !(*dt_max > 0.0)) throw ConfigError("dt_max must be positive");
    if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
    if (!(norm_r >= 2.0)) throw ConfigError("norm_r must be >= 2");
    if (snapshots < 1) throw ConfigError("snapshots must be >= 1");
    if (!(rho_max >= 10.0)) throw ConfigError("rho_max must be >= 10");
    if (n_probe < 1000) throw ConfigError("n_probe must be >= 1000");
    if (radii.size() < 2) throw ConfigError("radii needs at least two entries");
    if (!(h > 0.0)) throw ConfigError("h must be positive");
    if (!(threshold > 1.0)) throw ConfigError("threshold must exceed 1");
    if (!(s_min_factor > 0.0)) throw ConfigError("s_min_factor must be positive");
    if (max_stages < 1 || steps_per_stage < 1) throw ConfigError("stage counts must be positive");
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ConfigError("eps0 must lie in (0, 1)");
    if (blowup_boundary != "trace" && blowup_boundary != "subsolution") {
      throw ConfigError("blowup_boundary must be trace | subsolution");
    }
    for (double v : sweep_m) {
      if (!(v > 1.0)) throw ConfigError("sweep_m entries must satisfy m > 1");
    }
    for (double v : sweep_c) {
      if (!(v > 0.0)) throw ConfigError("sweep_c entries must be positive");
    }
  }
};

/// Builds a Scenario, rejecting unknown keys before reading any value.
inline Scenario scenario_from(const ConfigFile& f) {
  for (const auto& [key, value] : f.values) {
    if (!Scenario::known_keys().count(key)) {
      throw ConfigError(detail::where(f, key) + ": unknown key `" + key + "`");
    }
  }
  Scenario s;
  auto get = [&](const char* key) -> const std::string* {
    auto it = f.values.find(key);
    return it == f.values.end() ? nullptr : &it->second;
  };
  auto num = [&](const char* key, double& out) {
    if (auto v = get(key)) out = parse_double(*v, detail::where(f, key) + ": " + key);
  };
  auto integer = [&](const char* key, long& out) {
    if (auto v = get(key)) out = parse_int(*v, detail::where(f, key) + ": " + key);
  };
  if (auto v = get("manifold")) s.manifold = *v;
  if (auto v = get("dim")) s.dim = static_cast<int>(parse_int(*v, detail::where(f, "dim") + ": dim"));
  num("c", s.c);
  num("m", s.m);
  if (auto v = get("u0")) s.u0_text = *v;
  if (auto v = get("R")) s.R = parse_double(*v, detail::where(f, "R") + ": R");
  if (auto v = get("cells")) s.cells = parse_int(*v, detail::where(f, "cells") + ": cells");
  if (auto v = get("t_end")) s.t_end = parse_time(*v);
  if (auto v = get("boundary")) s.boundary = *v;
  num("dt0", s.dt0);
  num("dt_growth", s.dt_growth);
  if (auto v = get("dt_max")) s.dt_max = parse_double(*v, detail::where(f, "dt_max") + ": dt_max");
  num("newton_tol", s.newton_tol);
  num("norm_r", s.norm_r);
  integer("snapshots", s.snapshots);
  num("rho_max", s.rho_max);
  integer("n_probe", s.n_probe);
  if (auto v = get("radii")) s.radii = parse_list(*v, "radii");
  num("h", s.h);
  num("threshold", s.threshold);
  num("s_min_factor", s.s_min_factor);
  integer("max_stages", s.max_stages);
  integer("steps_per_stage", s.steps_per_stage);
  num("eps0", s.eps0);
  if (auto v = get("blowup_boundary")) s.blowup_boundary = *v;
  if (auto v = get("sweep_b")) s.sweep_b = parse_list(*v, "sweep_b");
  if (auto v = get("sweep_c")) s.sweep_c = parse_list(*v, "sweep_c");
  if (auto v = get("sweep_m")) s.sweep_m = parse_list(*v, "sweep_m");
  s.validate();
  // Fail on a bad manifold or datum before any computation starts.
  (void)s.model();
  (void)s.datum();
  return s;
}

}  // namespace pme
