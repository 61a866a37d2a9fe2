#pragma once

// Scenario runner behind the `pme` tool. Every command returns an exit code:
// 0 success, 2 configuration error, 3 failed certificate, 4 solver failure.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pme/barriers.hpp"
#include "pme/blowup.hpp"
#include "pme/config.hpp"
#include "pme/geometry.hpp"
#include "pme/solver.hpp"

namespace pme::cli {

using json = nlohmann::ordered_json;

enum Exit : int { ok = 0, config_error = 2, certificate_failure = 3, solver_failure = 4 };

struct Context {
  bool verbose = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;

  void log(const std::string& msg) const {
    if (verbose) *err << "[pme] " << msg << '\n';
  }
};

/// Writes to `path.tmp` and renames over `path`.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path() && !fs::exists(target.parent_path())) {
    throw ConfigError("output directory does not exist: " + target.parent_path().string());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw ConfigError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Finite numbers as JSON numbers, the rest as strings ("inf", "-inf", "nan").
inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline json opt_num(const std::optional<double>& x) { return x ? num(*x) : json(nullptr); }

inline json constants_json(const ComparisonConstants& k) {
  json at = json::object();
  for (const auto& [name, rho] : k.attained_at) at[name] = num(rho);
  return json{{"c_prime", num(k.c_prime)},       {"c_double_prime", opt_num(k.c_double_prime)},
              {"c_o", num(k.c_o)},               {"c_m", opt_num(k.c_m)},
              {"c_o_log", opt_num(k.c_o_log)},   {"k_o", opt_num(k.k_o)},
              {"r_o", num(k.r_o)},               {"margin", num(k.margin)},
              {"attained_at", at}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- geometry

struct GeometryArgs {
  std::string manifold = "euclidean";
  int dim = 3;
  double c = 0.5;
  double rho_max = 1000.0;
  long n_probe = 4000;
  std::string report;
};

inline int geometry(const GeometryArgs& a, const Context& ctx) {
  if (!(a.rho_max >= 10.0)) throw ConfigError("--rho-max must be >= 10");
  if (a.n_probe < 1000) throw ConfigError("--n-probe must be >= 1000");
  const auto M = make_manifold(a.manifold, a.dim, a.c);
  ctx.log("fitting comparison constants for " + M.name());
  const auto k = fit_comparison_constants(M, a.rho_max, static_cast<std::size_t>(a.n_probe));
  json j = constants_json(k);
  j["manifold"] = M.name();
  j["dim"] = a.dim;
  j["c"] = num(M.c());
  j["rho_max"] = num(a.rho_max);
  j["n_probe"] = a.n_probe;
  if (a.report.empty()) {
    *ctx.out << dump(j);
  } else {
    write_atomic(a.report, dump(j));
  }
  return ok;
}

// ----------------------------------------------------------- barrier-check

struct BarrierCheckArgs {
  std::string manifold = "euclidean";
  int dim = 3;
  double c = 0.5;
  double m = 2.0;
  std::string which = "super";
  double rho_max = 1000.0;
  double c2 = 1.0;
  std::string out;
};

inline int barrier_check(const BarrierCheckArgs& a, const Context& ctx) {
  if (!(a.m > 1.0)) throw ConfigError("m must satisfy m > 1");
  if (!(a.rho_max > 2.0)) throw ConfigError("--rho-max must exceed 2");
  if (a.which != "super" && a.which != "sub" && a.which != "eta") throw ConfigError("--which must be super | sub | eta");
  const auto M = make_manifold(a.manifold, a.dim, a.c);
  json cert;
  cert["which"] = a.which;
  cert["manifold"] = M.name();
  cert["dim"] = a.dim;
  cert["m"] = num(a.m);
  bool pass = false;
  if (a.which == "eta") {
    EtaBarrierParams p;
    p.C2 = a.c2;
    p.K = select_K(a.c2, p.R0);
    const auto c = certify_eta(p, a.dim, a.rho_max);
    pass = c.pass;
    cert["pass"] = pass;
    cert["min_residual"] = num(-c.max_relative);
    cert["argmin_rho"] = num(c.worst_rho);
    cert["argmin_t"] = num(c.worst_t);
    cert["signs_ok"] = c.signs_ok;
    cert["nodes"] = c.nodes;
    cert["params"] = {{"a", nullptr}, {"r", nullptr}, {"K", num(p.K)}, {"C2", num(p.C2)}, {"R0", num(p.R0)}};
  } else {
    ctx.log("fitting comparison constants for " + M.name());
    const auto k = fit_comparison_constants(M, std::max(1000.0, a.rho_max), 4000);
    const auto grid = certification_grid(1e-3, a.rho_max, 10000);
    BarrierCertificate c;
    std::string reason;
    if (a.which == "super") {
      c = certify_supersolution(BarrierParams{supersolution_amplitude(k.c_prime, a.m), 2.0, 1.0, a.m}, M, k, grid);
    } else {
      try {
        c = certify_subsolution(subsolution_params(k, a.m), M, k, grid);
      } catch (const NotApplicable& e) {
        reason = e.what();
      }
    }
    pass = reason.empty() && c.pass && c.condition_ok;
    cert["pass"] = pass;
    if (!reason.empty()) {
      cert["reason"] = reason;
    } else {
      cert["min_residual"] = num(c.min_residual);
      cert["min_relative"] = num(c.min_relative);
      cert["argmin_rho"] = num(c.argmin_rho);
      cert["condition_ok"] = c.condition_ok;
      cert["nodes"] = c.nodes;
      cert["params"] = {{"a", num(c.params.a)}, {"r", num(c.params.r)}, {"K", nullptr}};
    }
    cert["constants"] = constants_json(k);
  }
  if (a.out.empty()) {
    *ctx.out << dump(cert);
  } else {
    write_atomic(a.out, dump(cert));
  }
  ctx.log(std::string("certificate ") + (pass ? "passed" : "failed"));
  return pass ? ok : certificate_failure;
}

// ------------------------------------------------------------------ solve

/// Everything a ball run needs, derived from a scenario.
struct BallSetup {
  ModelManifold M = ModelManifold::euclidean(3);
  ComparisonConstants consts;
  DatumSpec u0;
  ExistenceTime existence;
  SolverConfig cfg;
  BarrierParams barrier;
  bool barrier_valid = false;
};

inline BallSetup ball_setup(const Scenario& s, double R, std::size_t cells) {
  BallSetup b{s.model(), {}, s.datum(), {}, {}, {}, false};
  b.consts = fit_comparison_constants(b.M, s.rho_max, static_cast<std::size_t>(s.n_probe));
  RadialGrid g(b.M, R, cells);
  b.existence = existence_time(b.u0.sample(g.centers(), s.m), b.consts, s.m, s.norm_r);
  const double T = b.existence.T;
  if (s.t_end.relative && !std::isfinite(T)) throw ConfigError("t_end given relative to T, but the datum has zero norm");
  auto& c = b.cfg;
  c.m = s.m;
  c.dt0 = s.dt0;
  c.dt_growth = s.dt_growth;
  if (s.dt_max) c.dt_max = *s.dt_max;
  c.newton_tol = s.newton_tol;
  c.norm_r = s.norm_r;
  c.t_end = s.t_end.resolve(T);
  if (std::isfinite(T) && c.t_end < T) {
    c.barrier_time = T;
    b.barrier = BarrierParams{b.existence.amplitude, s.norm_r, T, s.m};
    b.barrier_valid = true;
  }
  if (s.boundary == "supersolution") {
    if (!b.barrier_valid) throw ConfigError("supersolution boundary needs t_end below a finite existence time");
    c.boundary = Boundary::barrier_dirichlet(b.barrier, 0.0);
  }
  for (long k = 1; k < s.snapshots; ++k) c.snapshot_times.push_back(c.t_end * static_cast<double>(k) / s.snapshots);
  c.validate();
  return b;
}

struct SolveArgs {
  std::string config;
  std::string out;
  std::string summary;
};

inline int solve(const SolveArgs& a, const Context& ctx) {
  const Scenario s = scenario_from(load_config(a.config));
  const double R = s.R.value_or(50.0);
  const auto cells = static_cast<std::size_t>(s.cells.value_or(1000));
  auto b = ball_setup(s, R, cells);
  ctx.log("T = " + fmt(b.existence.T) + ", t_end = " + fmt(b.cfg.t_end));
  const auto tr = solve_ball(b.u0, b.cfg, b.M, R, cells);
  const double tau = discretization_tolerance(tr.h);

  json sj;
  json times = json::array(), norms = json::array(), masses = json::array();
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    times.push_back(num(tr.snapshots[k].t));
    norms.push_back(num(tr.log_norms[k]));
    masses.push_back(num(tr.masses[k]));
  }
  sj["times"] = times;
  sj["log_norm_series"] = norms;
  sj["mass_series"] = masses;
  sj["log_mass_scale"] = num(tr.log_mass_scale);
  bool pass = true;
  if (b.barrier_valid) {
    const auto rep = barrier_sandwich(tr, b.barrier, b.existence.norm, tau);
    sj["max_barrier_violation"] = num(rep.max_violation);
    sj["barrier_violations"] = rep.violations;
    sj["max_norm_excess"] = num(rep.max_norm_excess);
    pass = rep.violations == 0 && rep.max_norm_excess <= 1e-3;
  } else {
    sj["max_barrier_violation"] = nullptr;
  }
  sj["existence_time"] = num(b.existence.T);
  sj["existence_time_limit"] = num(b.existence.T_limit);
  sj["global"] = b.existence.global;
  sj["initial_log_norm"] = num(b.existence.norm);
  sj["tau_h"] = num(tau);
  sj["steps"] = tr.steps.size();
  sj["pass"] = pass;

  if (!a.out.empty()) {
    std::string csv = "t,rho,u\n";
    for (const auto& snap : tr.snapshots) {
      for (std::size_t j = 0; j < snap.u.size(); ++j) {
        csv += fmt(snap.t) + "," + fmt(tr.centers[j]) + "," + fmt(snap.u[j]) + "\n";
      }
    }
    write_atomic(a.out, csv);
  }
  if (a.summary.empty()) {
    *ctx.out << dump(sj);
  } else {
    write_atomic(a.summary, dump(sj));
  }
  return pass ? ok : certificate_failure;
}

// ---------------------------------------------------------------- exhaust

struct ExhaustArgs {
  std::string config;
  std::string radii;
  std::optional<double> h;
  std::string out;
};

inline int exhaust(const ExhaustArgs& a, const Context& ctx) {
  Scenario s = a.config.empty() ? Scenario{} : scenario_from(load_config(a.config));
  if (!a.radii.empty()) s.radii = parse_list(a.radii, "--radii");
  if (a.h) s.h = *a.h;
  s.validate();
  std::sort(s.radii.begin(), s.radii.end());
  const double Rmax = s.radii.back();
  auto b = ball_setup(s, Rmax, static_cast<std::size_t>(std::llround(Rmax / s.h)));
  if (s.boundary != "homogeneous") throw ConfigError("exhaust runs use homogeneous boundary data");
  ctx.log("exhausting over " + std::to_string(s.radii.size()) + " radii");
  const auto rep = pme::exhaust(b.u0, b.cfg, b.M, s.radii, s.h);
  const double tau = discretization_tolerance(s.h);
  bool pass = true;
  json viol = json::array(), inc = json::array();
  for (double v : rep.monotonicity_violation) {
    viol.push_back(num(v));
    pass = pass && v <= tau;
  }
  for (double v : rep.inner_increments) inc.push_back(num(v));
  json j{{"radii", s.radii},
         {"h", num(s.h)},
         {"t_end", num(b.cfg.t_end)},
         {"tau_h", num(tau)},
         {"monotonicity_violation", viol},
         {"inner_radius", num(rep.inner_radius)},
         {"inner_increments", inc},
         {"pass", pass}};
  if (a.out.empty()) {
    *ctx.out << dump(j);
  } else {
    write_atomic(a.out, dump(j));
  }
  return pass ? ok : certificate_failure;
}

// ----------------------------------------------------------------- blowup

inline BlowupConfig blowup_config(const Scenario& s) {
  BlowupConfig c;
  c.m = s.m;
  if (s.R) c.R = *s.R;
  if (s.cells) c.cells = static_cast<std::size_t>(*s.cells);
  c.norm_r = s.norm_r;
  c.threshold = s.threshold;
  c.s_min_factor = s.s_min_factor;
  c.max_stages = static_cast<int>(s.max_stages);
  c.steps_per_stage = static_cast<int>(s.steps_per_stage);
  c.newton_tol = s.newton_tol;
  c.eps0 = s.eps0;
  c.boundary_mode =
      s.blowup_boundary == "trace" ? BlowupConfig::BoundaryMode::trace : BlowupConfig::BoundaryMode::subsolution;
  c.validate();
  return c;
}

inline json ledger_json(const BlowupLedger& L) {
  json stages = json::array();
  json series = json::array();
  for (const auto& r : L.stages) {
    stages.push_back({{"n", r.n},
                      {"T", num(r.T)},
                      {"S", num(r.S)},
                      {"eps", num(r.eps)},
                      {"delta", num(r.delta)},
                      {"t", num(r.t)},
                      {"liminf_est", num(r.liminf_est)},
                      {"limsup_est", num(r.limsup_est)},
                      {"lognorm", num(r.lognorm)},
                      {"r_tilde", num(r.r_tilde)},
                      {"S_r_tilde", num(r.S_r_tilde)},
                      {"sub_violation", num(r.sub_violation)},
                      {"super_violation", num(r.super_violation)}});
    series.push_back(num(r.lognorm));
  }
  return json{{"m", num(L.m)},
              {"a_tilde", num(L.a_tilde)},
              {"a_hat", num(L.a_hat)},
              {"r_hat", num(L.r_hat)},
              {"initial_liminf", num(L.initial_liminf)},
              {"initial_limsup", num(L.initial_limsup)},
              {"initial_lognorm", num(L.initial_lognorm)},
              {"T1", num(L.T1)},
              {"tau_bound", num(L.tau_bound)},
              {"tau", num(L.tau)},
              {"tau_h", num(L.tau_h)},
              {"status", to_string(L.status)},
              {"stop_reason", L.stop_reason},
              {"lognorm_series", series},
              {"stages", stages}};
}

struct BlowupArgs {
  std::string config;
  std::string ledger;
  std::string dump_stages;
};

inline BlowupLedger run_blowup_scenario(const Scenario& s, const StageObserver& obs = {}) {
  const auto M = s.model();
  const auto k = fit_comparison_constants(M, s.rho_max, static_cast<std::size_t>(s.n_probe));
  return run_blowup(s.datum(), M, k, blowup_config(s), obs);
}

inline int blowup(const BlowupArgs& a, const Context& ctx) {
  const Scenario s = scenario_from(load_config(a.config));
  if (!a.dump_stages.empty() && !std::filesystem::is_directory(a.dump_stages)) {
    throw ConfigError("--dump-stages directory does not exist: " + a.dump_stages);
  }
  StageObserver obs;
  if (!a.dump_stages.empty()) {
    obs = [&](int n, const Trajectory& tr) {
      std::string csv = "t,rho,u\n";
      for (const auto& snap : tr.snapshots) {
        for (std::size_t j = 0; j < snap.u.size(); ++j) {
          csv += fmt(snap.t) + "," + fmt(tr.centers[j]) + "," + fmt(snap.u[j]) + "\n";
        }
      }
      char name[32];
      std::snprintf(name, sizeof name, "stage_%05d.csv", n);
      write_atomic((std::filesystem::path(a.dump_stages) / name).string(), csv);
    };
  }
  const auto L = run_blowup_scenario(s, obs);
  ctx.log("status " + to_string(L.status) + " after " + std::to_string(L.stages.size()) + " stages");
  const auto j = ledger_json(L);
  if (a.ledger.empty()) {
    *ctx.out << dump(j);
  } else {
    write_atomic(a.ledger, dump(j));
  }
  return ok;
}

// ------------------------------------------------------------- uniq-check

struct UniqArgs {
  double T = 0.05;
  double c_m = 1.0;
  std::optional<double> K;
  double c2 = 1.0;
  double m = 2.0;
  double r_max = 100.0;
  std::string out;
};

/// Table of F(R) for integer R in [3, r_max]. Passes when F decreases along the
/// table and ends below 1e-30.
inline int uniq_check(const UniqArgs& a, const Context& ctx) {
  if (!(a.m > 1.0)) throw ConfigError("m must satisfy m > 1");
  if (!(a.T > 0.0)) throw ConfigError("--T must be positive");
  if (!(a.c_m > 0.0)) throw ConfigError("--c_m must be positive");
  if (!(a.r_max >= 4.0)) throw ConfigError("--r-max must be >= 4");
  const double K = a.K ? *a.K : select_K(a.c2);
  if (!(K > 0.0)) throw ConfigError("--k must be positive");
  std::string csv = "R,log10_F\n";
  double prev = std::numeric_limits<double>::infinity();
  bool decreasing = true;
  double last = 0.0;
  for (double R = 3.0; R <= a.r_max + 1e-9; R += 1.0) {
    last = log_decay_product(a.c_m, K, a.T, a.m, R) / std::log(10.0);
    decreasing = decreasing && last < prev;
    prev = last;
    csv += fmt(R) + "," + fmt(last) + "\n";
  }
  const auto verdict = decay_verdict(a.c_m, K, a.T);
  const bool pass = decreasing && last < -30.0 && verdict == DecayVerdict::decaying;
  if (a.out.empty()) {
    *ctx.out << csv;
  } else {
    write_atomic(a.out, csv);
  }
  *ctx.err << "K = " << fmt(K) << ", K/(2 C_M) = " << fmt(K / (2.0 * a.c_m)) << ", verdict " << to_string(verdict)
           << ", log10 F(" << fmt(a.r_max) << ") = " << fmt(last) << (pass ? "" : " [FAIL]") << '\n';
  return pass ? ok : certificate_failure;
}

// ------------------------------------------------------------------ sweep

struct SweepRow {
  double b = 0.0, c = 0.0, m = 0.0;
  std::string status;
  BlowupLedger ledger;
  std::string message;
};

struct SweepArgs {
  std::string config;
  std::string out;
  int jobs = 0;
};

/// Blow-up runs over the product of sweep_b x sweep_c x sweep_m, in a worker pool.
inline std::vector<SweepRow> run_sweep(const Scenario& base, int jobs, const Context& ctx) {
  if (base.sweep_b.empty() && base.sweep_c.empty() && base.sweep_m.empty()) {
    throw ConfigError("sweep grid is empty: set at least one of sweep_b, sweep_c, sweep_m");
  }
  const auto d = base.datum();
  if (!base.sweep_b.empty() && d.kind != DatumSpec::Kind::log_growth) {
    throw ConfigError("sweep_b needs u0 = log-growth(...)");
  }
  auto or_base = [](std::vector<double> v, double x) { return v.empty() ? std::vector<double>{x} : v; };
  const auto bs = or_base(base.sweep_b, d.amplitude);
  const auto cs = or_base(base.sweep_c, base.c);
  const auto ms = or_base(base.sweep_m, base.m);
  std::vector<SweepRow> rows;
  for (double b : bs)
    for (double c : cs)
      for (double m : ms) rows.push_back({b, c, m, "", {}, ""});
  std::sort(rows.begin(), rows.end(),
            [](const SweepRow& x, const SweepRow& y) { return std::tie(x.b, x.c, x.m) < std::tie(y.b, y.c, y.m); });

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      Scenario s = base;
      s.c = row.c;
      s.m = row.m;
      if (d.kind == DatumSpec::Kind::log_growth) s.u0_text = "log-growth(" + fmt(row.b) + ")";
      try {
        row.ledger = run_blowup_scenario(s);
        row.status = to_string(row.ledger.status);
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
      std::lock_guard lock(log_mutex);
      ctx.log("sweep row b=" + fmt(row.b) + " c=" + fmt(row.c) + " m=" + fmt(row.m) + ": " + row.status);
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n = std::min<std::size_t>(rows.size(), jobs > 0 ? static_cast<unsigned>(jobs) : hw);
  std::vector<std::jthread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  pool.clear();
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string csv = "b,c,m,status,tau,T1,tau_over_T1,stages,initial_lognorm,final_lognorm,message\n";
  for (const auto& r : rows) {
    const auto& L = r.ledger;
    const bool have = r.status != "error";
    const double fin = have && !L.stages.empty() ? L.stages.back().lognorm : L.initial_lognorm;
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    csv += fmt(r.b) + "," + fmt(r.c) + "," + fmt(r.m) + "," + r.status + ",";
    if (have) {
      csv += fmt(L.tau) + "," + fmt(L.T1) + "," + fmt(L.tau / L.T1) + "," + std::to_string(L.stages.size()) + "," +
             fmt(L.initial_lognorm) + "," + fmt(fin);
    } else {
      csv += ",,,,,";
    }
    csv += "," + msg + "\n";
  }
  return csv;
}

inline int sweep(const SweepArgs& a, const Context& ctx) {
  const Scenario s = scenario_from(load_config(a.config));
  const auto rows = run_sweep(s, a.jobs, ctx);
  const auto csv = sweep_csv(rows);
  if (a.out.empty()) {
    *ctx.out << csv;
  } else {
    write_atomic(a.out, csv);
  }
  const bool all_failed = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status == "error"; });
  return all_failed ? solver_failure : ok;
}

// ------------------------------------------------------------- front end

/// Parses `args` (without the program name) and runs one subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Porous medium equation on model manifolds"};
  app.name("pme");
  app.require_subcommand(1);
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  long seed = 0;
  app.add_option("--seed", seed, "Reserved; every computation is deterministic");
  app.add_flag("--verbose,-v", ctx.verbose, "Progress messages on stderr");

  GeometryArgs ga;
  auto* g = app.add_subcommand("geometry", "Fit the comparison constants of a model");
  g->add_option("--manifold", ga.manifold)->check(CLI::IsMember({"euclidean", "hyperbolic", "quad-critical", "log-critical"}));
  g->add_option("--dim", ga.dim);
  g->add_option("--c", ga.c);
  g->add_option("--rho-max", ga.rho_max);
  g->add_option("--n-probe", ga.n_probe);
  g->add_option("--report", ga.report, "JSON output (stdout if omitted)");

  BarrierCheckArgs ba;
  auto* bc = app.add_subcommand("barrier-check", "Certify a barrier on a grid");
  bc->add_option("--manifold", ba.manifold)->check(CLI::IsMember({"euclidean", "hyperbolic", "quad-critical", "log-critical"}));
  bc->add_option("--dim", ba.dim);
  bc->add_option("--c", ba.c);
  bc->add_option("--m", ba.m);
  bc->add_option("--which", ba.which)->check(CLI::IsMember({"super", "sub", "eta"}));
  bc->add_option("--rho-max", ba.rho_max);
  bc->add_option("--c2", ba.c2, "Coefficient constant for the eta barrier");
  bc->add_option("--out", ba.out, "Certificate JSON (stdout if omitted)");

  SolveArgs sa;
  auto* so = app.add_subcommand("solve", "Solve on a ball from a config file");
  so->add_option("--config", sa.config)->required();
  so->add_option("--out", sa.out, "Trajectory CSV");
  so->add_option("--summary", sa.summary, "Summary JSON (stdout if omitted)");

  ExhaustArgs ea;
  auto* ex = app.add_subcommand("exhaust", "Nested balls with a common spacing");
  ex->set_help_flag("--help", "Print this help message and exit");  // frees -h for the spacing
  ex->add_option("--config", ea.config);
  ex->add_option("--radii", ea.radii, "Comma-separated radii");
  ex->add_option("--h", ea.h, "Common cell width");
  ex->add_option("--out", ea.out);

  BlowupArgs bla;
  auto* bl = app.add_subcommand("blowup", "Staged blow-up construction");
  bl->add_option("--config", bla.config)->required();
  bl->add_option("--ledger", bla.ledger, "Ledger JSON (stdout if omitted)");
  bl->add_option("--dump-stages", bla.dump_stages, "Directory for per-stage CSVs");

  UniqArgs ua;
  auto* uq = app.add_subcommand("uniq-check", "Decay product table for the uniqueness argument");
  uq->add_option("--T", ua.T);
  uq->add_option("--c_m,--c-m", ua.c_m);
  uq->add_option("--k,--K", ua.K, "Barrier rate; selected from --c2 if omitted");
  uq->add_option("--c2", ua.c2);
  uq->add_option("--m", ua.m);
  uq->add_option("--r-max", ua.r_max);
  uq->add_option("--out", ua.out);

  SweepArgs swa;
  auto* sw = app.add_subcommand("sweep", "Blow-up runs over a parameter grid");
  sw->add_option("--config", swa.config)->required();
  sw->add_option("--out", swa.out);
  sw->add_option("--jobs", swa.jobs, "Worker threads (0: hardware concurrency)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : config_error;
  }

  try {
    if (*g) return geometry(ga, ctx);
    if (*bc) return barrier_check(ba, ctx);
    if (*so) return solve(sa, ctx);
    if (*ex) return exhaust(ea, ctx);
    if (*bl) return blowup(bla, ctx);
    if (*uq) return uniq_check(ua, ctx);
    if (*sw) return sweep(swa, ctx);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << '\n';
    return solver_failure;
  } catch (const StageFailure& e) {
    err << "stage failure: " << e.what() << '\n';
    return solver_failure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return config_error;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "file error: " << e.what() << '\n';
    return config_error;
  }
  return config_error;
}

}  // namespace pme::cli
