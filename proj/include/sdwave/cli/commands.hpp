#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "sdwave/bounds.hpp"
#include "sdwave/cli/config_file.hpp"
#include "sdwave/cli/experiment.hpp"
#include "sdwave/cli/output.hpp"
#include "sdwave/convergence.hpp"
#include "sdwave/integrator.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitCompleted = 0,
  kExitConfigError = 1,
  kExitBlowup = 2,
  kExitDtUnderflow = 3,
  kExitOverflow = 4,
  kExitCheckFailed = 5,
};

inline int exit_code(const Outcome& o) {
  switch (o.index()) {
    case 0: return kExitCompleted;
    case 1: return kExitBlowup;
    case 2: return kExitDtUnderflow;
    default: return kExitOverflow;
  }
}

/// Command-line state shared by every subcommand.
struct Invocation {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  unsigned jobs = 0;  ///< sweep workers; 0 = hardware concurrency
  std::ostream* log = &std::cout;
  std::ostream* err = &std::cerr;
};

/// Output directory: --out, then $SDWAVE_OUT, then `out` in the file.
inline fs::path resolve_out(const Invocation& inv, const ExperimentConfig& c) {
  if (inv.out) return *inv.out;
  if (const char* env = std::getenv("SDWAVE_OUT"); env != nullptr && *env != '\0') return env;
  return c.out;
}

inline ExperimentConfig load_experiment(const Invocation& inv) {
  if (inv.config_path.empty()) throw ConfigError("no config file given (use --config <path>)");
  ExperimentConfig c = experiment_from_json(ConfigReader::load(inv.config_path));
  if (inv.seed) {
    c.seed = *inv.seed;
    c.raw["seed"] = *inv.seed;
  }
  return c;
}

/// Config tree as echoed into reports, without the output location.
inline json config_echo(const ExperimentConfig& c) {
  json j = c.raw;
  j.erase("out");
  j["seed"] = c.seed;
  return j;
}

inline BoundsReport compute_bounds(const ExperimentConfig& c, const Field& u0, const Field& u1,
                                   const Nonlinearity& nl) {
  BoundsReport b = evaluate_bounds(u0, u1, nl, make_embedding_options(c));
  if (!c.report.upper) {
    b.upper.reset();
    b.upper_error = "not requested";
  }
  if (!c.report.lower) {
    b.lower.reset();
    b.lower_error = "not requested";
  }
  return b;
}

struct RunReport {
  int code = kExitCompleted;
  RunResult result;
  BoundsReport bounds;
  json report;
};

inline json sandwich_json(const RunResult& r, const BoundsReport& b) {
  json j;
  const bool evidence = is_blowup_evidence(r.outcome);
  double T_ext = 0.0, quality = 0.0;
  if (const auto* x = std::get_if<BlowupDetected>(&r.outcome)) {
    T_ext = x->T_extrapolated;
    quality = x->extrapolation_quality;
  } else if (const auto* y = std::get_if<Overflow>(&r.outcome)) {
    T_ext = y->T_extrapolated;
    quality = y->extrapolation_quality;
  }
  j["applicable"] = evidence && b.lower.has_value() && b.upper.has_value();
  j["T_lower"] = b.lower ? number(b.lower->T_lower) : json();
  j["T_upper"] = b.upper ? number(b.upper->T_upper) : json();
  j["T_extrapolated"] = evidence ? number(T_ext) : json();
  j["extrapolation_quality"] = evidence ? number(quality) : json();
  if (j["applicable"].get<bool>()) {
    const double lo = b.lower->T_lower;
    const double hi = b.upper->T_upper;
    j["holds"] = lo < T_ext && T_ext < hi;
    j["clearance_lower"] = number(T_ext / lo - 1.0);
    j["clearance_upper"] = number(1.0 - T_ext / hi);
  } else {
    j["holds"] = json();
  }
  return j;
}

/// Runs one experiment into `out`: trace.csv and report.json.
inline RunReport run_experiment(const ExperimentConfig& c, const fs::path& out) {
  const Domain d = make_domain(c);
  const Nonlinearity nl = make_nonlinearity(c);
  const InitialFields init = make_initial_data(c, d);
  const SolverConfig solver = make_solver(c);

  RunReport rep;
  rep.bounds = compute_bounds(c, init.u0, init.u1, nl);
  rep.result = run(solver, init.u0, init.u1, nl);
  rep.code = exit_code(rep.result.outcome);

  const RunResult& r = rep.result;
  json j;
  j["outcome"] = to_json(r.outcome);
  json stats;
  stats["accepted_steps"] = r.accepted_steps;
  stats["rejected_steps"] = r.rejected_steps;
  stats["recorded_rows"] = r.trace.rows.size();
  stats["E0"] = number(r.trace.E0);
  stats["max_abs_energy_residual"] = number(max_abs_energy_residual(r.trace));
  stats["k_monotonicity_violations"] = count_k_monotonicity_violations(r.trace, 1e-10);
  j["run"] = stats;

  // Q defines blow-up; M is only recorded. Both stop times are reported.
  json mq;
  const double t_q = outcome_stop_time(r.outcome);
  mq["Q_stop_time"] = is_blowup_evidence(r.outcome) ? number(t_q) : json();
  mq["M_threshold_time"] = r.m_threshold_time ? number(*r.m_threshold_time) : json();
  mq["within_one_percent"] =
      (r.m_threshold_time && is_blowup_evidence(r.outcome))
          ? json(std::abs(*r.m_threshold_time - t_q) <= 0.01 * t_q)
          : json();
  j["m_q_divergence"] = mq;

  j["bounds"] = to_json(rep.bounds);
  j["sandwich"] = sandwich_json(r, rep.bounds);
  j["boundary_compatibility"] = {{"u0_max_abs_on_boundary", number(init.u0_boundary)},
                                 {"u1_max_abs_on_boundary", number(init.u1_boundary)},
                                 {"compatible", init.u0_boundary == 0.0 && init.u1_boundary == 0.0}};
  j["nonlinearity"] = to_json(nl);
  j["domain"] = d.describe();
  j["config"] = config_echo(c);
  rep.report = j;

  ensure_directory(out);
  write_text(out / "trace.csv", trace_csv(r.trace));
  write_json(out / "report.json", j);
  return rep;
}

namespace detail {

template <typename Body>
int guarded(const Invocation& inv, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    *inv.err << "config error: " << e.what() << "\n";
  } catch (const ParseError& e) {
    *inv.err << "parse error: " << e.what() << "\n";
  } catch (const UsageError& e) {
    *inv.err << "usage error: " << e.what() << "\n";
  } catch (const PreconditionError& e) {
    *inv.err << "precondition failed: " << e.what() << "\n";
  } catch (const std::exception& e) {
    *inv.err << "error: " << e.what() << "\n";
  }
  return kExitConfigError;
}

}  // namespace detail

inline int cmd_run(const Invocation& inv) {
  return detail::guarded(inv, [&] {
    const ExperimentConfig c = load_experiment(inv);
    const fs::path out = resolve_out(inv, c);
    const RunReport rep = run_experiment(c, out);
    if (!inv.quiet) {
      *inv.log << outcome_name(rep.result.outcome)
               << " at t = " << format_double(outcome_stop_time(rep.result.outcome)) << " ("
               << rep.result.accepted_steps << " steps)\n";
      const json& s = rep.report["sandwich"];
      if (s["applicable"].get<bool>()) {
        *inv.log << "T_lower = " << s["T_lower"].dump() << ", T_extrapolated = "
                 << s["T_extrapolated"].dump() << ", T_upper = " << s["T_upper"].dump() << "\n";
      }
      *inv.log << "wrote " << (out / "trace.csv").string() << " and "
               << (out / "report.json").string() << "\n";
    }
    return rep.code;
  });
}

inline int cmd_bounds(const Invocation& inv) {
  return detail::guarded(inv, [&] {
    const ExperimentConfig c = load_experiment(inv);
    const fs::path out = resolve_out(inv, c);
    const Domain d = make_domain(c);
    const Nonlinearity nl = make_nonlinearity(c);
    const InitialFields init = make_initial_data(c, d);
    const BoundsReport b = compute_bounds(c, init.u0, init.u1, nl);
    json j;
    j["bounds"] = to_json(b);
    j["nonlinearity"] = to_json(nl);
    j["domain"] = d.describe();
    j["config"] = config_echo(c);
    ensure_directory(out);
    write_json(out / "bounds.json", j);
    if (!inv.quiet) {
      *inv.log << "E0 = " << format_double(b.data.E0) << ", I0 = " << format_double(b.data.I0)
               << ", margin = " << format_double(b.high_energy.margin) << "\n";
      if (b.upper) *inv.log << "T_upper = " << format_double(b.upper->T_upper) << " (" << b.upper->winner << ")\n";
      else *inv.log << "T_upper: " << b.upper_error << "\n";
      if (b.lower) *inv.log << "T_lower = " << format_double(b.lower->T_lower) << "\n";
      else *inv.log << "T_lower: " << b.lower_error << "\n";
    }
    return kExitCompleted;
  });
}

inline int cmd_check(const Invocation& inv) {
  return detail::guarded(inv, [&] {
    const ExperimentConfig c = load_experiment(inv);
    const fs::path out = resolve_out(inv, c);
    const Nonlinearity nl = make_nonlinearity(c);
    const double range = c.report.check_range;
    const int n = c.report.check_samples;
    const CheckReport reps[] = {check_h1(nl, range, n), check_h2(nl, range, n),
                                check_h3(nl, range, n)};
    json j;
    j["nonlinearity"] = to_json(nl);
    j["range"] = number(range);
    j["checks"] = json::array();
    bool all = true;
    for (const auto& r : reps) {
      j["checks"].push_back(to_json(r));
      all = all && r.passed;
      if (!inv.quiet) {
        *inv.log << r.hypothesis << (r.passed ? " pass" : " FAIL") << " (worst residual "
                 << format_double(r.worst_residual) << " at s = " << format_double(r.worst_at)
                 << ", " << r.samples << " samples)\n";
      }
    }
    j["passed"] = all;
    j["config"] = config_echo(c);
    ensure_directory(out);
    write_json(out / "check.json", j);
    return all ? kExitCompleted : kExitCheckFailed;
  });
}

inline int cmd_convergence(const Invocation& inv) {
  return detail::guarded(inv, [&] {
    const ExperimentConfig c = load_experiment(inv);
    if (!c.convergence) throw ConfigError("convergence needs a [convergence] table");
    const ConvergenceOptions& o = *c.convergence;
    const fs::path out = resolve_out(inv, c);
    const Domain d = make_domain(c);
    const Nonlinearity nl = make_nonlinearity(c);
    const Expr exact = parse_field(c, "convergence.exact", o.exact);
    const Expr exact_t = parse_field(c, "convergence.exact_t", o.exact_t);
    const Expr g = c.source.empty() ? parse("0") : parse_field(c, "source", c.source);
    const auto levels = convergence_study(d, o.dt0, o.t_end, o.levels, exact, exact_t, g, nl);

    std::string csv = "cells,dt,error,order\n";
    json j;
    j["levels"] = json::array();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const auto& l = levels[k];
      csv += std::to_string(l.cells) + "," + format_double(l.dt) + "," + format_double(l.error) +
             "," + format_double(l.order) + "\n";
      j["levels"].push_back({{"cells", l.cells},
                             {"dt", number(l.dt)},
                             {"error", number(l.error)},
                             {"order", k == 0 ? json() : number(l.order)}});
      if (k > 0) worst = std::min(worst, l.order);
      if (!inv.quiet) {
        *inv.log << "cells " << l.cells << "  dt " << format_double(l.dt) << "  error "
                 << format_double(l.error);
        if (k > 0) *inv.log << "  order " << format_double(l.order);
        *inv.log << "\n";
      }
    }
    const bool ok = worst >= o.min_order;
    j["min_observed_order"] = number(worst);
    j["required_order"] = number(o.min_order);
    j["passed"] = ok;
    j["config"] = config_echo(c);
    ensure_directory(out);
    write_text(out / "convergence.csv", csv);
    write_json(out / "convergence.json", j);
    return ok ? kExitCompleted : kExitCheckFailed;
  });
}

namespace detail {

inline std::string csv_cell(const json& v) {
  std::string s = v.is_string() ? v.get<std::string>()
                  : v.is_number() ? format_double(v.get<double>())
                                  : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

inline std::string opt_number(const json& j) { return j.is_null() ? "" : csv_cell(j); }

}  // namespace detail

/// Cartesian product of the [sweep] arrays, first key varying slowest.
inline std::vector<std::vector<json>> sweep_points(const ExperimentConfig& c) {
  std::vector<std::vector<json>> pts{{}};
  for (const auto& [path, values] : c.sweep) {
    std::vector<std::vector<json>> next;
    for (const auto& p : pts) {
      for (const auto& v : values) {
        auto q = p;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    }
    pts = std::move(next);
  }
  return pts;
}

inline int cmd_sweep(const Invocation& inv) {
  return detail::guarded(inv, [&] {
    const ExperimentConfig base = load_experiment(inv);
    if (base.sweep.empty()) throw ConfigError("sweep needs a [sweep] table with at least one array");
    const fs::path out = resolve_out(inv, base);
    const auto points = sweep_points(base);

    std::vector<json> trees;
    for (const auto& values : points) {
      json tree = base.raw;
      tree.erase("sweep");
      for (std::size_t k = 0; k < values.size(); ++k) set_path(tree, base.sweep[k].first, values[k]);
      trees.push_back(std::move(tree));
    }

    struct Row {
      std::string line;
      int code = kExitConfigError;
    };
    std::vector<Row> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < points.size(); i = next++) {
        char name[32];
        std::snprintf(name, sizeof name, "point_%04zu", i);
        std::string line = std::to_string(i);
        for (const auto& v : points[i]) line += "," + detail::csv_cell(v);
        try {
          ExperimentConfig c = experiment_from_json(trees[i]);
          c.seed = base.seed;
          c.raw["seed"] = base.seed;
          const RunReport rep = run_experiment(c, out / name);
          const json& s = rep.report["sandwich"];
          const BoundsReport& b = rep.bounds;
          line += "," + outcome_name(rep.result.outcome);
          line += "," + std::to_string(rep.code);
          line += "," + format_double(outcome_stop_time(rep.result.outcome));
          line += "," + detail::opt_number(s["T_extrapolated"]);
          line += "," + detail::opt_number(s["extrapolation_quality"]);
          line += "," + detail::opt_number(s["T_lower"]);
          line += "," + detail::opt_number(s["T_upper"]);
          line += "," + (s["holds"].is_null() ? std::string() : s["holds"].dump());
          line += "," + format_double(b.data.E0) + "," + format_double(b.data.I0) + "," +
                  format_double(b.data.K0) + "," + format_double(b.data.M0) + "," +
                  format_double(b.high_energy.margin) + "," +
                  (b.high_energy.holds ? "true" : "false") + "," +
                  (b.negative_energy ? "true" : "false") + ",";
          rows[i].code = rep.code;
        } catch (const std::exception& e) {
          line += ",Error," + std::to_string(kExitConfigError) + ",,,,,,,,,,,,,,";
          line += detail::csv_cell(json(std::string(e.what())));
        }
        rows[i].line = std::move(line);
      }
    };
    unsigned jobs = inv.jobs != 0 ? inv.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(points.size()));
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::string csv = "index";
    for (const auto& [path, values] : base.sweep) csv += "," + detail::csv_cell(json(path));
    csv += ",outcome,exit_code,t_stop,T_extrapolated,extrapolation_quality,T_lower,T_upper,"
           "sandwich_holds,E0,I0,K0,M0,criterion_margin,criterion_holds,negative_energy,error\n";
    std::size_t failed = 0;
    for (const auto& r : rows) {
      csv += r.line + "\n";
      if (r.code == kExitConfigError) ++failed;
    }
    ensure_directory(out);
    write_text(out / "sweep.csv", csv);
    if (!inv.quiet) {
      *inv.log << points.size() << " points, " << failed << " failed; wrote "
               << (out / "sweep.csv").string() << "\n";
    }
    return kExitCompleted;
  });
}

}  // namespace sdwave::cli
