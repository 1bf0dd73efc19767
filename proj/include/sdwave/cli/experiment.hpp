#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdwave/bounds.hpp"
#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/expr.hpp"
#include "sdwave/integrator.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave::cli {

using json = nlohmann::json;

struct ReportOptions {
  bool upper = true;
  bool lower = true;
  double check_range = 100.0;
  int check_samples = 10000;
  int embedding_starts = 32;
};

struct ConvergenceOptions {
  std::string exact;
  std::string exact_t;
  int levels = 3;
  double dt0 = 0.05;
  double t_end = 1.0;
  double min_order = 1.9;
};

/// Parsed experiment file; `raw` is the JSON tree it came from.
struct ExperimentConfig {
  json raw;
  std::string out = "out";
  std::uint64_t seed = 0;

  int dimension = 1;
  std::vector<double> lengths{1.0};
  std::vector<int> cells{256};

  std::string nonlinearity = "power:4";
  std::string u0 = "0";
  std::string u1 = "0";
  std::string source;
  std::map<std::string, double> params;

  SolverConfig solver;
  ReportOptions report;
  std::optional<ConvergenceOptions> convergence;
  std::vector<std::pair<std::string, std::vector<json>>> sweep;
};

namespace detail {

inline const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double get_number(const json& j, const std::string& key, double fallback) {
  const json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) throw ConfigError("'" + key + "' must be a number");
  return v->get<double>();
}

inline int get_int(const json& j, const std::string& key, int fallback) {
  const json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v->get<int>();
}

inline bool get_bool(const json& j, const std::string& key, bool fallback) {
  const json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_boolean()) throw ConfigError("'" + key + "' must be true or false");
  return v->get<bool>();
}

inline std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
  const json* v = find(j, key);
  if (v == nullptr) return fallback;
  if (!v->is_string()) throw ConfigError("'" + key + "' must be a string");
  return v->get<std::string>();
}

inline const json& table(const json& j, const std::string& key) {
  static const json empty = json::object();
  const json* v = find(j, key);
  if (v == nullptr) return empty;
  if (!v->is_object()) throw ConfigError("'" + key + "' must be a table");
  return *v;
}

inline void reject_unknown(const json& j, const std::string& where,
                           std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const json& root) {
  using namespace detail;
  if (!root.is_object()) throw ConfigError("config root must be a table");
  reject_unknown(root, "config", {"out", "seed", "nonlinearity", "u0", "u1", "source", "params",
                                  "domain", "solver", "report", "custom", "convergence", "sweep"});
  ExperimentConfig c;
  c.raw = root;
  c.out = get_string(root, "out", c.out);
  if (const json* s = find(root, "seed")) {
    if (!s->is_number_integer() || s->get<std::int64_t>() < 0) {
      throw ConfigError("'seed' must be a non-negative integer");
    }
    c.seed = s->get<std::uint64_t>();
  }
  c.nonlinearity = get_string(root, "nonlinearity", c.nonlinearity);
  c.u0 = get_string(root, "u0", c.u0);
  c.u1 = get_string(root, "u1", c.u1);
  c.source = get_string(root, "source", "");

  const json& params = table(root, "params");
  for (auto it = params.begin(); it != params.end(); ++it) {
    if (!it->is_number()) throw ConfigError("parameter '" + it.key() + "' must be a number");
    c.params[it.key()] = it->get<double>();
  }

  const json& dom = table(root, "domain");
  reject_unknown(dom, "[domain]", {"dimension", "lengths", "cells"});
  c.dimension = get_int(dom, "dimension", 1);
  if (c.dimension != 1 && c.dimension != 2) throw ConfigError("domain.dimension must be 1 or 2");
  c.lengths.assign(static_cast<std::size_t>(c.dimension), 1.0);
  c.cells.assign(static_cast<std::size_t>(c.dimension), c.dimension == 1 ? 256 : 64);
  if (const json* l = find(dom, "lengths")) {
    if (!l->is_array()) throw ConfigError("domain.lengths must be an array");
    c.lengths.clear();
    for (const auto& v : *l) {
      if (!v.is_number()) throw ConfigError("domain.lengths entries must be numbers");
      c.lengths.push_back(v.get<double>());
    }
  }
  if (const json* n = find(dom, "cells")) {
    if (!n->is_array()) throw ConfigError("domain.cells must be an array");
    c.cells.clear();
    for (const auto& v : *n) {
      if (!v.is_number_integer()) throw ConfigError("domain.cells entries must be integers");
      c.cells.push_back(v.get<int>());
    }
  }

  const json& sol = table(root, "solver");
  reject_unknown(sol, "[solver]", {"dt0", "dt_min", "dt_max", "adapt_target", "pc_tolerance",
                                   "blowup_threshold", "t_end", "record_every", "adaptive"});
  SolverConfig& s = c.solver;
  s.dt0 = get_number(sol, "dt0", s.dt0);
  s.dt_min = get_number(sol, "dt_min", s.dt_min);
  s.dt_max = get_number(sol, "dt_max", s.dt_max);
  s.adapt_target = get_number(sol, "adapt_target", s.adapt_target);
  s.pc_tolerance = get_number(sol, "pc_tolerance", s.pc_tolerance);
  s.blowup_threshold = get_number(sol, "blowup_threshold", s.blowup_threshold);
  s.t_end = get_number(sol, "t_end", s.t_end);
  s.record_every = get_int(sol, "record_every", s.record_every);
  s.adaptive = get_bool(sol, "adaptive", s.adaptive);
  s.validate();

  const json& rep = table(root, "report");
  reject_unknown(rep, "[report]",
                 {"upper_bound", "lower_bound", "check_range", "check_samples", "embedding_starts"});
  c.report.upper = get_bool(rep, "upper_bound", true);
  c.report.lower = get_bool(rep, "lower_bound", true);
  c.report.check_range = get_number(rep, "check_range", c.report.check_range);
  c.report.check_samples = get_int(rep, "check_samples", c.report.check_samples);
  c.report.embedding_starts = get_int(rep, "embedding_starts", c.report.embedding_starts);
  if (c.report.embedding_starts < 1) throw ConfigError("report.embedding_starts must be >= 1");

  if (const json* conv = find(root, "convergence")) {
    if (!conv->is_object()) throw ConfigError("'convergence' must be a table");
    reject_unknown(*conv, "[convergence]",
                   {"exact", "exact_t", "levels", "dt0", "t_end", "min_order"});
    ConvergenceOptions o;
    o.exact = get_string(*conv, "exact", "");
    o.exact_t = get_string(*conv, "exact_t", "");
    if (o.exact.empty() || o.exact_t.empty()) {
      throw ConfigError("[convergence] needs 'exact' and 'exact_t' expressions");
    }
    o.levels = get_int(*conv, "levels", o.levels);
    if (o.levels < 2) throw ConfigError("convergence.levels must be >= 2");
    o.dt0 = get_number(*conv, "dt0", o.dt0);
    o.t_end = get_number(*conv, "t_end", o.t_end);
    o.min_order = get_number(*conv, "min_order", o.min_order);
    c.convergence = o;
  }

  const json& sw = table(root, "sweep");
  for (auto it = sw.begin(); it != sw.end(); ++it) {
    if (!it->is_array() || it->empty()) {
      throw ConfigError("sweep entry '" + it.key() + "' must be a non-empty array");
    }
    c.sweep.emplace_back(it.key(), std::vector<json>(it->begin(), it->end()));
  }
  return c;
}

inline Domain make_domain(const ExperimentConfig& c) {
  return build_domain(c.dimension, c.lengths, c.cells);
}

inline Expr parse_field(const ExperimentConfig& c, const std::string& name,
                        const std::string& text) {
  try {
    return parse(text, c.params);
  } catch (const ParseError& e) {
    throw ConfigError("cannot parse " + name + " = \"" + text + "\": " + e.what());
  }
}

/// "power:p", "logpower:p" or "custom" (expressions in the [custom] table).
inline Nonlinearity make_nonlinearity(const ExperimentConfig& c) {
  const std::string& spec = c.nonlinearity;
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  auto exponent = [&]() {
    if (colon == std::string::npos) throw ConfigError("nonlinearity '" + spec + "' needs ':p'");
    const std::string tail = spec.substr(colon + 1);
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tail.size() || tail.empty()) {
      throw ConfigError("malformed exponent in nonlinearity '" + spec + "'");
    }
    return p;
  };
  if (family == "power") return power(exponent());
  if (family == "logpower") return logpower(exponent());
  if (family == "custom") {
    const json& t = detail::table(c.raw, "custom");
    detail::reject_unknown(t, "[custom]",
                           {"f", "F", "fprime", "p", "alpha", "beta", "q", "k0", "k1", "l1"});
    auto expr = [&](const char* key) {
      const std::string text = detail::get_string(t, key, "");
      if (text.empty()) throw ConfigError(std::string("[custom] needs '") + key + "'");
      return parse_field(c, std::string("custom.") + key, text);
    };
    std::optional<Expr> fp;
    if (detail::find(t, "fprime") != nullptr) fp = expr("fprime");
    CustomConstants k;
    k.p = detail::get_number(t, "p", 0.0);
    k.alpha = detail::get_number(t, "alpha", 0.0);
    k.beta = detail::get_number(t, "beta", 0.0);
    k.q = detail::get_number(t, "q", 0.0);
    k.k0 = detail::get_number(t, "k0", 0.0);
    k.k1 = detail::get_number(t, "k1", 0.0);
    k.l1 = detail::get_number(t, "l1", 0.0);
    return custom(expr("f"), expr("F"), fp, k);
  }
  throw ConfigError("unknown nonlinearity '" + spec + "' (use power:p, logpower:p or custom)");
}

/// Sampled initial data plus boundary-compatibility metrics.
struct InitialFields {
  Field u0;
  Field u1;
  double u0_boundary = 0.0;
  double u1_boundary = 0.0;
};

inline InitialFields make_initial_data(const ExperimentConfig& c, const Domain& d) {
  auto sample_checked = [&](const std::string& name, const std::string& text) {
    const Expr e = parse_field(c, name, text);
    if (e.uses(Var::t)) throw ConfigError(name + " may not depend on t");
    try {
      return sample(e, d);
    } catch (const UsageError& err) {
      throw ConfigError(name + ": " + err.what());
    } catch (const DomainFault& err) {
      throw ConfigError(name + ": " + err.what());
    }
  };
  Sampled a = sample_checked("u0", c.u0);
  Sampled b = sample_checked("u1", c.u1);
  return InitialFields{std::move(a.field), std::move(b.field), a.boundary_mismatch,
                       b.boundary_mismatch};
}

inline SolverConfig make_solver(const ExperimentConfig& c) {
  SolverConfig s = c.solver;
  if (!c.source.empty()) {
    Expr g = parse_field(c, "source", c.source);
    if (g.uses(Var::s)) throw ConfigError("source may not reference 's'");
    if (c.dimension == 1 && g.uses(Var::y)) throw ConfigError("source references 'y' in 1D");
    s.source = std::move(g);
  }
  return s;
}

inline EmbeddingOptions make_embedding_options(const ExperimentConfig& c) {
  EmbeddingOptions o;
  o.seed = c.seed;
  o.starts = c.report.embedding_starts;
  return o;
}

/// Sets a dotted path ("params.c", "solver.t_end") inside a config tree.
inline void set_path(json& root, const std::string& path, const json& value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("malformed sweep path '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    json& child = (*node)[key];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) throw ConfigError("sweep path '" + path + "' crosses a value");
    node = &child;
    start = dot + 1;
  }
}

}  // namespace sdwave::cli
