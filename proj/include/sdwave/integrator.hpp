#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/expr.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/linalg.hpp"
#include "sdwave/mesh.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave {

struct SolverConfig {
  double dt0 = 1e-3;
  double dt_min = 1e-12;
  double dt_max = 1e-2;
  /// Largest accepted relative growth of M = ‖u_t‖₂² + ‖∇u‖₂² in one step.
  double adapt_target = 0.05;
  /// Largest accepted predictor/corrector disagreement (relative, max-norm).
  double pc_tolerance = 1e-3;
  /// Q(t) above this value is declared blow-up.
  double blowup_threshold = 1e10;
  double t_end = 1.0;
  int record_every = 1;
  /// Fixed dt = dt0 when false (convergence studies).
  bool adaptive = true;
  /// Optional source g(x[,y],t) added to the right-hand side.
  std::optional<Expr> source;

  void validate() const {
    if (!(dt_min > 0.0) || !(dt_min <= dt0) || !(dt0 <= dt_max)) {
      throw ConfigError("time steps must satisfy 0 < dt_min <= dt0 <= dt_max");
    }
    if (!(blowup_threshold > 0.0)) throw ConfigError("blowup_threshold must be positive");
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (!(adapt_target > 0.0)) throw ConfigError("adapt_target must be positive");
    if (!(pc_tolerance > 0.0)) throw ConfigError("pc_tolerance must be positive");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");
  }
};

struct Completed {
  double t_end = 0.0;
};

struct BlowupDetected {
  double t_stop = 0.0;
  double T_extrapolated = 0.0;
  double extrapolation_quality = 0.0;
  bool extrapolation_fallback = false;
  double Q = 0.0;
};

struct DtUnderflow {
  double t_stop = 0.0;
  double Q = 0.0;
  double dt = 0.0;
};

/// Non-finite values appeared; t_stop is a lower estimate of the blow-up time.
struct Overflow {
  double t_stop = 0.0;
  double T_extrapolated = 0.0;
  double extrapolation_quality = 0.0;
  bool extrapolation_fallback = true;
};

using Outcome = std::variant<Completed, BlowupDetected, DtUnderflow, Overflow>;

inline std::string outcome_name(const Outcome& o) {
  switch (o.index()) {
    case 0: return "Completed";
    case 1: return "BlowupDetected";
    case 2: return "DtUnderflow";
    default: return "Overflow";
  }
}

inline double outcome_stop_time(const Outcome& o) {
  return std::visit(
      [](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Completed>) {
          return x.t_end;
        } else {
          return x.t_stop;
        }
      },
      o);
}

inline bool is_blowup_evidence(const Outcome& o) {
  return std::holds_alternative<BlowupDetected>(o) || std::holds_alternative<Overflow>(o);
}

namespace detail {

inline Field sample_source(const Expr& g, const Domain& d, double t) { return sample(g, d, t).field; }

inline Field apply_f(const Field& u, const Nonlinearity& nl) {
  Field out(u.domain());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = nl.f(u[k]);
  return out;
}

}  // namespace detail

struct StepResult {
  State state;
  /// max|v_corrected − v_predicted| / max(‖v‖∞, ‖u‖∞)
  double predictor_gap = 0.0;
};

/// One IMEX step for  u_t = v,  v_t = Δu + Δv − v + f(u) + g.
///
/// The linear part is advanced by the implicit midpoint (Crank-Nicolson)
/// rule, which after eliminating u_{n+1} leaves one SPD system for
/// w = v_n + v_{n+1}:
///
///   (1 + dt/2) w − (dt/2 + dt²/4) Δ_h w = 2 v_n + dt Δ_h u_n + dt N,
///
/// with N = f(ū) + g(t + dt/2). The predictor uses ū = u_n + (dt/2) v_n; the
/// single corrector pass uses ū = (u_n + u_{n+1})/2 from the predicted step.
inline StepResult step(const State& s, double dt, const Nonlinearity& nl,
                       const Expr* source = nullptr) {
  if (!(dt > 0.0)) throw UsageError("time step must be positive");
  const Domain& d = s.u.domain();
  const ShiftedLaplacian system(d, 1.0 + 0.5 * dt, 0.5 * dt + 0.25 * dt * dt);

  std::optional<Field> g;
  if (source != nullptr) g = detail::sample_source(*source, d, s.t + 0.5 * dt);

  Field base = 2.0 * s.v + dt * laplacian(s.u);

  auto solve_with = [&](const Field& ubar, std::span<const double> guess) -> std::optional<Field> {
    Field n = detail::apply_f(ubar, nl);
    if (g) n += *g;
    Field rhs = base + dt * n;
    if (!rhs.all_finite()) return std::nullopt;
    return Field(d, system.solve(rhs.values(), guess));
  };

  auto nan_result = [&]() {
    State bad = s;
    bad.u[0] = std::numeric_limits<double>::quiet_NaN();
    bad.t = s.t + dt;
    return StepResult{std::move(bad), std::numeric_limits<double>::infinity()};
  };

  Field twice_v = 2.0 * s.v;
  const auto w_pred = solve_with(s.u + (0.5 * dt) * s.v, twice_v.values());
  if (!w_pred) return nan_result();
  const Field u_pred = s.u + (0.5 * dt) * *w_pred;
  const auto w = solve_with(0.5 * (s.u + u_pred), w_pred->values());
  if (!w) return nan_result();

  State next = s;
  next.t = s.t + dt;
  next.u = s.u + (0.5 * dt) * *w;
  next.v = *w - s.v;
  if (!next.u.all_finite() || !next.v.all_finite()) return nan_result();

  double gap = 0.0;
  for (std::size_t k = 0; k < w->size(); ++k) gap = std::max(gap, std::abs((*w)[k] - (*w_pred)[k]));
  const double scale = std::max({next.v.max_abs(), next.u.max_abs(), 1e-300});

  const double half = 0.5 * dt;
  next.acc_dissipation += half * (norm_full_sq(s.v) + norm_full_sq(next.v));
  next.acc_unorm += half * (norm_full_sq(s.u) + norm_full_sq(next.u));
  next.acc_cross += half * (inner_full(s.u, s.v) + inner_full(next.u, next.v));
  if (g) next.acc_source_work += dt * inner_l2(*g, 0.5 * (s.v + next.v));
  return StepResult{std::move(next), gap / scale};
}

/// Least-squares blow-up time from the tail of sup|u|.
struct Extrapolation {
  double T_est = 0.0;
  double quality = 0.0;  ///< coefficient of determination of the linear fit
  bool fallback = false;  ///< true when quality < 0.9 and T_est = t_stop
  std::size_t rows_used = 0;
};

/// Fits y(t) = sup|u|^(−(p−2)), linear in t for u' = u^(p−1), on the last
/// 8..32 rows whose sup|u| exceeds ten times its initial value; T_est is the
/// root of the fit.
inline Extrapolation extrapolate_tmax(const Trace& trace, double p) {
  if (trace.termination != Termination::blowup && trace.termination != Termination::overflow) {
    throw NumericalError("blow-up time extrapolation needs a trace that ended in blow-up");
  }
  if (trace.rows.empty() || !(trace.rows.front().sup_abs_u > 0.0)) {
    throw NumericalError("blow-up time extrapolation needs nonzero initial data");
  }
  const double threshold = 10.0 * trace.rows.front().sup_abs_u;
  std::vector<const FunctionalRow*> tail;
  for (const auto& r : trace.rows) {
    if (r.sup_abs_u > threshold && std::isfinite(r.sup_abs_u)) tail.push_back(&r);
  }
  if (tail.size() < 8) {
    throw NumericalError("blow-up time extrapolation needs at least 8 rows with sup|u| above "
                         "10x its initial value, got " + std::to_string(tail.size()));
  }
  const std::size_t n = std::min<std::size_t>(32, tail.size());
  tail.erase(tail.begin(), tail.end() - static_cast<std::ptrdiff_t>(n));

  std::vector<double> ts(n), ys(n);
  double tm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ts[k] = tail[k]->t;
    ys[k] = std::pow(tail[k]->sup_abs_u, -(p - 2.0));
    tm += ts[k];
    ym += ys[k];
  }
  tm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    stt += (ts[k] - tm) * (ts[k] - tm);
    sty += (ts[k] - tm) * (ys[k] - ym);
    syy += (ys[k] - ym) * (ys[k] - ym);
  }
  Extrapolation out;
  out.rows_used = n;
  const double t_stop = trace.rows.back().t;
  const double slope = stt > 0.0 ? sty / stt : 0.0;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double fit = ym + slope * (ts[k] - tm);
    ss_res += (ys[k] - fit) * (ys[k] - fit);
  }
  out.quality = syy > 0.0 ? 1.0 - ss_res / syy : 0.0;
  if (slope < 0.0 && out.quality >= 0.9) {
    out.T_est = tm - ym / slope;
  } else {
    out.T_est = t_stop;
    out.fallback = true;
  }
  return out;
}

struct RunResult {
  Trace trace;
  Outcome outcome;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  /// First recorded time with M above the blow-up threshold, if any.
  std::optional<double> m_threshold_time;
};

/// Adaptive time integration from (u0, v0) until t_end, blow-up of Q,
/// dt underflow, or non-finite values.
inline RunResult run(const SolverConfig& cfg, const Field& u0, const Field& v0,
                     const Nonlinearity& nl) {
  cfg.validate();
  u0.check_same(v0);
  if (!u0.all_finite() || !v0.all_finite()) throw UsageError("initial data must be finite");

  const Expr* source = cfg.source ? &*cfg.source : nullptr;
  State state(u0, v0);
  RunResult res;
  res.trace.has_accumulators = true;
  res.trace.E0 = energy(u0, v0, nl);
  const double E0 = res.trace.E0;

  auto record = [&](double dt) {
    res.trace.rows.push_back(make_row(state, nl, E0, dt));
    const auto& r = res.trace.rows.back();
    if (!res.m_threshold_time && r.M > cfg.blowup_threshold) res.m_threshold_time = r.t;
  };
  record(0.0);

  auto finish_blowup = [&](Termination how) {
    res.trace.termination = how;
    Extrapolation ex;
    try {
      ex = extrapolate_tmax(res.trace, nl.p);
    } catch (const NumericalError&) {
      ex.T_est = state.t;
      ex.quality = 0.0;
      ex.fallback = true;
    }
    return ex;
  };

  double dt = cfg.dt0;
  double M_old = m_functional(state.u, state.v);
  std::size_t since_record = 0;
  for (;;) {
    const double remaining = cfg.t_end - state.t;
    if (remaining <= 1e-14 * std::max(1.0, cfg.t_end)) {
      if (since_record != 0) record(res.trace.rows.back().dt);
      res.trace.termination = Termination::completed;
      res.outcome = Completed{state.t};
      return res;
    }
    const double dt_try = std::min(dt, remaining);
    StepResult sr = step(state, dt_try, nl, source);
    const bool finite = sr.state.u.all_finite() && sr.state.v.all_finite();
    if (!finite) {
      if (since_record != 0) record(dt_try);
      Extrapolation ex = finish_blowup(Termination::overflow);
      res.outcome = Overflow{state.t, ex.T_est, ex.quality, ex.fallback};
      return res;
    }
    const double M_new = m_functional(sr.state.u, sr.state.v);
    const double growth = M_old > 0.0 ? (M_new - M_old) / M_old : 0.0;
    if (cfg.adaptive && (growth > cfg.adapt_target || sr.predictor_gap > cfg.pc_tolerance)) {
      ++res.rejected_steps;
      dt = 0.5 * dt_try;
      if (dt < cfg.dt_min) {
        if (since_record != 0) record(dt_try);
        res.trace.termination = Termination::dt_underflow;
        res.outcome = DtUnderflow{state.t, q_functional(state), dt};
        return res;
      }
      continue;
    }

    state = std::move(sr.state);
    M_old = M_new;
    ++res.accepted_steps;
    ++since_record;
    const double Q = q_functional(state);
    if (Q > cfg.blowup_threshold) {
      record(dt_try);
      Extrapolation ex = finish_blowup(Termination::blowup);
      res.outcome = BlowupDetected{state.t, ex.T_est, ex.quality, ex.fallback, Q};
      return res;
    }
    if (since_record >= static_cast<std::size_t>(cfg.record_every)) {
      record(dt_try);
      since_record = 0;
    }
    if (cfg.adaptive && dt_try == dt && growth < 0.5 * cfg.adapt_target &&
        sr.predictor_gap < 0.25 * cfg.pc_tolerance) {
      dt = std::min(1.2 * dt, cfg.dt_max);
    }
  }
}

}  // namespace sdwave
