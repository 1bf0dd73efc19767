#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/linalg.hpp"
#include "sdwave/mesh.hpp"
#include "sdwave/nonlinearity.hpp"

namespace sdwave {

/// Solution snapshot (u, u_t, t) plus the running time integrals the
/// integrator maintains by the trapezoid rule.
struct State {
  Field u;
  Field v;
  double t = 0.0;
  double acc_dissipation = 0.0;  ///< ∫ ‖u_t‖² dτ  (full H^1 norm)
  double acc_unorm = 0.0;        ///< ∫ ‖u‖² dτ
  double acc_cross = 0.0;        ///< ∫ <u, u_t> dτ  (H^1 inner product)
  double acc_source_work = 0.0;  ///< ∫ (g, u_t) dτ, zero without a source

  State(Field u0, Field v0) : u(std::move(u0)), v(std::move(v0)) { u.check_same(v); }
};

inline double integral_of(const Field& u, const std::function<double(double)>& g) {
  CompensatedSum s;
  for (double x : u.values()) {
    const double y = g(x);
    if (!std::isfinite(y)) throw NumericalError("non-finite nonlinearity value (overflow)");
    s += y;
  }
  return u.domain().cell_volume() * s.value();
}

/// E = ½‖u_t‖₂² + ½‖∇u‖₂² − ∫F(u)
inline double energy(const Field& u, const Field& v, const Nonlinearity& nl) {
  u.check_same(v);
  return 0.5 * norm_l2_sq(v) + 0.5 * norm_grad_sq(u) - integral_of(u, nl.F);
}

/// I(u) = ‖∇u‖₂² − ∫ f(u) u
inline double nehari(const Field& u, const Nonlinearity& nl) {
  return norm_grad_sq(u) - integral_of(u, [&nl](double s) { return nl.f(s) * s; });
}

/// u lies in the unstable set when I(u) < 0.
inline bool in_unstable_set(const Field& u, const Nonlinearity& nl) { return nehari(u, nl) < 0.0; }

/// K = ‖u‖² + 2(u, u_t)
inline double k_functional(const Field& u, const Field& v) {
  return norm_full_sq(u) + 2.0 * inner_l2(u, v);
}

/// M = ‖u_t‖₂² + ‖∇u‖₂²
inline double m_functional(const Field& u, const Field& v) {
  return norm_l2_sq(v) + norm_grad_sq(u);
}

/// Q = ∫₀ᵗ‖u‖² dτ + ‖u(t)‖₂², the quantity whose divergence defines blow-up.
inline double q_functional(const State& s) { return s.acc_unorm + norm_l2_sq(s.u); }

/// One recorded sample. The first nine columns form the CSV schema; the rest
/// feed the concavity diagnostics.
struct FunctionalRow {
  double t = 0.0;
  double E = 0.0;
  double I = 0.0;
  double K = 0.0;
  double M = 0.0;
  double Q = 0.0;
  double sup_abs_u = 0.0;
  double dt = 0.0;
  double energy_residual = 0.0;

  double u_l2_sq = 0.0;    ///< ‖u‖₂²
  double u_full_sq = 0.0;  ///< ‖u‖²
  double v_l2_sq = 0.0;    ///< ‖u_t‖₂²
  double cross_l2 = 0.0;   ///< (u, u_t)
  double acc_dissipation = 0.0;
  double acc_unorm = 0.0;
  double acc_cross = 0.0;
};

enum class Termination { unknown, completed, blowup, overflow, dt_underflow };

struct Trace {
  std::vector<FunctionalRow> rows;
  double E0 = 0.0;
  /// Whether rows carry the running integrals (true for integrator output).
  bool has_accumulators = false;
  Termination termination = Termination::unknown;
};

/// E(t) + ∫₀ᵗ‖u_τ‖² dτ − ∫₀ᵗ(g, u_τ) dτ − E(0); the last integral vanishes
/// without a source.
inline double energy_residual(const State& s, double E, double E0) {
  return E + s.acc_dissipation - s.acc_source_work - E0;
}

inline double energy_residual(const Trace& trace) {
  if (trace.rows.empty()) return 0.0;
  return trace.rows.back().energy_residual;
}

inline double max_abs_energy_residual(const Trace& trace) {
  double m = 0.0;
  for (const auto& r : trace.rows) m = std::max(m, std::abs(r.energy_residual));
  return m;
}

inline FunctionalRow make_row(const State& s, const Nonlinearity& nl, double E0, double dt) {
  FunctionalRow r;
  r.t = s.t;
  r.u_l2_sq = norm_l2_sq(s.u);
  const double grad = norm_grad_sq(s.u);
  r.u_full_sq = r.u_l2_sq + grad;
  r.v_l2_sq = norm_l2_sq(s.v);
  r.cross_l2 = inner_l2(s.u, s.v);
  r.E = 0.5 * r.v_l2_sq + 0.5 * grad - integral_of(s.u, nl.F);
  r.I = nehari(s.u, nl);
  r.K = r.u_full_sq + 2.0 * r.cross_l2;
  r.M = r.v_l2_sq + grad;
  r.Q = s.acc_unorm + r.u_l2_sq;
  r.sup_abs_u = s.u.max_abs();
  r.dt = dt;
  r.energy_residual = energy_residual(s, r.E, E0);
  r.acc_dissipation = s.acc_dissipation;
  r.acc_unorm = s.acc_unorm;
  r.acc_cross = s.acc_cross;
  return r;
}

/// Parameters of the auxiliary functional
///   G(t) = ∫₀ᵗ‖u‖² + ‖u(t)‖₂² + (T − t)‖u₀‖² + b(t + η)².
struct ConcavityParams {
  double lambda = 0.0;
  double b = 0.0;
  double eta = 0.0;
  double T = 0.0;
};

struct ConcavityResult {
  double min_defect = std::numeric_limits<double>::infinity();
  double argmin_t = 0.0;
  double max_scale = 0.0;  ///< max over rows of G·|G''|
  double min_G = std::numeric_limits<double>::infinity();
};

/// Evaluates G·G'' − ((λ+2)/4)(G')² at every recorded time, with
///   G'  = 2(u, u_t) + 2∫₀ᵗ<u, u_τ> + 2b(t + η)
///   G'' = 2(‖u_t‖₂² − I(u)) + 2b.
/// The first row must be the initial state.
inline ConcavityResult concavity_check(const Trace& trace, const ConcavityParams& prm) {
  if (!trace.has_accumulators) {
    throw UsageError("concavity check needs a trace with running integrals");
  }
  if (trace.rows.empty() || trace.rows.front().t != 0.0) {
    throw UsageError("concavity check needs the t = 0 row");
  }
  const double u0_full = trace.rows.front().u_full_sq;
  ConcavityResult out;
  for (const auto& r : trace.rows) {
    const double shift = r.t + prm.eta;
    const double G = r.acc_unorm + r.u_l2_sq + (prm.T - r.t) * u0_full + prm.b * shift * shift;
    const double dG = 2.0 * r.cross_l2 + 2.0 * r.acc_cross + 2.0 * prm.b * shift;
    const double ddG = 2.0 * (r.v_l2_sq - r.I) + 2.0 * prm.b;
    const double defect = G * ddG - 0.25 * (prm.lambda + 2.0) * dG * dG;
    out.max_scale = std::max(out.max_scale, G * std::abs(ddG));
    out.min_G = std::min(out.min_G, G);
    if (defect < out.min_defect) {
      out.min_defect = defect;
      out.argmin_t = r.t;
    }
  }
  return out;
}

/// Violations of strict growth of K between consecutive rows where I < 0.
inline std::size_t count_k_monotonicity_violations(const Trace& trace, double rel_tol) {
  std::size_t bad = 0;
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    const auto& a = trace.rows[k - 1];
    const auto& b = trace.rows[k];
    if (std::max(a.I, b.I) < 0.0 && !(b.K > a.K - rel_tol * std::abs(a.K))) ++bad;
  }
  return bad;
}

}  // namespace sdwave
