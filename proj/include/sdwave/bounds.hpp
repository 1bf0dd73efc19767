#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/functionals.hpp"
#include "sdwave/mesh.hpp"
#include "sdwave/nonlinearity.hpp"
#include "sdwave/quadrature.hpp"

namespace sdwave {

/// Scalar summaries of the initial data that every bound is built from.
struct InitialData {
  double u0_l2_sq = 0.0;    ///< ‖u₀‖₂²
  double u0_full_sq = 0.0;  ///< ‖u₀‖²
  double cross = 0.0;       ///< (u₀, u₁)
  double E0 = 0.0;
  double I0 = 0.0;
  double K0 = 0.0;  ///< ‖u₀‖² + 2(u₀, u₁)
  double M0 = 0.0;  ///< ‖u₁‖₂² + ‖∇u₀‖₂²
  double lambda1 = 0.0;
};

inline InitialData summarize(const Field& u0, const Field& v0, const Nonlinearity& nl) {
  u0.check_same(v0);
  InitialData d;
  d.u0_l2_sq = norm_l2_sq(u0);
  const double grad = norm_grad_sq(u0);
  d.u0_full_sq = d.u0_l2_sq + grad;
  d.cross = inner_l2(u0, v0);
  d.E0 = energy(u0, v0, nl);
  d.I0 = nehari(u0, nl);
  d.K0 = d.u0_full_sq + 2.0 * d.cross;
  d.M0 = norm_l2_sq(v0) + grad;
  d.lambda1 = lambda1(u0.domain());
  return d;
}

/// 4p(1+λ₁)/((p−2)λ₁)
inline double criterion_factor(double p, double lam1) {
  return 4.0 * p * (1.0 + lam1) / ((p - 2.0) * lam1);
}

/// λ = p − (p−2)λ₁/(1+λ₁), always inside (2, p).
inline double concavity_lambda(double p, double lam1) {
  return p - (p - 2.0) * lam1 / (1.0 + lam1);
}

struct CriterionResult {
  bool holds = false;
  double margin = 0.0;  ///< K₀ − factor·E₀
  double factor = 0.0;
  bool in_unstable_set = false;  ///< I(u₀) < 0
};

/// High-energy blow-up criterion: u₀ ∈ N₋ and K₀ > factor·E₀.
inline CriterionResult criterion_high_energy(const InitialData& d, double p) {
  CriterionResult c;
  c.factor = criterion_factor(p, d.lambda1);
  c.margin = d.K0 - c.factor * d.E0;
  c.in_unstable_set = d.I0 < 0.0;
  c.holds = c.margin > 0.0 && c.in_unstable_set;
  return c;
}

inline CriterionResult criterion_high_energy(const Field& u0, const Field& v0,
                                             const Nonlinearity& nl) {
  return criterion_high_energy(summarize(u0, v0, nl), nl.p);
}

/// T(η, b) = 2(‖u₀‖₂² + bη²) / ((λ−2)[(u₀,u₁) + bη] − 2‖u₀‖²), valid for η
/// above the admissibility threshold (positive denominator).
inline double upper_bound_of_eta(const InitialData& d, double lambda, double b, double eta) {
  const double den = (lambda - 2.0) * (d.cross + b * eta) - 2.0 * d.u0_full_sq;
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return 2.0 * (d.u0_l2_sq + b * eta * eta) / den;
}

struct UpperBoundVariant {
  std::string name;
  double lambda = 0.0;
  double a = 0.0;
  double b0 = 0.0;
  double eta0 = 0.0;
  double T = 0.0;
  std::string formula;
};

namespace detail {

// Minimum over η of T(η, b): with a = 2‖u₀‖² − (λ−2)(u₀,u₁) and c = (λ−2)²b‖u₀‖₂²,
// η₀ = (√(a²+c) + a)/((λ−2)b) and T = 4(√(a²+c) + a)/((λ−2)²b).
inline UpperBoundVariant minimize_over_eta(const InitialData& d, double lambda, double b) {
  UpperBoundVariant v;
  v.lambda = lambda;
  v.b0 = b;
  v.a = 2.0 * d.u0_full_sq - (lambda - 2.0) * d.cross;
  const double lm2 = lambda - 2.0;
  const double root = std::sqrt(v.a * v.a + lm2 * lm2 * b * d.u0_l2_sq);
  v.eta0 = (root + v.a) / (lm2 * b);
  v.T = 4.0 * (root + v.a) / (lm2 * lm2 * b);
  return v;
}

}  // namespace detail

struct UpperBoundReport {
  std::optional<UpperBoundVariant> main;             ///< high-energy criterion variant
  std::optional<UpperBoundVariant> negative_energy;  ///< E(0) < 0 variant
  double T_upper = 0.0;
  std::string winner;

  const UpperBoundVariant& best() const {
    return winner == "negative_energy" ? *negative_energy : *main;
  }
};

/// Upper bounds on the blow-up time.
///
/// main: λ from concavity_lambda, b₀ = ((p−2)λ₁/(2λ(1+λ₁)))·margin.
/// negative_energy (E₀ < 0): λ → p, b₀ → −2E₀.
/// The smaller applicable value is reported.
inline UpperBoundReport upper_bound(const InitialData& d, double p) {
  UpperBoundReport rep;
  const CriterionResult crit = criterion_high_energy(d, p);
  if (crit.holds) {
    const double lambda = concavity_lambda(p, d.lambda1);
    const double b0 = (p - 2.0) * d.lambda1 / (2.0 * lambda * (1.0 + d.lambda1)) * crit.margin;
    UpperBoundVariant v = detail::minimize_over_eta(d, lambda, b0);
    v.name = "main";
    v.formula =
        "lambda = p - (p-2)lambda1/(1+lambda1); a = 2|u0|^2 - (lambda-2)(u0,u1); "
        "b0 = (p-2)lambda1/(2 lambda (1+lambda1)) * margin; "
        "T = 4[sqrt(a^2 + (lambda-2)^2 b0 |u0|_2^2) + a]/((lambda-2)^2 b0)";
    rep.main = v;
  }
  if (d.E0 < 0.0) {
    UpperBoundVariant v = detail::minimize_over_eta(d, p, -2.0 * d.E0);
    v.name = "negative_energy";
    v.formula =
        "lambda -> p, b0 -> -2E(0); a = 2|u0|^2 - (p-2)(u0,u1); "
        "T = 4[sqrt(a^2 + (p-2)^2 b0 |u0|_2^2) + a]/((p-2)^2 b0)";
    rep.negative_energy = v;
  }
  if (!rep.main && !rep.negative_energy) {
    throw PreconditionError("no upper bound applies: the high-energy criterion fails (margin " +
                                std::to_string(crit.margin) + ", I(u0) = " +
                                std::to_string(d.I0) + ") and E(0) >= 0",
                            crit.margin);
  }
  if (rep.main && (!rep.negative_energy || rep.main->T <= rep.negative_energy->T)) {
    rep.T_upper = rep.main->T;
    rep.winner = "main";
  } else {
    rep.T_upper = rep.negative_energy->T;
    rep.winner = "negative_energy";
  }
  return rep;
}

inline UpperBoundReport upper_bound(const Field& u0, const Field& v0, const Nonlinearity& nl) {
  return upper_bound(summarize(u0, v0, nl), nl.p);
}

/// Constants of M'(t) <= C4 + C5 M(t)^q.
struct GrowthConstants {
  double C4 = 0.0;
  double C5 = 0.0;
  double q = 0.0;
  EmbeddingConstant S;  ///< S_{2q}
  bool certified = false;
  std::string derivation;
};

inline GrowthConstants derive_constants(const Nonlinearity& nl, const Domain& domain,
                                        const EmbeddingOptions& opt = {}) {
  if (!(nl.q > 1.0) || !std::isfinite(nl.q)) {
    throw ConfigError("growth exponent q must lie in (1, 2*-1) = (1, inf) in 1D/2D");
  }
  GrowthConstants g;
  g.q = nl.q;
  g.S = embed_const(domain, 2.0 * nl.q, opt);
  g.certified = g.S.certified;
  g.C4 = nl.alpha * nl.alpha * domain.measure();
  g.C5 = nl.beta * nl.beta * std::pow(g.S.value, 2.0 * nl.q);
  g.derivation =
      "M' = 2(u_t, Δu_t - u_t + f(u)) <= -2|u_t|^2 + 2 alpha ∫|u_t| + 2 beta ∫|u_t||u|^q; "
      "∫|u_t| <= |Ω|^(1/2) |u_t|_2; ∫|u_t||u|^q <= |u_t|_2 |u|_{2q}^q <= |u_t|_2 S_{2q}^q "
      "|∇u|_2^q; Young with ε = 1 on both terms: 2 alpha |Ω|^(1/2)|u_t|_2 <= |u_t|_2^2 + "
      "alpha^2|Ω| and 2 beta S^q |u_t|_2 |∇u|_2^q <= |u_t|_2^2 + beta^2 S^(2q) |∇u|_2^(2q); "
      "2|u_t|_2^2 <= 2|u_t|^2 is absorbed and |∇u|_2^(2q) <= M^q, so C4 = alpha^2 |Ω|, "
      "C5 = beta^2 S_{2q}^(2q). S_{2q}: " +
      g.S.formula;
  return g;
}

/// ∫_{M0}^∞ ds / (C4 + C5 s^q), q > 1.
///
/// C4 = 0 has the closed form M0^(1−q)/(C5(q−1)). Otherwise adaptive Simpson
/// in x = ln s on [ln M0, ln S*] plus the tail bound S*^(1−q)/(C5(q−1)), with
/// S* pushed out until the tail is below 1e-12 of the total.
inline double lower_bound_integral(double M0, double C4, double C5, double q) {
  if (!(M0 > 0.0)) throw PreconditionError("lower bound needs M(0) > 0", M0);
  if (!(q > 1.0)) throw ConfigError("lower bound needs q > 1");
  if (!(C5 > 0.0)) throw ConfigError("lower bound needs C5 > 0");
  if (!(C4 >= 0.0)) throw ConfigError("lower bound needs C4 >= 0");
  auto tail = [&](double s) { return std::pow(s, 1.0 - q) / (C5 * (q - 1.0)); };
  if (C4 == 0.0) return tail(M0);
  auto integrand = [&](double x) {
    const double s = std::exp(x);
    return s / (C4 + C5 * std::pow(s, q));
  };
  double lo = std::log(M0);
  double total = 0.0;
  for (int block = 0; block < 400; ++block) {
    const double hi = lo + 10.0;
    total += integrate(integrand, lo, hi, 1e-12);
    lo = hi;
    const double rest = tail(std::exp(lo));
    if (rest <= 1e-12 * total) return total + rest;
    if (!std::isfinite(std::exp(lo + 10.0))) break;
  }
  throw NumericalError("lower-bound quadrature could not make the tail negligible");
}

struct LowerBoundReport {
  double M0 = 0.0;
  double T_lower = 0.0;
  GrowthConstants constants;
  std::string method;
};

inline LowerBoundReport lower_bound(const InitialData& d, const Nonlinearity& nl,
                                    const Domain& domain, const EmbeddingOptions& opt = {}) {
  if (!(d.M0 > 0.0)) {
    throw PreconditionError("no blow-up from zero data: M(0) = 0, lower bound undefined", d.M0);
  }
  LowerBoundReport rep;
  rep.M0 = d.M0;
  rep.constants = derive_constants(nl, domain, opt);
  rep.T_lower = lower_bound_integral(d.M0, rep.constants.C4, rep.constants.C5, rep.constants.q);
  rep.method = rep.constants.C4 == 0.0 ? "closed form M0^(1-q)/(C5(q-1))"
                                       : "adaptive Simpson in ln s plus analytic tail";
  return rep;
}

inline LowerBoundReport lower_bound(const Field& u0, const Field& v0, const Nonlinearity& nl,
                                    const EmbeddingOptions& opt = {}) {
  return lower_bound(summarize(u0, v0, nl), nl, u0.domain(), opt);
}

struct HighEnergyData {
  Field u0;
  Field v0;
  double alpha = 0.0;
  double beta = 0.0;
  int doublings = 0;
};

/// Initial data (α ū₀, β ū₁) with E(0) = H that satisfies the high-energy
/// criterion: α doubles from 1 until α ū₀ ∈ N₋, ‖α ū₀‖² > factor·H and the
/// kinetic energy left over, 2(H − ½‖∇u₀‖₂² + ∫F(u₀)), is positive; β then
/// solves E(0) = H.
inline HighEnergyData construct_high_energy_data(const Field& ubar0, const Field& ubar1, double H,
                                                 const Nonlinearity& nl) {
  ubar0.check_same(ubar1);
  if (!(H > 0.0)) throw PreconditionError("target energy H must be positive", H);
  const double n0 = norm_l2_sq(ubar0);
  const double n1 = norm_l2_sq(ubar1);
  if (!(n0 > 0.0) || !(n1 > 0.0)) {
    throw PreconditionError("reference data must be nonzero", std::min(n0, n1));
  }
  const double pair = inner_l2(ubar0, ubar1);
  if (!(pair > 0.0)) {
    throw PreconditionError("reference data need (ubar0, ubar1) > 0", pair);
  }
  const double factor = criterion_factor(nl.p, lambda1(ubar0.domain()));
  double alpha = 1.0;
  for (int doublings = 0; doublings <= 60; ++doublings, alpha *= 2.0) {
    const Field u0 = alpha * ubar0;
    if (!(nehari(u0, nl) < 0.0)) continue;
    if (!(norm_full_sq(u0) > factor * H)) continue;
    const double radicand = 2.0 * (H - 0.5 * norm_grad_sq(u0) + integral_of(u0, nl.F));
    if (!(radicand > 0.0)) continue;
    const double beta = std::sqrt(radicand / n1);
    return HighEnergyData{u0, beta * ubar1, alpha, beta, doublings};
  }
  throw NumericalError("high-energy construction failed: alpha reached 2^60 without meeting "
                       "I(u0) < 0, |u0|^2 > factor*H and positive kinetic energy");
}

/// Everything known about the data before integrating: functionals at t = 0,
/// both blow-up criteria and whichever bounds apply. Bounds that do not
/// apply carry the reason instead of a value.
struct BoundsReport {
  InitialData data;
  CriterionResult high_energy;
  bool negative_energy = false;  ///< E(0) < 0
  std::optional<UpperBoundReport> upper;
  std::string upper_error;
  std::optional<LowerBoundReport> lower;
  std::string lower_error;
};

inline BoundsReport evaluate_bounds(const Field& u0, const Field& v0, const Nonlinearity& nl,
                                    const EmbeddingOptions& opt = {}) {
  BoundsReport rep;
  rep.data = summarize(u0, v0, nl);
  rep.high_energy = criterion_high_energy(rep.data, nl.p);
  rep.negative_energy = rep.data.E0 < 0.0;
  try {
    rep.upper = upper_bound(rep.data, nl.p);
  } catch (const PreconditionError& e) {
    rep.upper_error = e.what();
  }
  try {
    rep.lower = lower_bound(rep.data, nl, u0.domain(), opt);
  } catch (const PreconditionError& e) {
    rep.lower_error = e.what();
  }
  return rep;
}

}  // namespace sdwave
