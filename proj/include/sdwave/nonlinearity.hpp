#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "sdwave/errors.hpp"
#include "sdwave/expr.hpp"
#include "sdwave/quadrature.hpp"

namespace sdwave {

namespace detail {

inline std::string shortest(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(x);
}

}  // namespace detail

/// Source term f together with its primitive F (F(0) = 0), its derivative,
/// and the constants of the three structural hypotheses:
///
///   (H1)  s f(s) >= p F(s),                p > 2
///   (H2)  |f(s)| <= alpha + beta |s|^q,    q in (1, 2*-1)
///   (H3)  |f'(s)| <= k0 + k1 |s|^l1,       l1 in (0, 2*-2)
///
/// In one and two space dimensions 2* is infinite.
struct Nonlinearity {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> F;
  std::function<double(double)> fprime;
  double p = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double q = 0.0;
  double k0 = 0.0;
  double k1 = 0.0;
  double l1 = 0.0;
  /// How alpha, beta, q, k0, k1, l1 were obtained.
  std::string constants_note;
};

/// f(s) = |s|^(p-2) s
inline Nonlinearity power(double p) {
  if (!(p > 2.0) || !std::isfinite(p)) {
    throw ConfigError("power nonlinearity needs p > 2, got " + std::to_string(p));
  }
  Nonlinearity nl;
  nl.name = "power:" + detail::shortest(p);
  nl.f = [p](double s) { return std::pow(std::abs(s), p - 2.0) * s; };
  nl.F = [p](double s) { return std::pow(std::abs(s), p) / p; };
  nl.fprime = [p](double s) { return (p - 1.0) * std::pow(std::abs(s), p - 2.0); };
  nl.p = p;
  nl.alpha = 0.0;
  nl.beta = 1.0;
  nl.q = p - 1.0;
  nl.k0 = 1e-12;
  nl.k1 = p - 1.0;
  nl.l1 = p - 2.0;
  nl.constants_note =
      "exact: |f(s)| = |s|^(p-1) so alpha=0, beta=1, q=p-1; |f'(s)| = (p-1)|s|^(p-2) so "
      "k1=p-1, l1=p-2, k0 arbitrarily small (1e-12)";
  return nl;
}

/// f(s) = |s|^(p-2) s ln|s|, extended by f(0) = 0.
///
/// With q = p-1+delta the growth constants follow from two scalar maxima:
/// ln s / s^delta <= 1/(e delta) on s >= 1, and s^m |ln s| <= 1/(e m) on (0,1).
inline Nonlinearity logpower(double p, double delta = 0.1) {
  if (!(p > 2.0) || !std::isfinite(p)) {
    throw ConfigError("logpower nonlinearity needs p > 2, got " + std::to_string(p));
  }
  if (!(delta > 0.0)) throw ConfigError("logpower exponent offset must be positive");
  constexpr double e = std::numbers::e;
  Nonlinearity nl;
  nl.name = "logpower:" + detail::shortest(p);
  nl.f = [p](double s) {
    if (s == 0.0) return 0.0;
    const double a = std::abs(s);
    return std::pow(a, p - 2.0) * s * std::log(a);
  };
  nl.F = [p](double s) {
    if (s == 0.0) return 0.0;
    const double a = std::abs(s);
    const double ap = std::pow(a, p);
    return ap * std::log(a) / p - ap / (p * p);
  };
  nl.fprime = [p](double s) {
    if (s == 0.0) return 0.0;
    const double a = std::abs(s);
    return std::pow(a, p - 2.0) * ((p - 1.0) * std::log(a) + 1.0);
  };
  nl.p = p;
  nl.q = p - 1.0 + delta;
  nl.beta = 1.0 / (e * delta);
  nl.alpha = 1.0 / (e * (p - 1.0));
  nl.l1 = p - 2.0 + delta;
  nl.k1 = (p - 1.0) / (e * delta) + 1.0;
  nl.k0 = (p - 1.0) / (e * (p - 2.0)) + 1.0;
  nl.constants_note =
      "q = p-1+delta, beta = 1/(e*delta) (max of ln s/s^delta on s>=1), alpha = 1/(e(p-1)) "
      "(max of s^(p-1)|ln s| on (0,1)); l1 = p-2+delta, k1 = (p-1)/(e*delta)+1, "
      "k0 = (p-1)/(e(p-2))+1; delta = " +
      detail::shortest(delta);
  return nl;
}

/// Hypothesis constants a user must supply for a custom nonlinearity.
struct CustomConstants {
  double p = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double q = 0.0;
  double k0 = 0.0;
  double k1 = 0.0;
  double l1 = 0.0;
};

/// Nonlinearity from expressions in the variable `s`. F is cross-checked
/// against adaptive quadrature of f on a few points of [-5, 5]; fprime falls
/// back to a central difference when no expression is given.
inline Nonlinearity custom(const Expr& f_expr, const Expr& F_expr,
                           const std::optional<Expr>& fprime_expr, const CustomConstants& c) {
  for (const Expr* e : {&f_expr, &F_expr}) {
    if (e->uses(Var::x) || e->uses(Var::y) || e->uses(Var::t)) {
      throw ConfigError("custom nonlinearity expressions may only use the variable s");
    }
  }
  if (!(c.p > 2.0)) throw ConfigError("custom nonlinearity needs p > 2");
  if (!(c.q > 1.0)) throw ConfigError("custom nonlinearity needs q > 1");
  // A fault at s = 0 is treated as the removable-singularity value 0.
  auto at = [](const Expr& e) {
    return [e](double s) {
      try {
        return e(Point{0.0, 0.0, 0.0, s});
      } catch (const DomainFault&) {
        if (s == 0.0) return 0.0;
        throw;
      }
    };
  };
  Nonlinearity nl;
  nl.name = "custom";
  nl.f = at(f_expr);
  nl.F = at(F_expr);
  if (fprime_expr) {
    nl.fprime = at(*fprime_expr);
  } else {
    auto f = nl.f;
    nl.fprime = [f](double s) {
      const double h = 1e-6 * std::max(1.0, std::abs(s));
      return (f(s + h) - f(s - h)) / (2.0 * h);
    };
  }
  nl.p = c.p;
  nl.alpha = c.alpha;
  nl.beta = c.beta;
  nl.q = c.q;
  nl.k0 = c.k0;
  nl.k1 = c.k1;
  nl.l1 = c.l1;
  nl.constants_note = "user supplied";

  if (std::abs(nl.F(0.0)) > 1e-14) throw ConfigError("custom primitive must satisfy F(0) = 0");
  for (int k = -10; k <= 10; ++k) {
    const double s = 0.5 * k;
    const double quad = integrate(nl.f, 0.0, s, 1e-12);
    const double stored = nl.F(s);
    if (std::abs(quad - stored) > 1e-6 * (1.0 + std::abs(stored))) {
      throw ConfigError("custom primitive F disagrees with the integral of f at s = " +
                        std::to_string(s) + " (F = " + std::to_string(stored) +
                        ", quadrature = " + std::to_string(quad) + ")");
    }
  }
  return nl;
}

/// Outcome of a sampled hypothesis check. A pass is evidence on the sample
/// grid, not a proof.
struct CheckReport {
  std::string hypothesis;
  bool passed = true;
  double worst_residual = 0.0;  ///< smallest (most negative) residual seen
  double worst_at = 0.0;        ///< s where it occurred
  std::size_t samples = 0;
  std::string note = "sampled";
};

/// Symmetric, log-spaced nonzero points in [-s_max, -s_max*1e-6] ∪ [s_max*1e-6, s_max].
inline std::vector<double> hypothesis_sample_grid(double s_max, int n_samples) {
  if (!(s_max > 0.0)) throw ConfigError("s_max must be positive");
  if (n_samples < 1000) throw ConfigError("hypothesis checks need at least 1000 samples");
  const int half = (n_samples + 1) / 2;
  const double lo = std::log(s_max * 1e-6);
  const double hi = std::log(s_max);
  std::vector<double> grid;
  grid.reserve(2 * static_cast<std::size_t>(half));
  for (int k = half - 1; k >= 0; --k) {
    grid.push_back(-std::exp(lo + (hi - lo) * k / (half - 1)));
  }
  for (int k = 0; k < half; ++k) grid.push_back(std::exp(lo + (hi - lo) * k / (half - 1)));
  grid.front() = -s_max;
  grid.back() = s_max;
  return grid;
}

namespace detail {

// residual(s) returns {value, scale}; the check passes where value >= -1e-12*scale.
template <typename Residual>
CheckReport run_check(const char* name, double s_max, int n_samples, const Residual& residual) {
  CheckReport rep;
  rep.hypothesis = name;
  bool first = true;
  for (double s : hypothesis_sample_grid(s_max, n_samples)) {
    const auto [value, scale] = residual(s);
    if (!std::isfinite(value)) {
      throw NumericalError(std::string(name) + " residual is not finite at s = " +
                           std::to_string(s));
    }
    ++rep.samples;
    if (value < -1e-12 * scale) rep.passed = false;
    if (first || value < rep.worst_residual) {
      rep.worst_residual = value;
      rep.worst_at = s;
      first = false;
    }
  }
  return rep;
}

}  // namespace detail

/// residual s f(s) - p F(s) >= 0
inline CheckReport check_h1(const Nonlinearity& nl, double s_max, int n_samples) {
  return detail::run_check("H1", s_max, n_samples, [&](double s) {
    const double sf = s * nl.f(s);
    const double pf = nl.p * nl.F(s);
    return std::pair{sf - pf, std::abs(sf) + std::abs(pf)};
  });
}

/// residual alpha + beta|s|^q - |f(s)| >= 0
inline CheckReport check_h2(const Nonlinearity& nl, double s_max, int n_samples) {
  return detail::run_check("H2", s_max, n_samples, [&](double s) {
    const double bound = nl.alpha + nl.beta * std::pow(std::abs(s), nl.q);
    const double af = std::abs(nl.f(s));
    return std::pair{bound - af, bound + af};
  });
}

/// residual k0 + k1|s|^l1 - |f'(s)| >= 0
inline CheckReport check_h3(const Nonlinearity& nl, double s_max, int n_samples) {
  return detail::run_check("H3", s_max, n_samples, [&](double s) {
    const double bound = nl.k0 + nl.k1 * std::pow(std::abs(s), nl.l1);
    const double ad = std::abs(nl.fprime(s));
    return std::pair{bound - ad, bound + ad};
  });
}

}  // namespace sdwave
