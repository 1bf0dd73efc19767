#pragma once

#include <cmath>
#include <string>

#include "sdwave/errors.hpp"

namespace sdwave {

namespace detail {

template <typename F>
double simpson_recursive(const F& f, double a, double b, double fa, double fm, double fb,
                         double whole, double tol, int depth, int& evaluations) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  evaluations += 2;
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    throw NumericalError("adaptive Simpson exceeded its recursion depth");
  }
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recursive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evaluations) +
         simpson_recursive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evaluations);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b].
///
/// The absolute tolerance handed to the recursion is rel_tol times a coarse
/// estimate of ∫|f| (one composite Simpson pass on 64 panels).
template <typename F>
double integrate(const F& f, double a, double b, double rel_tol = 1e-10, int max_depth = 50) {
  if (a == b) return 0.0;
  constexpr int panels = 64;
  const double h = (b - a) / panels;
  double coarse_abs = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double x0 = a + k * h;
    coarse_abs += std::abs(h / 6.0 * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h)));
  }
  const double tol = rel_tol * (coarse_abs > 0.0 ? coarse_abs : 1.0);
  double total = 0.0;
  int evaluations = 0;
  // Panel by panel.
  for (int k = 0; k < panels; ++k) {
    const double x0 = a + k * h;
    const double x1 = k + 1 == panels ? b : x0 + h;
    const double f0 = f(x0);
    const double fm = f(0.5 * (x0 + x1));
    const double f1 = f(x1);
    const double whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
    total += detail::simpson_recursive(f, x0, x1, f0, fm, f1, whole, tol / panels, max_depth,
                                       evaluations);
  }
  return total;
}

}  // namespace sdwave
