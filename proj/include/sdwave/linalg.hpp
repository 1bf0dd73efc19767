#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"

namespace sdwave {

/// Neumaier-compensated accumulator. Summation order is fixed by the caller,
/// so results are bitwise reproducible.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  CompensatedSum s;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s.value();
}

}  // namespace detail

/// out = Δ_h in, with zero Dirichlet ghost values (3-point / 5-point stencil).
inline void apply_laplacian(const Domain& d, std::span<const double> in, std::span<double> out) {
  const int nx = d.interior(0);
  const double ihx2 = 1.0 / (d.spacing(0) * d.spacing(0));
  if (d.dimension() == 1) {
    for (int i = 0; i < nx; ++i) {
      const double left = i > 0 ? in[i - 1] : 0.0;
      const double right = i + 1 < nx ? in[i + 1] : 0.0;
      out[i] = (left - 2.0 * in[i] + right) * ihx2;
    }
    return;
  }
  const int ny = d.interior(1);
  const double ihy2 = 1.0 / (d.spacing(1) * d.spacing(1));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = d.index(i, j);
      const double c = in[k];
      const double w = i > 0 ? in[k - 1] : 0.0;
      const double e = i + 1 < nx ? in[k + 1] : 0.0;
      const double s = j > 0 ? in[k - nx] : 0.0;
      const double n = j + 1 < ny ? in[k + nx] : 0.0;
      out[k] = (w - 2.0 * c + e) * ihx2 + (s - 2.0 * c + n) * ihy2;
    }
  }
}

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Unpreconditioned conjugate gradients for an SPD operator given as a
/// callable `apply(in, out)`. `x` holds the initial guess on entry.
template <typename Apply>
SolveStats conjugate_gradient(const Apply& apply, std::span<const double> rhs, std::span<double> x,
                              double rel_tol, int max_iter) {
  const std::size_t n = rhs.size();
  std::vector<double> r(n), p(n), ap(n);
  apply(std::span<const double>(x.data(), n), std::span<double>(ap));
  for (std::size_t k = 0; k < n; ++k) r[k] = rhs[k] - ap[k];
  const double rhs_norm = std::sqrt(detail::dot(rhs, rhs));
  if (rhs_norm == 0.0) {
    for (std::size_t k = 0; k < n; ++k) x[k] = 0.0;
    return {};
  }
  double rr = detail::dot(r, r);
  p = r;
  SolveStats stats;
  stats.relative_residual = std::sqrt(rr) / rhs_norm;
  while (stats.relative_residual > rel_tol) {
    if (stats.iterations >= max_iter) {
      throw NumericalError("conjugate gradient did not reach relative residual " +
                           std::to_string(rel_tol) + " in " + std::to_string(max_iter) +
                           " iterations");
    }
    apply(std::span<const double>(p), std::span<double>(ap));
    const double pap = detail::dot(p, ap);
    if (!(pap > 0.0) || !std::isfinite(pap)) {
      throw NumericalError("conjugate gradient breakdown (p'Ap = " + std::to_string(pap) + ")");
    }
    const double alpha = rr / pap;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * ap[k];
    }
    const double rr_new = detail::dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = r[k] + beta * p[k];
    ++stats.iterations;
    stats.relative_residual = std::sqrt(rr) / rhs_norm;
  }
  return stats;
}

/// The SPD operator  shift*I - coeff*Δ_h  (shift >= 0, coeff > 0).
///
/// Tridiagonal in 1D and solved by direct elimination; 5-point in 2D and
/// solved by conjugate gradients.
class ShiftedLaplacian {
 public:
  static constexpr double cg_tolerance = 1e-10;

  ShiftedLaplacian(const Domain& domain, double shift, double coeff)
      : domain_(domain), shift_(shift), coeff_(coeff) {
    if (!(coeff > 0.0) || !(shift >= 0.0)) {
      throw UsageError("shifted Laplacian requires shift >= 0 and coeff > 0");
    }
  }

  const Domain& domain() const noexcept { return domain_; }

  void apply(std::span<const double> in, std::span<double> out) const {
    apply_laplacian(domain_, in, out);
    for (std::size_t k = 0; k < in.size(); ++k) out[k] = shift_ * in[k] - coeff_ * out[k];
  }

  /// Solves A x = rhs. `guess` seeds CG in 2D and is ignored in 1D.
  std::vector<double> solve(std::span<const double> rhs, std::span<const double> guess = {},
                            SolveStats* stats = nullptr) const {
    if (rhs.size() != domain_.size()) throw UsageError("rhs size does not match domain");
    if (domain_.dimension() == 1) return solve_tridiagonal(rhs);
    std::vector<double> x(rhs.size(), 0.0);
    if (guess.size() == rhs.size()) x.assign(guess.begin(), guess.end());
    const SolveStats st = conjugate_gradient(
        [this](std::span<const double> in, std::span<double> out) { apply(in, out); }, rhs, x,
        cg_tolerance, 20 * static_cast<int>(rhs.size()) + 100);
    if (stats != nullptr) *stats = st;
    return x;
  }

 private:
  // Thomas algorithm for the constant-coefficient symmetric tridiagonal system.
  std::vector<double> solve_tridiagonal(std::span<const double> rhs) const {
    const std::size_t n = rhs.size();
    const double h2 = domain_.spacing(0) * domain_.spacing(0);
    const double diag = shift_ + 2.0 * coeff_ / h2;
    const double off = -coeff_ / h2;
    std::vector<double> c(n), x(n);
    double denom = diag;
    c[0] = off / denom;
    x[0] = rhs[0] / denom;
    for (std::size_t k = 1; k < n; ++k) {
      denom = diag - off * c[k - 1];
      if (!(std::abs(denom) > 0.0)) throw NumericalError("tridiagonal elimination breakdown");
      c[k] = off / denom;
      x[k] = (rhs[k] - off * x[k - 1]) / denom;
    }
    for (std::size_t k = n - 1; k-- > 0;) x[k] -= c[k] * x[k + 1];
    return x;
  }

  Domain domain_;
  double shift_;
  double coeff_;
};

}  // namespace sdwave
