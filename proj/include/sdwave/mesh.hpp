#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "sdwave/domain.hpp"
#include "sdwave/errors.hpp"
#include "sdwave/linalg.hpp"

namespace sdwave {

inline Field laplacian(const Field& u) {
  Field out(u.domain());
  apply_laplacian(u.domain(), u.values(), out.values());
  return out;
}

/// (u, v) by the rectangle rule over interior nodes.
inline double inner_l2(const Field& u, const Field& v) {
  u.check_same(v);
  return u.domain().cell_volume() * detail::dot(u.values(), v.values());
}

inline double norm_l2_sq(const Field& u) { return inner_l2(u, u); }

/// (∇u, ∇v) from forward differences over every cell edge, boundary
/// half-cells included; equals (-Δ_h u, v).
inline double inner_grad(const Field& u, const Field& v) {
  u.check_same(v);
  const Domain& d = u.domain();
  const int nx = d.interior(0);
  const int ny = d.interior(1);
  const auto a = u.values();
  const auto b = v.values();
  auto at = [&](std::span<const double> w, int i, int j) {
    return (i < 0 || i >= nx || j < 0 || j >= ny) ? 0.0 : w[d.index(i, j)];
  };
  const double hx = d.spacing(0);
  CompensatedSum sx;
  for (int j = 0; j < ny; ++j) {
    for (int i = -1; i < nx; ++i) {
      sx += (at(a, i + 1, j) - at(a, i, j)) * (at(b, i + 1, j) - at(b, i, j));
    }
  }
  if (d.dimension() == 1) return sx.value() / hx;
  const double hy = d.spacing(1);
  CompensatedSum sy;
  for (int j = -1; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      sy += (at(a, i, j + 1) - at(a, i, j)) * (at(b, i, j + 1) - at(b, i, j));
    }
  }
  return sx.value() * hy / hx + sy.value() * hx / hy;
}

inline double norm_grad_sq(const Field& u) { return inner_grad(u, u); }

/// <u, v> = (u, v) + (∇u, ∇v), the H^1_0 inner product.
inline double inner_full(const Field& u, const Field& v) {
  return inner_l2(u, v) + inner_grad(u, v);
}

/// ‖u‖² = ‖u‖₂² + ‖∇u‖₂²
inline double norm_full_sq(const Field& u) { return norm_l2_sq(u) + norm_grad_sq(u); }

inline double norm_lr(const Field& u, double r) {
  if (std::isinf(r)) return u.max_abs();
  CompensatedSum s;
  for (double x : u.values()) s += std::pow(std::abs(x), r);
  return std::pow(u.domain().cell_volume() * s.value(), 1.0 / r);
}

/// First Dirichlet eigenvalue of -Δ on the continuous box.
inline double lambda1(const Domain& d) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  const double lx = d.length(0);
  if (d.dimension() == 1) return pi2 / (lx * lx);
  const double ly = d.length(1);
  return pi2 * (1.0 / (lx * lx) + 1.0 / (ly * ly));
}

/// Smallest eigenvalue of the stencil matrix -Δ_h, by inverse power
/// iteration with Rayleigh-quotient stopping test.
inline double discrete_lambda1(const Domain& d, double rel_tol = 1e-10, int max_iter = 5000) {
  const ShiftedLaplacian neg_lap(d, 0.0, 1.0);
  // x(L-x) [y(L-y)] has a large component along the ground state.
  Field v(d);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const auto c = d.coordinates(k);
    double w = c[0] * (d.length(0) - c[0]);
    if (d.dimension() == 2) w *= c[1] * (d.length(1) - c[1]);
    v[k] = w;
  }
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const double scale = 1.0 / std::sqrt(norm_l2_sq(v));
    v *= scale;
    const double rayleigh = norm_grad_sq(v);  // (-Δ_h v, v) with ‖v‖₂ = 1
    if (std::abs(rayleigh - previous) <= rel_tol * rayleigh) return rayleigh;
    previous = rayleigh;
    auto next = neg_lap.solve(v.values(), v.values());
    v = Field(d, std::move(next));
  }
  throw NumericalError("inverse power iteration did not converge in " +
                       std::to_string(max_iter) + " iterations");
}

/// Upper bound (1D, certified) or estimate (2D) for the Sobolev constant S_r
/// in ‖v‖_r <= S_r ‖∇v‖₂ on H^1_0.
struct EmbeddingConstant {
  double r = 2.0;
  double value = 0.0;
  bool certified = false;
  std::string formula;
};

struct EmbeddingOptions {
  std::uint64_t seed = 0;
  int starts = 32;
  double safety_factor = 1.25;
  int max_cells_per_axis = 32;
  int max_iterations = 400;
};

namespace detail {

// max ‖v‖_r / ‖∇v‖₂ over the discrete space, by ascent along the H^1_0
// gradient followed by projection back onto the sphere ‖∇v‖₂ = 1.
inline double estimate_sobolev_quotient(const Domain& d, double r, const EmbeddingOptions& opt) {
  const ShiftedLaplacian neg_lap(d, 0.0, 1.0);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double best = 0.0;
  for (int start = 0; start < opt.starts; ++start) {
    Field v(d);
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = unif(rng);
    v *= 1.0 / std::sqrt(norm_grad_sq(v));
    double quotient = norm_lr(v, r);
    for (int it = 0; it < opt.max_iterations; ++it) {
      Field g(d);
      for (std::size_t k = 0; k < v.size(); ++k) {
        g[k] = std::pow(std::abs(v[k]), r - 2.0) * v[k];
      }
      Field w(d, neg_lap.solve(g.values(), v.values()));
      const double gn = norm_grad_sq(w);
      if (!(gn > 0.0)) break;
      w *= 1.0 / std::sqrt(gn);
      const double q = norm_lr(w, r);
      v = std::move(w);
      const bool done = std::abs(q - quotient) <= 1e-10 * q;
      quotient = q;
      if (done) break;
    }
    best = std::max(best, quotient);
  }
  return best;
}

}  // namespace detail

inline EmbeddingConstant embed_const(const Domain& d, double r, const EmbeddingOptions& opt = {}) {
  if (!(r >= 2.0)) throw ConfigError("embedding exponent r must be >= 2");
  EmbeddingConstant out;
  out.r = r;
  if (d.dimension() == 1) {
    const double len = d.length(0);
    out.certified = true;
    if (r == 2.0) {
      out.value = 1.0 / std::sqrt(lambda1(d));
      out.formula = "S_2 = 1/sqrt(lambda1) = L/pi";
    } else if (std::isinf(r)) {
      out.value = std::sqrt(len) / 2.0;
      out.formula = "S_inf = sqrt(L)/2  (|v(x)|^2 <= x(L-x)/L * |v'|_2^2)";
    } else {
      out.value = std::pow(len, 1.0 / r + 0.5) / 2.0;
      out.formula = "S_r = L^(1/r+1/2)/2  (|v|_r <= L^(1/r)|v|_inf, |v|_inf <= sqrt(L)/2 |v'|_2)";
    }
    return out;
  }
  if (std::isinf(r)) throw ConfigError("H^1_0 does not embed into L^inf in 2D");
  if (r == 2.0) {
    out.value = 1.0 / std::sqrt(lambda1(d));
    out.certified = true;
    out.formula = "S_2 = 1/sqrt(lambda1)";
    return out;
  }
  const int nx = std::min(d.cells(0), opt.max_cells_per_axis);
  const int ny = std::min(d.cells(1), opt.max_cells_per_axis);
  const Domain coarse = Domain::rectangle(d.length(0), d.length(1), nx, ny);
  out.value = opt.safety_factor * detail::estimate_sobolev_quotient(coarse, r, opt);
  out.certified = false;
  out.formula = "S_r ~ " + std::to_string(opt.safety_factor) +
                " * max discrete |v|_r/|grad v|_2 (" + std::to_string(opt.starts) +
                " random starts, " + std::to_string(nx) + "x" + std::to_string(ny) +
                " grid); estimated, not certified";
  return out;
}

}  // namespace sdwave
