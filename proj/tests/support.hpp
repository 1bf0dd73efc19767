#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>

#include "sdwave/domain.hpp"

namespace sdwave::testing {

inline constexpr double pi = std::numbers::pi;

inline Field make_field(const Domain& d, const std::function<double(double, double)>& g) {
  Field f(d);
  for (std::size_t k = 0; k < d.size(); ++k) {
    const auto c = d.coordinates(k);
    f[k] = g(c[0], c[1]);
  }
  return f;
}

inline Field sin_mode(const Domain& d, double amplitude = 1.0) {
  return make_field(d, [&](double x, double y) {
    double v = amplitude * std::sin(pi * x / d.length(0));
    if (d.dimension() == 2) v *= std::sin(pi * y / d.length(1));
    return v;
  });
}

inline Field random_field(const Domain& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field f(d);
  for (std::size_t k = 0; k < d.size(); ++k) f[k] = dist(rng);
  return f;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace sdwave::testing
