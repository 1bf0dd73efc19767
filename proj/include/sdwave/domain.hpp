#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdwave/errors.hpp"

namespace sdwave {

/// Uniform grid on (0,Lx) or (0,Lx)x(0,Ly) with homogeneous Dirichlet data.
///
/// Only interior nodes carry unknowns; boundary values are zero by
/// construction. Interior node (i, j) has coordinates ((i+1)hx, (j+1)hy)
/// and flat index j*(nx-1) + i.
class Domain {
 public:
  static constexpr int min_cells = 4;

  Domain(int dimension, std::array<double, 2> lengths, std::array<int, 2> cells)
      : dimension_(dimension), lengths_(lengths), cells_(cells) {
    if (dimension != 1 && dimension != 2) {
      throw ConfigError("domain dimension must be 1 or 2, got " +
                        std::to_string(dimension));
    }
    for (int a = 0; a < dimension; ++a) {
      if (!(lengths_[a] > 0.0) || !std::isfinite(lengths_[a])) {
        throw ConfigError("domain length must be positive and finite");
      }
      if (cells_[a] < min_cells) {
        throw ConfigError("domain needs at least " + std::to_string(min_cells) +
                          " cells per axis, got " + std::to_string(cells_[a]));
      }
      spacing_[a] = lengths_[a] / cells_[a];
    }
    if (dimension == 1) {
      lengths_[1] = 1.0;
      cells_[1] = 2;
      spacing_[1] = 1.0;
    }
  }

  static Domain interval(double length, int cells) {
    return Domain(1, {length, 1.0}, {cells, 2});
  }

  static Domain rectangle(double lx, double ly, int nx, int ny) {
    return Domain(2, {lx, ly}, {nx, ny});
  }

  int dimension() const noexcept { return dimension_; }
  double length(int axis) const noexcept { return lengths_[axis]; }
  int cells(int axis) const noexcept { return cells_[axis]; }
  double spacing(int axis) const noexcept { return spacing_[axis]; }

  /// Interior nodes along an axis (cells - 1). The y count is 1 in 1D.
  int interior(int axis) const noexcept { return cells_[axis] - 1; }

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(interior(0)) * static_cast<std::size_t>(interior(1));
  }

  /// Quadrature weight h^d of one node.
  double cell_volume() const noexcept {
    return dimension_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1];
  }

  /// |Omega|
  double measure() const noexcept {
    return dimension_ == 1 ? lengths_[0] : lengths_[0] * lengths_[1];
  }

  std::size_t index(int i, int j = 0) const noexcept {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(interior(0)) +
           static_cast<std::size_t>(i);
  }

  /// Coordinates of the interior node with flat index k.
  std::array<double, 2> coordinates(std::size_t k) const noexcept {
    const auto nx = static_cast<std::size_t>(interior(0));
    const auto i = k % nx;
    const auto j = k / nx;
    if (dimension_ == 1) return {static_cast<double>(i + 1) * spacing_[0], 0.0};
    return {static_cast<double>(i + 1) * spacing_[0],
            static_cast<double>(j + 1) * spacing_[1]};
  }

  /// Every grid point on the boundary (used only for compatibility metrics).
  std::vector<std::array<double, 2>> boundary_points() const {
    std::vector<std::array<double, 2>> pts;
    if (dimension_ == 1) {
      pts.push_back({0.0, 0.0});
      pts.push_back({lengths_[0], 0.0});
      return pts;
    }
    for (int i = 0; i <= cells_[0]; ++i) {
      const double x = (i == cells_[0]) ? lengths_[0] : i * spacing_[0];
      pts.push_back({x, 0.0});
      pts.push_back({x, lengths_[1]});
    }
    for (int j = 1; j < cells_[1]; ++j) {
      const double y = j * spacing_[1];
      pts.push_back({0.0, y});
      pts.push_back({lengths_[0], y});
    }
    return pts;
  }

  std::string describe() const {
    if (dimension_ == 1) {
      return "(0," + std::to_string(lengths_[0]) + "), n=" + std::to_string(cells_[0]);
    }
    return "(0," + std::to_string(lengths_[0]) + ")x(0," + std::to_string(lengths_[1]) +
           "), " + std::to_string(cells_[0]) + "x" + std::to_string(cells_[1]);
  }

  friend bool operator==(const Domain& a, const Domain& b) noexcept {
    return a.dimension_ == b.dimension_ && a.lengths_ == b.lengths_ && a.cells_ == b.cells_;
  }

 private:
  int dimension_;
  std::array<double, 2> lengths_;
  std::array<int, 2> cells_;
  std::array<double, 2> spacing_{1.0, 1.0};
};

/// Generic factory mirroring the configuration file layout.
inline Domain build_domain(int dimension, std::span<const double> lengths,
                           std::span<const int> cells) {
  if (dimension != 1 && dimension != 2) {
    throw ConfigError("domain dimension must be 1 or 2");
  }
  const auto d = static_cast<std::size_t>(dimension);
  if (lengths.size() != d || cells.size() != d) {
    throw ConfigError("domain needs exactly " + std::to_string(d) +
                      " lengths and cell counts");
  }
  if (dimension == 1) return Domain::interval(lengths[0], cells[0]);
  return Domain::rectangle(lengths[0], lengths[1], cells[0], cells[1]);
}

/// Grid function on the interior nodes of a Domain.
class Field {
 public:
  explicit Field(const Domain& domain) : domain_(domain), values_(domain.size(), 0.0) {}

  Field(const Domain& domain, std::vector<double> values)
      : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.size()) {
      throw UsageError("field has " + std::to_string(values_.size()) +
                       " values but the domain has " + std::to_string(domain_.size()) +
                       " interior nodes");
    }
  }

  const Domain& domain() const noexcept { return domain_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  bool all_finite() const noexcept {
    for (double x : values_) {
      if (!std::isfinite(x)) return false;
    }
    return true;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double x : values_) m = std::max(m, std::abs(x));
    return m;
  }

  Field& operator+=(const Field& other) {
    check_same(other);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
    return *this;
  }

  Field& operator-=(const Field& other) {
    check_same(other);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
    return *this;
  }

  Field& operator*=(double s) noexcept {
    for (double& x : values_) x *= s;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }

  void check_same(const Field& other) const {
    if (!(domain_ == other.domain_)) {
      throw UsageError("fields live on different domains");
    }
  }

 private:
  Domain domain_;
  std::vector<double> values_;
};

}  // namespace sdwave
