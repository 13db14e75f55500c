#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "biphoton/error.hpp"

namespace biphoton {

using complex = std::complex<double>;

/// Evenly sampled, centered axis. Sample i sits at (i - n/2) * spacing, so
/// index n/2 is exactly zero and index 0 is the unpaired negative edge.
struct Axis {
  std::size_t n = 0;
  double spacing = 0.0;

  Axis() = default;
  Axis(std::size_t n, double spacing);

  double coordinate(std::size_t i) const {
    return (static_cast<double>(i) - static_cast<double>(n / 2)) * spacing;
  }
  /// Index holding -coordinate(i). The edge sample maps onto itself.
  std::size_t mirror(std::size_t i) const { return i == 0 ? 0 : n - i; }
  double extent() const { return static_cast<double>(n) * spacing; }
  /// Largest |coordinate| that has a mirror partner on the grid.
  double half_extent() const { return static_cast<double>(n / 2 - 1) * spacing; }
  /// Conjugate axis of a centered DFT: spacing 2*pi / (n * spacing).
  Axis reciprocal() const;

  bool matches(const Axis& other, double rel_tol = 1e-12) const;
};

/// Rank 1..4 product of centered axes, row-major (last axis fastest).
class Grid {
 public:
  Grid() = default;
  explicit Grid(std::vector<Axis> axes);

  static Grid line(std::size_t n, double spacing);
  static Grid plane(std::size_t nx, double dx, std::size_t ny, double dy);
  /// Grid for a two-photon quantity: the photon axes repeated twice.
  static Grid pair(const Grid& photon);

  std::size_t rank() const { return axes_.size(); }
  const Axis& axis(std::size_t d) const { return axes_.at(d); }
  std::span<const Axis> axes() const { return axes_; }
  std::size_t size() const;
  std::vector<std::size_t> shape() const;
  Grid reciprocal() const;
  /// Same grid with every spacing multiplied by `factor`.
  Grid scaled(double factor) const;
  bool matches(const Grid& other, double rel_tol = 1e-12) const;

 private:
  std::vector<Axis> axes_;
};

template <class T>
struct Field {
  Grid grid;
  std::vector<T> values;

  Field() = default;
  explicit Field(Grid g) : grid(std::move(g)), values(grid.size(), T{}) {}
  Field(Grid g, std::vector<T> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.size()) {
      throw ShapeError("field values do not conform to grid shape");
    }
  }

  std::size_t size() const { return values.size(); }
  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }

  T& at(std::size_t i, std::size_t j) { return values[i * grid.axis(1).n + j]; }
  const T& at(std::size_t i, std::size_t j) const {
    return values[i * grid.axis(1).n + j];
  }
};

using ComplexField = Field<complex>;
using RealField = Field<double>;
/// Intensity-like field; values are expected to be non-negative.
using RealImage = RealField;

void require_non_negative(const RealField& image);

/// Visits every flat index with its multi-index, row-major order.
template <class Fn>
void for_each_index(const Grid& grid, Fn&& fn) {
  const std::size_t rank = grid.rank();
  std::vector<std::size_t> idx(rank, 0);
  const std::size_t total = grid.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    fn(flat, std::span<const std::size_t>(idx));
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < grid.axis(d).n) break;
      idx[d] = 0;
    }
  }
}

template <class T>
Field<T> point_reflect(const Field<T>& field);

/// Sets every value to value / max. Throws DomainError if max <= 0.
void normalize_to_peak(RealField& field);

double max_value(std::span<const double> values);
double sum(std::span<const double> values);

}  // namespace biphoton
