#include "biphoton/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace biphoton {

Axis::Axis(std::size_t n_, double spacing_) : n(n_), spacing(spacing_) {
  if (n == 0 || n % 2 != 0) {
    throw ShapeError("axis sample count must be positive and even, got " +
                     std::to_string(n));
  }
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw DomainError("axis spacing must be positive and finite");
  }
}

Axis Axis::reciprocal() const {
  return Axis(n, 2.0 * std::numbers::pi / (static_cast<double>(n) * spacing));
}

bool Axis::matches(const Axis& other, double rel_tol) const {
  return n == other.n &&
         std::abs(spacing - other.spacing) <=
             rel_tol * std::max(std::abs(spacing), std::abs(other.spacing));
}

Grid::Grid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 4) {
    throw ShapeError("grid rank must be between 1 and 4");
  }
  for (const auto& a : axes_) {
    if (a.n == 0) throw ShapeError("grid axis is uninitialised");
  }
}

Grid Grid::line(std::size_t n, double spacing) { return Grid({Axis(n, spacing)}); }

Grid Grid::plane(std::size_t nx, double dx, std::size_t ny, double dy) {
  return Grid({Axis(nx, dx), Axis(ny, dy)});
}

Grid Grid::pair(const Grid& photon) {
  if (photon.rank() > 2) throw ShapeError("photon grid must be 1D or 2D");
  std::vector<Axis> axes(photon.axes().begin(), photon.axes().end());
  axes.insert(axes.end(), photon.axes().begin(), photon.axes().end());
  return Grid(std::move(axes));
}

std::size_t Grid::size() const {
  if (axes_.empty()) return 0;
  return std::accumulate(axes_.begin(), axes_.end(), std::size_t{1},
                         [](std::size_t acc, const Axis& a) { return acc * a.n; });
}

std::vector<std::size_t> Grid::shape() const {
  std::vector<std::size_t> s;
  s.reserve(axes_.size());
  for (const auto& a : axes_) s.push_back(a.n);
  return s;
}

Grid Grid::reciprocal() const {
  std::vector<Axis> axes;
  axes.reserve(axes_.size());
  for (const auto& a : axes_) axes.push_back(a.reciprocal());
  return Grid(std::move(axes));
}

Grid Grid::scaled(double factor) const {
  std::vector<Axis> axes;
  axes.reserve(axes_.size());
  for (const auto& a : axes_) axes.emplace_back(a.n, a.spacing * factor);
  return Grid(std::move(axes));
}

bool Grid::matches(const Grid& other, double rel_tol) const {
  if (rank() != other.rank()) return false;
  for (std::size_t d = 0; d < rank(); ++d) {
    if (!axes_[d].matches(other.axes_[d], rel_tol)) return false;
  }
  return true;
}

void require_non_negative(const RealField& image) {
  for (double v : image.values) {
    if (!(v >= 0.0)) throw DomainError("image contains negative or NaN values");
  }
}

template <class T>
Field<T> point_reflect(const Field<T>& field) {
  const Grid& grid = field.grid;
  const std::size_t rank = grid.rank();
  std::vector<std::size_t> strides(rank, 1);
  for (std::size_t d = rank - 1; d-- > 0;) {
    strides[d] = strides[d + 1] * grid.axis(d + 1).n;
  }
  Field<T> out(grid);
  for_each_index(grid, [&](std::size_t flat, std::span<const std::size_t> idx) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) {
      src += grid.axis(d).mirror(idx[d]) * strides[d];
    }
    out.values[flat] = field.values[src];
  });
  return out;
}

template Field<double> point_reflect(const Field<double>&);
template Field<complex> point_reflect(const Field<complex>&);

void normalize_to_peak(RealField& field) {
  const double peak = max_value(field.values);
  if (!(peak > 0.0)) throw DomainError("cannot peak-normalise a field with max <= 0");
  for (double& v : field.values) v /= peak;
}

double max_value(std::span<const double> values) {
  if (values.empty()) throw ShapeError("empty value array");
  return *std::max_element(values.begin(), values.end());
}

double sum(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

}  // namespace biphoton
