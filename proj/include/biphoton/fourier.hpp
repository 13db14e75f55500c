#pragma once

#include <span>

#include "biphoton/grid.hpp"

namespace biphoton {

/// Centered, unitary discrete approximation of  ∫ dk e^{sign·i k x} f(k)
/// over every axis of the field. Zero frequency stays at index n/2 and the
/// output grid is `field.grid.reciprocal()`.
ComplexField fourier_transform(const ComplexField& field, int sign = +1);

/// Reusable in-place transform for one shape; used on hot loops that would
/// otherwise re-plan per call. Not copyable, safe to use from one thread.
class FourierPlan {
 public:
  FourierPlan(const Grid& grid, int sign);
  ~FourierPlan();
  FourierPlan(const FourierPlan&) = delete;
  FourierPlan& operator=(const FourierPlan&) = delete;

  /// Transforms `data` (row-major, shape of the planning grid) in place.
  void execute(std::span<complex> data) const;

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  int sign_;
  void* plan_ = nullptr;
};

}  // namespace biphoton
