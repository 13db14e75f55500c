#pragma once

#include <span>

#include "biphoton/grid.hpp"

namespace biphoton {

/// Pearson coefficient over all samples. Throws DomainError when either
/// input has zero variance, ShapeError on length mismatch.
double pearson_correlation(std::span<const double> a, std::span<const double> b);
double pearson_correlation(const RealField& a, const RealField& b);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

/// Relative L2 distance ||a - b|| / ||a||.
double relative_l2(std::span<const double> a, std::span<const double> b);

}  // namespace biphoton
