#pragma once

#include <cstddef>
#include <span>

#include "biphoton/grid.hpp"

namespace biphoton {

/// Log-parabola Gaussian fit: ln v = a + b x + c x² by weighted least
/// squares (weights v²) over samples above `threshold_fraction` of the peak.
struct FitOptions {
  double threshold_fraction = 0.1;
  /// Only samples within this distance of the peak sample enter the fit
  /// (<= 0 disables). Keeps isolated noise spikes out of sparse maps.
  double max_radius = 0.0;
};

struct GaussianFit1D {
  double amplitude = 0.0;
  double center = 0.0;
  double sigma = 0.0;
  double sigma_stderr = 0.0;
  std::size_t samples_used = 0;
};

/// Axis-aligned 2D fit. `sigma` is the geometric mean of the two axes.
struct GaussianFit2D {
  double amplitude = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double sigma = 0.0;
  double sigma_stderr = 0.0;
  std::size_t samples_used = 0;
};

/// Regular 2D lattice: sample (i, j) at (x0 + i*dx, y0 + j*dy), row-major in i.
struct Lattice2D {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
};

/// Throws EstimationError when fewer than 3 (1D) / 5 (2D) samples qualify or
/// the fitted curvature is not negative.
GaussianFit1D fit_gaussian(std::span<const double> x, std::span<const double> v,
                           const FitOptions& opt = {});
GaussianFit1D fit_gaussian(const RealField& profile, const FitOptions& opt = {});

GaussianFit2D fit_gaussian_2d(std::span<const double> values, const Lattice2D& lattice,
                              const FitOptions& opt = {});
GaussianFit2D fit_gaussian_2d(const RealField& image, const FitOptions& opt = {});

}  // namespace biphoton
