#include "biphoton/gaussian_fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace biphoton {
namespace {

struct Sample {
  double x;
  double y;
  double v;
};

struct WlsResult {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;
};

// Rows of `design` against ln v, weighted by v².
WlsResult weighted_log_fit(const Eigen::MatrixXd& design, const std::vector<Sample>& samples) {
  const auto m = static_cast<Eigen::Index>(samples.size());
  const auto p = design.cols();
  Eigen::VectorXd w(m);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    w(i) = samples[static_cast<std::size_t>(i)].v * samples[static_cast<std::size_t>(i)].v;
    y(i) = std::log(samples[static_cast<std::size_t>(i)].v);
  }
  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw EstimationError("gaussian fit: singular normal equations");
  }
  WlsResult out;
  out.params = ldlt.solve(design.transpose() * w.asDiagonal() * y);
  const Eigen::VectorXd r = y - design * out.params;
  const double dof = std::max<double>(1.0, static_cast<double>(m - p));
  // Relative weights: scale the covariance by the weighted residual variance.
  const double s2 = (w.array() * r.array().square()).sum() / dof;
  out.covariance = s2 * ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  if (!out.params.allFinite()) throw EstimationError("gaussian fit diverged");
  return out;
}

std::vector<Sample> select(std::vector<Sample> all, const FitOptions& opt, Sample& peak) {
  if (all.empty()) throw EstimationError("gaussian fit: no samples");
  peak = *std::max_element(all.begin(), all.end(),
                           [](const Sample& a, const Sample& b) { return a.v < b.v; });
  if (!(peak.v > 0.0) || !std::isfinite(peak.v)) {
    throw EstimationError("gaussian fit: peak is not positive");
  }
  const double cut = opt.threshold_fraction * peak.v;
  const double r2 = opt.max_radius * opt.max_radius;
  std::vector<Sample> keep;
  for (const auto& s : all) {
    if (!(s.v > cut) || !(s.v > 0.0)) continue;
    if (opt.max_radius > 0.0) {
      const double dx = s.x - peak.x;
      const double dy = s.y - peak.y;
      if (dx * dx + dy * dy > r2) continue;
    }
    keep.push_back({s.x - peak.x, s.y - peak.y, s.v});
  }
  return keep;
}

double sigma_from_curvature(double c) {
  if (!(c < 0.0)) throw EstimationError("gaussian fit: curvature is not negative");
  return std::sqrt(-1.0 / (2.0 * c));
}

}  // namespace

GaussianFit1D fit_gaussian(std::span<const double> x, std::span<const double> v,
                           const FitOptions& opt) {
  if (x.size() != v.size()) throw ShapeError("fit_gaussian: size mismatch");
  std::vector<Sample> all;
  all.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) all.push_back({x[i], 0.0, v[i]});
  Sample peak{};
  const auto s = select(std::move(all), opt, peak);
  if (s.size() < 3) throw EstimationError("gaussian fit: fewer than 3 samples above threshold");

  Eigen::MatrixXd design(static_cast<Eigen::Index>(s.size()), 3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = s[i].x;
    design(r, 2) = s[i].x * s[i].x;
  }
  const auto fit = weighted_log_fit(design, s);
  const double a = fit.params(0);
  const double b = fit.params(1);
  const double c = fit.params(2);
  GaussianFit1D out;
  out.sigma = sigma_from_curvature(c);
  out.center = peak.x - b / (2.0 * c);
  out.amplitude = std::exp(a - b * b / (4.0 * c));
  // dσ/dc = σ³
  out.sigma_stderr = std::pow(out.sigma, 3) * std::sqrt(std::max(0.0, fit.covariance(2, 2)));
  out.samples_used = s.size();
  return out;
}

GaussianFit1D fit_gaussian(const RealField& profile, const FitOptions& opt) {
  if (profile.grid.rank() != 1) throw ShapeError("fit_gaussian expects a 1D profile");
  const Axis& a = profile.grid.axis(0);
  std::vector<double> x(a.n);
  for (std::size_t i = 0; i < a.n; ++i) x[i] = a.coordinate(i);
  return fit_gaussian(x, profile.values, opt);
}

GaussianFit2D fit_gaussian_2d(std::span<const double> values, const Lattice2D& lat,
                              const FitOptions& opt) {
  if (values.size() != lat.nx * lat.ny) throw ShapeError("fit_gaussian_2d: size mismatch");
  std::vector<Sample> all;
  all.reserve(values.size());
  for (std::size_t i = 0; i < lat.nx; ++i) {
    for (std::size_t j = 0; j < lat.ny; ++j) {
      all.push_back({lat.x0 + static_cast<double>(i) * lat.dx,
                     lat.y0 + static_cast<double>(j) * lat.dy, values[i * lat.ny + j]});
    }
  }
  Sample peak{};
  const auto s = select(std::move(all), opt, peak);
  if (s.size() < 5) throw EstimationError("gaussian fit: fewer than 5 samples above threshold");

  Eigen::MatrixXd design(static_cast<Eigen::Index>(s.size()), 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = s[i].x;
    design(r, 2) = s[i].x * s[i].x;
    design(r, 3) = s[i].y;
    design(r, 4) = s[i].y * s[i].y;
  }
  const auto fit = weighted_log_fit(design, s);
  const double a = fit.params(0);
  const double bx = fit.params(1);
  const double cx = fit.params(2);
  const double by = fit.params(3);
  const double cy = fit.params(4);
  GaussianFit2D out;
  out.sigma_x = sigma_from_curvature(cx);
  out.sigma_y = sigma_from_curvature(cy);
  out.sigma = std::sqrt(out.sigma_x * out.sigma_y);
  out.center_x = peak.x - bx / (2.0 * cx);
  out.center_y = peak.y - by / (2.0 * cy);
  out.amplitude = std::exp(a - bx * bx / (4.0 * cx) - by * by / (4.0 * cy));
  // σ = (σx σy)^½ with dσx/dcx = σx³: ∂σ/∂cx = σ σx² / 2.
  Eigen::Vector2d grad(out.sigma * out.sigma_x * out.sigma_x / 2.0,
                       out.sigma * out.sigma_y * out.sigma_y / 2.0);
  Eigen::Matrix2d cov;
  cov << fit.covariance(2, 2), fit.covariance(2, 4), fit.covariance(4, 2), fit.covariance(4, 4);
  out.sigma_stderr = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  out.samples_used = s.size();
  return out;
}

GaussianFit2D fit_gaussian_2d(const RealField& image, const FitOptions& opt) {
  if (image.grid.rank() != 2) throw ShapeError("fit_gaussian_2d expects a 2D image");
  const Axis& ax = image.grid.axis(0);
  const Axis& ay = image.grid.axis(1);
  return fit_gaussian_2d(image.values,
                         {ax.n, ay.n, ax.coordinate(0), ay.coordinate(0), ax.spacing, ay.spacing},
                         opt);
}

}  // namespace biphoton
