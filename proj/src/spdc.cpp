#include "biphoton/spdc.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

namespace biphoton {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string(name) + " must be finite and > 0");
  }
}

// Splits a pair grid of rank 2 or 4 into its photon grid.
Grid photon_of(const Grid& pair) {
  if (pair.rank() != 2 && pair.rank() != 4) {
    throw ShapeError("joint probability must have rank 2 or 4");
  }
  const std::size_t d = pair.rank() / 2;
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < d; ++i) {
    if (!pair.axis(i).matches(pair.axis(i + d))) {
      throw ShapeError("joint probability axes differ between the two photons");
    }
    axes.push_back(pair.axis(i));
  }
  return Grid(std::move(axes));
}

}  // namespace

SigmaPair derive_sigmas(const SpdcParams& p) {
  require_positive(p.w0, "w0");
  require_positive(p.L, "L");
  require_positive(p.lambda_p, "lambda_p");
  require_positive(p.n_p, "n_p");
  return {p.w0 / std::numbers::sqrt2,
          std::sqrt(p.L * p.lambda_p / (12.0 * std::numbers::pi * p.n_p))};
}

double schmidt_number(const SigmaPair& s) {
  require_positive(s.sigma_plus, "sigma_plus");
  require_positive(s.sigma_minus, "sigma_minus");
  const double r = s.sigma_plus / s.sigma_minus;
  const double t = r + 1.0 / r;
  return 0.25 * t * t;
}

SigmaPair sigmas_for_schmidt(double K, double sigma_minus) {
  if (!(K >= 1.0) || !std::isfinite(K)) throw DomainError("Schmidt number must be >= 1");
  require_positive(sigma_minus, "sigma_minus");
  const double r = std::sqrt(K) + std::sqrt(K - 1.0);
  return {r * sigma_minus, sigma_minus};
}

void check_resolution(const Grid& photon, const SigmaPair& s) {
  require_positive(s.sigma_plus, "sigma_plus");
  require_positive(s.sigma_minus, "sigma_minus");
  for (std::size_t d = 0; d < photon.rank(); ++d) {
    const Axis& a = photon.axis(d);
    const double extent = 0.5 * a.extent() * s.sigma_minus;
    const double step = a.spacing * s.sigma_plus;
    if (extent < kMinHalfExtentSigmaMinus) {
      std::ostringstream os;
      os << "axis " << d << ": (n/2)*dk*sigma_minus = " << extent << " < "
         << kMinHalfExtentSigmaMinus << " (grid too narrow for the marginal)";
      throw ResolutionError(os.str());
    }
    if (step > kMaxSpacingSigmaPlus) {
      std::ostringstream os;
      os << "axis " << d << ": dk*sigma_plus = " << step << " > " << kMaxSpacingSigmaPlus
         << " (sum-momentum ridge under-sampled)";
      throw ResolutionError(os.str());
    }
  }
}

std::vector<double> gaussian_pair_factor(const Axis& axis, const SigmaPair& s) {
  const std::size_t n = axis.n;
  const double sp2 = s.sigma_plus * s.sigma_plus;
  const double sm2 = s.sigma_minus * s.sigma_minus;
  std::vector<double> f(n * n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k1 = axis.coordinate(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double k2 = axis.coordinate(j);
      const double sum = k1 + k2;
      const double diff = k1 - k2;
      const double v = std::exp(-0.5 * (sum * sum * sp2 + diff * diff * sm2));
      f[i * n + j] = v;
      norm += v * v;
    }
  }
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& v : f) v *= scale;
  return f;
}

TwoPhotonAmplitude build_two_photon_amplitude(const Grid& photon, const SigmaPair& s,
                                              std::size_t max_elements) {
  if (photon.rank() != 1 && photon.rank() != 2) {
    throw ShapeError("two-photon amplitude needs a 1D or 2D photon grid");
  }
  check_resolution(photon, s);
  const std::size_t m = photon.size();
  if (m > max_elements / m) {
    std::ostringstream os;
    os << "two-photon amplitude needs " << m << "^2 complex values, limit is " << max_elements;
    throw ResourceError(os.str());
  }

  TwoPhotonAmplitude amp{photon, ComplexField(Grid::pair(photon)), s};
  if (photon.rank() == 1) {
    const auto f = gaussian_pair_factor(photon.axis(0), s);
    for (std::size_t i = 0; i < f.size(); ++i) amp.psi.values[i] = f[i];
    return amp;
  }
  const std::size_t nx = photon.axis(0).n;
  const std::size_t ny = photon.axis(1).n;
  const auto fx = gaussian_pair_factor(photon.axis(0), s);
  const auto fy = gaussian_pair_factor(photon.axis(1), s);
  // layout (k1x, k1y, k2x, k2y)
  std::size_t flat = 0;
  for (std::size_t ax = 0; ax < nx; ++ax) {
    for (std::size_t ay = 0; ay < ny; ++ay) {
      for (std::size_t bx = 0; bx < nx; ++bx) {
        const double vx = fx[ax * nx + bx];
        for (std::size_t by = 0; by < ny; ++by) {
          amp.psi.values[flat++] = vx * fy[ay * ny + by];
        }
      }
    }
  }
  return amp;
}

RealField joint_probability(const TwoPhotonAmplitude& amp) {
  RealField rho(amp.psi.grid);
  for (std::size_t i = 0; i < rho.size(); ++i) rho.values[i] = std::norm(amp.psi.values[i]);
  return rho;
}

RealField sum_projection(const RealField& jpd) {
  const Grid photon = photon_of(jpd.grid);
  const std::size_t m = photon.size();
  if (photon.rank() == 1) {
    const Axis& a = photon.axis(0);
    RealField out(Grid::line(2 * a.n, a.spacing));
    for (std::size_t i = 0; i < a.n; ++i) {
      for (std::size_t j = 0; j < a.n; ++j) out.values[i + j] += jpd.values[i * m + j];
    }
    return out;
  }
  const Axis& ax = photon.axis(0);
  const Axis& ay = photon.axis(1);
  RealField out(Grid::plane(2 * ax.n, ax.spacing, 2 * ay.n, ay.spacing));
  const std::size_t oy = 2 * ay.n;
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t px = p / ay.n;
    const std::size_t py = p % ay.n;
    for (std::size_t q = 0; q < m; ++q) {
      out.values[(px + q / ay.n) * oy + py + q % ay.n] += jpd.values[p * m + q];
    }
  }
  return out;
}

RealField marginal(const RealField& jpd) {
  const Grid photon = photon_of(jpd.grid);
  const std::size_t m = photon.size();
  RealField out(photon);
  for (std::size_t p = 0; p < m; ++p) {
    double acc = 0.0;
    for (std::size_t q = 0; q < m; ++q) acc += jpd.values[p * m + q];
    out.values[p] = acc;
  }
  return out;
}

ProjectionWidths projection_widths(const RealField& jpd, const FitOptions& opt) {
  if (jpd.grid.rank() != 2) throw ShapeError("projection_widths expects a 1D-pair distribution");
  ProjectionWidths w;
  w.sum = fit_gaussian(sum_projection(jpd), opt);
  w.marginal = fit_gaussian(marginal(jpd), opt);
  const double ratio = w.marginal.sigma / w.sum.sigma;
  w.schmidt_estimate = ratio * ratio;
  return w;
}

}  // namespace biphoton
