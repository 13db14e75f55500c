#include "biphoton/correlation.hpp"

#include <cmath>
#include <sstream>

#include "biphoton/fourier.hpp"
#include "biphoton/stats.hpp"

namespace biphoton {
namespace {

void require_mask_on(const Grid& photon, const PhaseMask& mask) {
  if (!mask.grid().matches(photon)) {
    throw ShapeError("phase mask grid does not match the photon momentum grid");
  }
}

double k_squared(const Grid& grid, std::span<const std::size_t> idx) {
  double kk = 0.0;
  for (std::size_t d = 0; d < idx.size(); ++d) {
    const double k = grid.axis(d).coordinate(idx[d]);
    kk += k * k;
  }
  return kk;
}

void check_kernel_resolution(const Grid& grid, double sigma_minus) {
  if (!(sigma_minus > 0.0) || !std::isfinite(sigma_minus)) {
    throw DomainError("sigma_minus must be finite and > 0");
  }
  for (std::size_t d = 0; d < grid.rank(); ++d) {
    const Axis& a = grid.axis(d);
    if (0.5 * a.extent() * sigma_minus < kMinHalfExtentSigmaMinus) {
      std::ostringstream os;
      os << "axis " << d << ": (n/2)*dk*sigma_minus = " << 0.5 * a.extent() * sigma_minus
         << " < " << kMinHalfExtentSigmaMinus << " (kernel truncated by the grid)";
      throw ResolutionError(os.str());
    }
    if (a.spacing * sigma_minus > 0.25) {
      std::ostringstream os;
      os << "axis " << d << ": dk*sigma_minus = " << a.spacing * sigma_minus
         << " > 0.25 (kernel under-sampled)";
      throw ResolutionError(os.str());
    }
  }
}

RealField intensity_of(const ComplexField& f) {
  RealField out(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = std::norm(f.values[i]);
  return out;
}

// Per-axis data for the sliced route: slice m holds f(i1, i2(m, i1)) with
// i2 = (m + n − i1) mod n, m ∈ [−n/2, n/2).
struct AxisSlices {
  std::size_t n = 0;
  std::vector<double> values;  // n slices × n entries
  std::vector<double> mass;    // Σ f² per slice

  std::size_t partner(std::size_t slice, std::size_t i1) const {
    // slice index s = m + n/2
    const long m = static_cast<long>(slice) - static_cast<long>(n / 2);
    const long nn = static_cast<long>(n);
    return static_cast<std::size_t>(((m + nn - static_cast<long>(i1)) % nn + nn) % nn);
  }
};

AxisSlices make_slices(const Axis& axis, const SigmaPair& s) {
  const auto f = gaussian_pair_factor(axis, s);
  AxisSlices out;
  out.n = axis.n;
  out.values.resize(axis.n * axis.n);
  out.mass.assign(axis.n, 0.0);
  for (std::size_t sl = 0; sl < axis.n; ++sl) {
    for (std::size_t i1 = 0; i1 < axis.n; ++i1) {
      const double v = f[i1 * axis.n + out.partner(sl, i1)];
      out.values[sl * axis.n + i1] = v;
      out.mass[sl] += v * v;
    }
  }
  return out;
}

}  // namespace

TwoPhotonAmplitude apply_mask_pair(const TwoPhotonAmplitude& psi, const PhaseMask& mask) {
  require_mask_on(psi.photon, mask);
  TwoPhotonAmplitude out = psi;
  const std::size_t m = psi.photon.size();
  const auto& phi = mask.phase.values;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      // Summing the phases first keeps φ(k) + φ(−k) = 0 exact for odd masks.
      out.psi.values[a * m + b] *= std::polar(1.0, phi[a] + phi[b]);
    }
  }
  return out;
}

FullCorrelation full_correlation(const TwoPhotonAmplitude& psi, std::size_t max_elements) {
  if (psi.psi.size() > max_elements) {
    std::ostringstream os;
    os << "full correlation over " << psi.psi.size() << " pair samples exceeds the limit "
       << max_elements;
    throw ResourceError(os.str());
  }
  FullCorrelation out;
  out.C = intensity_of(fourier_transform(psi.psi, +1));
  out.total = sum(out.C.values);
  normalize_to_peak(out.C);
  return out;
}

CorrelationMap difference_projection(const RealField& C) {
  if (C.grid.rank() != 2 && C.grid.rank() != 4) {
    throw ShapeError("difference_projection expects a rank-2 or rank-4 joint intensity");
  }
  const std::size_t d = C.grid.rank() / 2;
  std::vector<Axis> axes;
  for (std::size_t i = 0; i < d; ++i) {
    if (!C.grid.axis(i).matches(C.grid.axis(i + d))) {
      throw ShapeError("difference_projection: photon axes differ");
    }
    axes.push_back(C.grid.axis(i));
  }
  CorrelationMap out{RealField(Grid(axes))};
  auto bin = [](std::size_t i1, std::size_t i2, std::size_t n) { return (i1 + n - i2 + n / 2) % n; };
  if (d == 1) {
    const std::size_t n = axes[0].n;
    for (std::size_t i1 = 0; i1 < n; ++i1) {
      for (std::size_t i2 = 0; i2 < n; ++i2) out.map.values[bin(i1, i2, n)] += C.values[i1 * n + i2];
    }
  } else {
    const std::size_t nx = axes[0].n;
    const std::size_t ny = axes[1].n;
    std::size_t flat = 0;
    for (std::size_t x1 = 0; x1 < nx; ++x1) {
      for (std::size_t y1 = 0; y1 < ny; ++y1) {
        for (std::size_t x2 = 0; x2 < nx; ++x2) {
          double* row = &out.map.values[bin(x1, x2, nx) * ny];
          for (std::size_t y2 = 0; y2 < ny; ++y2) row[bin(y1, y2, ny)] += C.values[flat++];
        }
      }
    }
  }
  out.total = sum(out.map.values);
  normalize_to_peak(out.map);
  return out;
}

CorrelationMap sliced_difference_projection(const Grid& photon, const SigmaPair& s,
                                            const PhaseMask& mask, const SliceOptions& opt) {
  if (photon.rank() != 1 && photon.rank() != 2) {
    throw ShapeError("sliced_difference_projection needs a 1D or 2D photon grid");
  }
  check_resolution(photon, s);
  require_mask_on(photon, mask);
  if (photon.size() > opt.max_photon_elements) {
    throw ResourceError("sliced_difference_projection: photon grid exceeds the size limit");
  }
  const bool two_d = photon.rank() == 2;
  const AxisSlices sx = make_slices(photon.axis(0), s);
  const AxisSlices sy = two_d ? make_slices(photon.axis(1), s) : AxisSlices{1, {1.0}, {1.0}};
  const std::size_t nx = sx.n;
  const std::size_t ny = sy.n;
  const auto& phi = mask.phase.values;

  FourierPlan plan(photon, +1);
  std::vector<complex> work(photon.size());
  CorrelationMap out{RealField(photon.reciprocal())};
  std::vector<std::size_t> partner_y(ny);
  for (std::size_t mx = 0; mx < nx; ++mx) {
    for (std::size_t my = 0; my < ny; ++my) {
      if (sx.mass[mx] * sy.mass[my] < opt.prune_mass) continue;
      for (std::size_t iy = 0; iy < ny; ++iy) partner_y[iy] = two_d ? sy.partner(my, iy) : 0;
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::size_t jx = sx.partner(mx, ix);
        const double ax = sx.values[mx * nx + ix];
        for (std::size_t iy = 0; iy < ny; ++iy) {
          const double amp = ax * sy.values[my * ny + iy];
          const std::size_t k1 = ix * ny + iy;
          const std::size_t k2 = jx * ny + partner_y[iy];
          work[k1] = std::polar(amp, phi[k1] + phi[k2]);
        }
      }
      // The centred transform lands offset D = x1 − x2 at index (D + n/2) mod n.
      plan.execute(work);
      for (std::size_t i = 0; i < work.size(); ++i) out.map.values[i] += std::norm(work[i]);
    }
  }
  out.total = sum(out.map.values);
  normalize_to_peak(out.map);
  return out;
}

CorrelationMap delta_approx_correlation(const PhaseMask& mask, double sigma_minus) {
  const Grid& grid = mask.grid();
  check_kernel_resolution(grid, sigma_minus);
  const auto even = parity_decompose(mask).even;
  const double s2 = sigma_minus * sigma_minus;
  ComplexField f(grid);
  for_each_index(grid, [&](std::size_t flat, std::span<const std::size_t> idx) {
    const double kernel = std::exp(-(k_squared(grid, idx) * s2) * 2.0);
    f.values[flat] = std::polar(kernel, 2.0 * even.phase.values[flat]);
  });
  CorrelationMap out{intensity_of(fourier_transform(f, +1))};
  out.total = sum(out.map.values);
  out.kernel_leakage = kernel_leakage(mask, 2.0 * s2);
  normalize_to_peak(out.map);
  return out;
}

PumpPattern aux_pump_intensity(const PhaseMask& mask, double sigma_minus, double phase_multiplier) {
  check_kernel_resolution(mask.grid(), sigma_minus);
  if (!std::isfinite(phase_multiplier)) throw DomainError("phase_multiplier must be finite");
  const Grid kp = mask.grid().scaled(2.0);
  const double s2 = sigma_minus * sigma_minus;
  ComplexField f(kp);
  for_each_index(kp, [&](std::size_t flat, std::span<const std::size_t> idx) {
    const double kernel = std::exp(-(k_squared(kp, idx) * s2) * 0.5);
    f.values[flat] = std::polar(kernel, phase_multiplier * mask.phase.values[flat]);
  });
  PumpPattern out{intensity_of(fourier_transform(f, +1))};
  out.kernel_leakage = kernel_leakage(mask, 2.0 * s2);
  normalize_to_peak(out.intensity);
  return out;
}

double compare_patterns(const CorrelationMap& twophoton, const PumpPattern& pump) {
  const Grid& a = twophoton.map.grid;
  const Grid& b = pump.intensity.grid;
  if (a.shape() != b.shape()) throw ShapeError("compare_patterns: shapes differ");
  if (!b.scaled(2.0).matches(a, 1e-9)) {
    throw ShapeError("compare_patterns: pump grid is not the half-spacing image of the map grid");
  }
  return pearson_correlation(twophoton.map, pump.intensity);
}

RealField convolve_centered(const RealField& a, const RealField& b) {
  if (!a.grid.matches(b.grid)) throw ShapeError("convolve_centered: grids differ");
  ComplexField fa(a.grid);
  ComplexField fb(b.grid);
  for (std::size_t i = 0; i < a.size(); ++i) {
    fa.values[i] = a.values[i];
    fb.values[i] = b.values[i];
  }
  auto A = fourier_transform(fa, +1);
  const auto B = fourier_transform(fb, +1);
  for (std::size_t i = 0; i < A.size(); ++i) A.values[i] *= B.values[i];
  const auto c = fourier_transform(A, -1);
  const double scale = std::sqrt(static_cast<double>(a.size()));
  RealField out(a.grid);
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = scale * c.values[i].real();
  return out;
}

}  // namespace biphoton
