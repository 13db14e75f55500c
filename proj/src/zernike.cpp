#include "biphoton/zernike.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "biphoton/fourier.hpp"
#include "biphoton/grid_io.hpp"

namespace biphoton {
namespace {

const double kS3 = std::sqrt(3.0);
const double kS5 = std::sqrt(5.0);
const double kS6 = std::sqrt(6.0);
const double kS8 = std::sqrt(8.0);
const double kS10 = std::sqrt(10.0);

void require_pupil_fits(const Grid& grid, double R) {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("pupil_radius must be finite and > 0");
  if (grid.rank() != 1 && grid.rank() != 2) throw ShapeError("phase masks are 1D or 2D");
  for (const auto& a : grid.axes()) {
    if (R > a.half_extent() * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "pupil radius " << R << " exceeds the grid half-extent " << a.half_extent();
      throw GeometryError(os.str());
    }
  }
}

// Calls fn(flat, kx, ky) for every sample; ky = 0 on 1D grids.
template <class Fn>
void for_each_k(const Grid& grid, Fn&& fn) {
  if (grid.rank() == 1) {
    const Axis& a = grid.axis(0);
    for (std::size_t i = 0; i < a.n; ++i) fn(i, a.coordinate(i), 0.0);
    return;
  }
  const Axis& ax = grid.axis(0);
  const Axis& ay = grid.axis(1);
  for (std::size_t i = 0; i < ax.n; ++i) {
    for (std::size_t j = 0; j < ay.n; ++j) fn(i * ay.n + j, ax.coordinate(i), ay.coordinate(j));
  }
}

bool inside(double kx, double ky, double R) { return kx * kx + ky * ky <= R * R; }

}  // namespace

ZernikeIndex::ZernikeIndex(int index) : j(index) {
  if (index < 1 || index > kZernikeCount) {
    throw DomainError("Zernike index " + std::to_string(index) + " outside [1, 15]");
  }
}

double zernike_eval(ZernikeIndex z, double rho, double t) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("zernike_eval: rho must lie in [0, 1]");
  const double r2 = rho * rho;
  const double r3 = r2 * rho;
  const double r4 = r2 * r2;
  switch (z.j) {
    case 1: return 1.0;
    case 2: return rho * std::cos(t);
    case 3: return rho * std::sin(t);
    case 4: return kS6 * r2 * std::sin(2 * t);
    case 5: return kS3 * (2 * r2 - 1);
    case 6: return kS6 * r2 * std::cos(2 * t);
    case 7: return kS8 * r3 * std::sin(3 * t);
    case 8: return kS8 * (3 * r3 - 2 * rho) * std::sin(t);
    case 9: return kS8 * (3 * r3 - 2 * rho) * std::cos(t);
    case 10: return kS8 * r3 * std::cos(3 * t);
    case 11: return kS10 * r4 * std::sin(4 * t);
    case 12: return kS10 * (4 * r4 - 3 * r2) * std::sin(2 * t);
    case 13: return kS5 * (6 * r4 - 6 * r2 + 1);
    case 14: return kS10 * (4 * r4 - 3 * r2) * std::cos(2 * t);
    case 15: return kS10 * r4 * std::cos(4 * t);
  }
  throw DomainError("unreachable Zernike index");
}

double zernike_cartesian(ZernikeIndex z, double x, double y) {
  const double xx = x * x;
  const double yy = y * y;
  const double r2 = xx + yy;
  switch (z.j) {
    case 1: return 1.0;
    case 2: return x;
    case 3: return y;
    case 4: return kS6 * 2 * x * y;
    case 5: return kS3 * (2 * r2 - 1);
    case 6: return kS6 * (xx - yy);
    case 7: return kS8 * (3 * xx * y - yy * y);
    case 8: return kS8 * (3 * r2 - 2) * y;
    case 9: return kS8 * (3 * r2 - 2) * x;
    case 10: return kS8 * (xx * x - 3 * x * yy);
    case 11: return kS10 * 4 * (xx * x * y - x * yy * y);
    case 12: return kS10 * (4 * r2 - 3) * 2 * x * y;
    case 13: return kS5 * (6 * r2 * r2 - 6 * r2 + 1);
    case 14: return kS10 * (4 * r2 - 3) * (xx - yy);
    case 15: return kS10 * (xx * xx - 6 * xx * yy + yy * yy);
  }
  throw DomainError("unreachable Zernike index");
}

Parity parity_of(ZernikeIndex z) {
  switch (z.j) {
    case 2: case 3: case 7: case 8: case 9: case 10: return Parity::Odd;
    default: return Parity::Even;
  }
}

PhaseMask zero_mask(const Grid& grid) { return {RealField(grid), std::nullopt}; }

DmConfig dm_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError("mask config must be an object");
  DmConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "pupil_radius") {
      if (!value.is_number()) throw SchemaError("pupil_radius: expected a number");
      cfg.pupil_radius = value.get<double>();
      if (!(cfg.pupil_radius > 0.0) || !std::isfinite(cfg.pupil_radius)) {
        throw DomainError("pupil_radius: must be finite and > 0");
      }
    } else if (key == "seed") {
      if (!value.is_number_unsigned()) throw SchemaError("seed: expected a non-negative integer");
      cfg.seed = value.get<std::uint64_t>();
    } else if (key == "coefficients") {
      if (!value.is_object()) throw SchemaError("coefficients: expected an object of j -> value");
      for (const auto& [jk, c] : value.items()) {
        int index = 0;
        std::size_t used = 0;
        try {
          index = std::stoi(jk, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != jk.size()) throw SchemaError("coefficients." + jk + ": key is not an integer");
        if (index < 1 || index > kZernikeCount) {
          throw DomainError("coefficients." + jk + ": index outside [1, 15]");
        }
        if (!c.is_number() || !std::isfinite(c.get<double>())) {
          throw SchemaError("coefficients." + jk + ": expected a finite number");
        }
        cfg.coefficients[index] = c.get<double>();
      }
    } else {
      throw SchemaError("unknown key '" + key + "' in mask config");
    }
  }
  return cfg;
}

nlohmann::json dm_config_to_json(const DmConfig& cfg) {
  nlohmann::json coeffs = nlohmann::json::object();
  for (const auto& [index, c] : cfg.coefficients) coeffs[std::to_string(index)] = c;
  return {{"pupil_radius", cfg.pupil_radius}, {"seed", cfg.seed}, {"coefficients", coeffs}};
}

DmConfig read_dm_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return dm_config_from_json(j);
}

void write_dm_config(const std::filesystem::path& path, const DmConfig& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  os << dm_config_to_json(cfg).dump(2) << '\n';
}

PhaseMask mask_from_coeffs(const DmConfig& cfg, const Grid& grid) {
  const double R = cfg.pupil_radius;
  require_pupil_fits(grid, R);
  for (const auto& [index, c] : cfg.coefficients) {
    (void)ZernikeIndex{index};
    if (!std::isfinite(c)) throw DomainError("non-finite Zernike coefficient");
  }
  PhaseMask mask{RealField(grid), R};
  for_each_k(grid, [&](std::size_t flat, double kx, double ky) {
    if (!inside(kx, ky, R)) return;
    const double x = kx / R;
    const double y = ky / R;
    double phi = 0.0;
    for (const auto& [index, c] : cfg.coefficients) {
      if (c != 0.0) phi += c * zernike_cartesian(ZernikeIndex{index}, x, y);
    }
    mask.phase.values[flat] = phi;
  });
  return mask;
}

ParityParts parity_decompose(const PhaseMask& mask) {
  const RealField reflected = point_reflect(mask.phase);
  ParityParts parts{{RealField(mask.grid()), mask.pupil_radius},
                    {RealField(mask.grid()), mask.pupil_radius}};
  for (std::size_t i = 0; i < mask.phase.size(); ++i) {
    const double a = mask.phase.values[i];
    const double b = reflected.values[i];
    parts.even.phase.values[i] = 0.5 * (a + b);
    parts.odd.phase.values[i] = 0.5 * (a - b);
  }
  return parts;
}

DmConfig random_mask(ParityFilter filter, double amplitude, std::uint64_t seed,
                     double pupil_radius) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
    throw DomainError("random_mask: amplitude must be finite and >= 0");
  }
  DmConfig cfg;
  cfg.pupil_radius = pupil_radius;
  cfg.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (int index = kFirstDisorderIndex; index <= kZernikeCount; ++index) {
    const Parity p = parity_of(ZernikeIndex{index});
    if (filter == ParityFilter::EvenOnly && p != Parity::Even) continue;
    if (filter == ParityFilter::OddOnly && p != Parity::Odd) continue;
    cfg.coefficients[index] = amplitude > 0.0 ? u(rng) : 0.0;
  }
  return cfg;
}

PhaseMask smoothed_random_mask(const Grid& grid, double correlation_length, double rms,
                               std::uint64_t seed, std::optional<double> pupil_radius,
                               ParityFilter filter) {
  if (!(correlation_length > 0.0) || !std::isfinite(correlation_length)) {
    throw DomainError("correlation_length must be finite and > 0");
  }
  if (!(rms >= 0.0) || !std::isfinite(rms)) throw DomainError("rms must be finite and >= 0");
  if (pupil_radius) {
    require_pupil_fits(grid, *pupil_radius);
  } else if (grid.rank() != 1 && grid.rank() != 2) {
    throw ShapeError("phase masks are 1D or 2D");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  ComplexField noise(grid);
  for (auto& v : noise.values) v = n01(rng);
  // Convolution with exp(-k²/(2ℓ²)) is a product with exp(-x²ℓ²/2).
  auto spectrum = fourier_transform(noise, +1);
  const double l2 = correlation_length * correlation_length;
  for_each_index(spectrum.grid, [&](std::size_t flat, std::span<const std::size_t> idx) {
    double x2 = 0.0;
    for (std::size_t d = 0; d < idx.size(); ++d) {
      const double x = spectrum.grid.axis(d).coordinate(idx[d]);
      x2 += x * x;
    }
    spectrum.values[flat] *= std::exp(-0.5 * x2 * l2);
  });
  const auto smooth = fourier_transform(spectrum, -1);

  PhaseMask mask{RealField(grid), pupil_radius};
  std::vector<char> in_pupil(grid.size(), 1);
  for_each_k(grid, [&](std::size_t flat, double kx, double ky) {
    if (pupil_radius && !inside(kx, ky, *pupil_radius)) in_pupil[flat] = 0;
    mask.phase.values[flat] = smooth.values[flat].real();
  });

  if (filter != ParityFilter::OddOnly) {
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (in_pupil[i]) {
        mean += mask.phase.values[i];
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    for (auto& v : mask.phase.values) v -= mean;
  }
  if (filter != ParityFilter::All) {
    auto parts = parity_decompose(mask);
    mask = filter == ParityFilter::EvenOnly ? std::move(parts.even) : std::move(parts.odd);
  }
  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!in_pupil[i]) {
      mask.phase.values[i] = 0.0;
    } else {
      sq += mask.phase.values[i] * mask.phase.values[i];
      ++count;
    }
  }
  const double current = std::sqrt(sq / static_cast<double>(count));
  if (!(current > 0.0)) throw DomainError("smoothed_random_mask: degenerate (zero) phase");
  const double scale = rms / current;
  for (auto& v : mask.phase.values) v *= scale;
  return mask;
}

PhaseMask white_random_mask(const Grid& grid, double pupil_radius, std::uint64_t seed) {
  require_pupil_fits(grid, pupil_radius);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  PhaseMask mask{RealField(grid), pupil_radius};
  for_each_k(grid, [&](std::size_t flat, double kx, double ky) {
    const double v = phase(rng);
    if (inside(kx, ky, pupil_radius)) mask.phase.values[flat] = v;
  });
  return mask;
}

double kernel_leakage(const PhaseMask& mask, double kernel_exponent) {
  if (!mask.pupil_radius) return 0.0;
  const double R = *mask.pupil_radius;
  double total = 0.0;
  double outside = 0.0;
  for_each_k(mask.grid(), [&](std::size_t, double kx, double ky) {
    const double w = std::exp(-2.0 * kernel_exponent * (kx * kx + ky * ky));
    total += w;
    if (!inside(kx, ky, R)) outside += w;
  });
  return outside / total;
}

RealField far_field_intensity(const PhaseMask& mask, double beam_waist) {
  if (!(beam_waist > 0.0)) throw DomainError("beam_waist must be > 0");
  ComplexField field(mask.grid());
  const double inv_w2 = std::isfinite(beam_waist) ? 1.0 / (beam_waist * beam_waist) : 0.0;
  for_each_k(mask.grid(), [&](std::size_t flat, double kx, double ky) {
    if (mask.pupil_radius && !inside(kx, ky, *mask.pupil_radius)) return;
    const double amp = std::exp(-(kx * kx + ky * ky) * inv_w2);
    field.values[flat] = std::polar(amp, mask.phase.values[flat]);
  });
  const auto far = fourier_transform(field, +1);
  RealField intensity(far.grid);
  for (std::size_t i = 0; i < far.size(); ++i) intensity.values[i] = std::norm(far.values[i]);
  normalize_to_peak(intensity);
  return intensity;
}

std::vector<RealField> zernike_gallery(const Grid& grid, double pupil_radius, double amplitude,
                                       double beam_waist) {
  std::vector<RealField> images;
  for (int index = kFirstDisorderIndex; index <= kZernikeCount; ++index) {
    DmConfig cfg;
    cfg.pupil_radius = pupil_radius;
    cfg.coefficients[index] = amplitude;
    images.push_back(far_field_intensity(mask_from_coeffs(cfg, grid), beam_waist));
  }
  return images;
}

void write_phase_mask(const std::filesystem::path& path, const PhaseMask& mask) {
  const double r = mask.pupil_radius ? *mask.pupil_radius : std::nan("");
  write_field(path, mask.phase, PayloadKind::PhaseMask, {r});
}

PhaseMask read_phase_mask(const std::filesystem::path& path) {
  std::vector<double> meta;
  PhaseMask mask{read_real_field(path, &meta), std::nullopt};
  if (mask.phase.grid.rank() != 1 && mask.phase.grid.rank() != 2) {
    throw ShapeError(path.string() + ": phase masks are 1D or 2D");
  }
  if (!meta.empty() && std::isfinite(meta[0])) {
    require_pupil_fits(mask.phase.grid, meta[0]);
    mask.pupil_radius = meta[0];
  }
  for (double v : mask.phase.values) {
    if (!std::isfinite(v)) throw DomainError(path.string() + ": non-finite phase value");
  }
  return mask;
}

}  // namespace biphoton
