#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>

#include "biphoton/grid.hpp"
#include "json.hpp"

namespace biphoton {

enum class Parity { Even, Odd };

/// Single index j of the 15-term table below.
///
///   j  Z_j                      parity
///   1  1                        even
///   2  ρ cos θ                  odd
///   3  ρ sin θ                  odd
///   4  √6 ρ² sin 2θ             even
///   5  √3 (2ρ² − 1)             even
///   6  √6 ρ² cos 2θ             even
///   7  √8 ρ³ sin 3θ             odd
///   8  √8 (3ρ³ − 2ρ) sin θ      odd
///   9  √8 (3ρ³ − 2ρ) cos θ      odd
///  10  √8 ρ³ cos 3θ             odd
///  11  √10 ρ⁴ sin 4θ            even
///  12  √10 (4ρ⁴ − 3ρ²) sin 2θ   even
///  13  √5 (6ρ⁴ − 6ρ² + 1)       even
///  14  √10 (4ρ⁴ − 3ρ²) cos 2θ   even
///  15  √10 ρ⁴ cos 4θ            even
///
/// Row 9 is sometimes printed with sin θ, which would duplicate row 8; the
/// cosine form is the one that completes the basis.
struct ZernikeIndex {
  int j;
  explicit ZernikeIndex(int j);
};

inline constexpr int kZernikeCount = 15;
/// Lowest index used for random disorder (piston and tilts excluded).
inline constexpr int kFirstDisorderIndex = 4;

/// Polar form. Throws DomainError unless 0 ≤ rho ≤ 1.
double zernike_eval(ZernikeIndex j, double rho, double theta);
/// Same polynomial in Cartesian unit-disk coordinates (x = ρ cos θ,
/// y = ρ sin θ). Odd terms are exactly antisymmetric in floating point.
double zernike_cartesian(ZernikeIndex j, double x, double y);
Parity parity_of(ZernikeIndex j);

/// Phase φ(k) in radians over a 1D or 2D momentum grid. With a pupil, values
/// outside radius pupil_radius (grid units) are zero.
struct PhaseMask {
  RealField phase;
  std::optional<double> pupil_radius;

  const Grid& grid() const { return phase.grid; }
};

PhaseMask zero_mask(const Grid& grid);

struct DmConfig {
  std::map<int, double> coefficients;  // j -> radians
  double pupil_radius = 1.0;
  std::uint64_t seed = 0;
};

/// JSON schema: {"pupil_radius": number > 0, "seed": integer ≥ 0,
/// "coefficients": {"<j>": number, ...}}. Unknown keys are SchemaErrors.
DmConfig dm_config_from_json(const nlohmann::json& j);
nlohmann::json dm_config_to_json(const DmConfig& cfg);
DmConfig read_dm_config(const std::filesystem::path& path);
void write_dm_config(const std::filesystem::path& path, const DmConfig& cfg);

/// φ(k) = Σ c_j Z_j(k/R) inside the pupil, 0 outside. A 1D grid is the y = 0
/// cut through the pupil. Throws GeometryError if the pupil does not fit
/// within the mirrored part of the grid.
PhaseMask mask_from_coeffs(const DmConfig& cfg, const Grid& grid);

struct ParityParts {
  PhaseMask even;
  PhaseMask odd;
};

/// even = (φ + φ(−k))/2, odd = (φ − φ(−k))/2 using point_reflect.
ParityParts parity_decompose(const PhaseMask& mask);

enum class ParityFilter { All, EvenOnly, OddOnly };

/// Coefficients i.i.d. uniform in [−amplitude, amplitude] for every allowed
/// j ≥ 4, drawn in increasing j from mt19937_64(seed).
DmConfig random_mask(ParityFilter filter, double amplitude, std::uint64_t seed,
                     double pupil_radius = 1.0);

/// Disorder with a continuous spectrum: white Gaussian noise on the grid
/// convolved with a Gaussian of std `correlation_length` (grid units), then
/// restricted to the pupil (if any), shifted to zero mean and scaled to
/// `rms` radians over the pupil. The parity filter is applied after
/// smoothing and before scaling.
PhaseMask smoothed_random_mask(const Grid& grid, double correlation_length, double rms,
                               std::uint64_t seed, std::optional<double> pupil_radius,
                               ParityFilter filter = ParityFilter::All);

/// Independent uniform phase in [0, 2π) at every sample inside the pupil.
PhaseMask white_random_mask(const Grid& grid, double pupil_radius, std::uint64_t seed);

/// Fraction of Σ|e^{-a k²σ²}|² that falls outside the pupil
/// (`kernel_exponent` = a σ²). Zero without a pupil.
double kernel_leakage(const PhaseMask& mask, double kernel_exponent);

/// |FT(illumination · pupil · e^{iφ})|², peak-normalized, for a Gaussian
/// illumination e^{-k²/w²} of waist `beam_waist` (infinite = flat).
RealField far_field_intensity(const PhaseMask& mask, double beam_waist);

/// Far fields of amplitude·Z_j for j = 4..15, in order.
std::vector<RealField> zernike_gallery(const Grid& grid, double pupil_radius, double amplitude,
                                       double beam_waist);

/// Grid-format file of kind PhaseMask; meta[0] is the pupil radius (NaN if none).
void write_phase_mask(const std::filesystem::path& path, const PhaseMask& mask);
PhaseMask read_phase_mask(const std::filesystem::path& path);

}  // namespace biphoton
