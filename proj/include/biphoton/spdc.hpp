#pragma once

#include <cstddef>

#include "biphoton/gaussian_fit.hpp"
#include "biphoton/grid.hpp"

namespace biphoton {

/// Crystal and pump parameters, SI units. n_p has no default: it depends on
/// the crystal and must be supplied.
struct SpdcParams {
  double w0 = 0.0;        // pump waist [m]
  double L = 0.0;         // crystal length [m]
  double lambda_p = 0.0;  // pump wavelength [m]
  double n_p = 0.0;       // refractive index at the pump wavelength
};

/// Widths of the sum and difference Gaussians. Units are whatever the
/// momentum grid is conjugate to (metres, or dimensionless grid units).
struct SigmaPair {
  double sigma_plus = 0.0;
  double sigma_minus = 0.0;

  double ratio() const { return sigma_plus / sigma_minus; }
};

/// σ+ = w0/√2, σ− = √(L λp / (12π n_p)).
SigmaPair derive_sigmas(const SpdcParams& params);

/// K = ¼(σ+/σ− + σ−/σ+)². This is the Schmidt number of the separable state
/// in two transverse dimensions; each axis alone contributes √K.
double schmidt_number(const SigmaPair& s);

/// Inverse of schmidt_number on the branch σ+ ≥ σ−, holding σ− fixed.
SigmaPair sigmas_for_schmidt(double K, double sigma_minus);

/// Sampling limits enforced by build_two_photon_amplitude, per axis:
/// the marginal must fit ((n/2)·dk·σ− ≥ kMinHalfExtentSigmaMinus) and the
/// sum ridge must be resolved (dk·σ+ ≤ kMaxSpacingSigmaPlus).
inline constexpr double kMinHalfExtentSigmaMinus = 2.5;
inline constexpr double kMaxSpacingSigmaPlus = 1.0;

/// Throws ResolutionError naming the violated bound and axis.
void check_resolution(const Grid& photon, const SigmaPair& s);

/// Largest two-photon array (complex elements) a single build may allocate.
inline constexpr std::size_t kDefaultMaxPairElements = std::size_t{1} << 26;

/// Biphoton amplitude ψ(k1, k2) over Grid::pair(photon): rank 2 for one
/// transverse dimension, rank 4 (k1x, k1y, k2x, k2y) for two.
struct TwoPhotonAmplitude {
  Grid photon;
  ComplexField psi;
  SigmaPair sigmas;

  std::size_t dims() const { return photon.rank(); }
  std::size_t photon_size() const { return photon.size(); }
  /// ψ at flat photon indices (first, second).
  complex& operator()(std::size_t k1, std::size_t k2) { return psi.values[k1 * photon.size() + k2]; }
  const complex& operator()(std::size_t k1, std::size_t k2) const {
    return psi.values[k1 * photon.size() + k2];
  }
};

/// One-axis factor e^{-(k1+k2)²σ+²/2} e^{-(k1-k2)²σ−²/2}, unit-normalized, n×n.
std::vector<double> gaussian_pair_factor(const Axis& axis, const SigmaPair& s);

/// Normalized double-Gaussian amplitude; for 2D photon grids the separable
/// x·y product. Throws ResolutionError (see check_resolution) and
/// ResourceError above `max_elements`.
TwoPhotonAmplitude build_two_photon_amplitude(const Grid& photon, const SigmaPair& s,
                                              std::size_t max_elements = kDefaultMaxPairElements);

/// |ψ|² over the pair grid.
RealField joint_probability(const TwoPhotonAmplitude& amp);

/// Distribution of s = k1 + k2 per axis, on an axis of 2n bins with the
/// photon spacing (the last bin is always empty).
RealField sum_projection(const RealField& jpd);
/// Distribution of k1 (sum over k2).
RealField marginal(const RealField& jpd);

struct ProjectionWidths {
  GaussianFit1D sum;       // σ_j per axis
  GaussianFit1D marginal;  // σ_m per axis
  double schmidt_estimate = 0.0;  // (σ_m/σ_j)²
};

/// 1D widths and (σ_m/σ_j)² from a rank-2 joint probability.
ProjectionWidths projection_widths(const RealField& jpd, const FitOptions& opt = {});

}  // namespace biphoton
