#pragma once

#include <cstddef>

#include "biphoton/grid.hpp"
#include "biphoton/spdc.hpp"
#include "biphoton/zernike.hpp"

namespace biphoton {

/// Two-photon coincidence map over detector separation d = x1 − x2 (per
/// axis), peak-normalized. Differences are taken modulo the grid period.
struct CorrelationMap {
  RealField map;
  /// Σ of the map before normalization (the Parseval total on full paths).
  double total = 0.0;
  /// Fraction of the delta-path kernel energy outside the mask pupil.
  double kernel_leakage = 0.0;
};

/// Auxiliary-pump far-field intensity, peak-normalized. Its spatial grid has
/// half the spacing of the two-photon difference grid built from the same
/// mask (the pump sees k_p = 2k at every mask sample).
struct PumpPattern {
  RealField intensity;
  double kernel_leakage = 0.0;
};

/// ψ'(k1, k2) = e^{iφ(k1)} e^{iφ(k2)} ψ(k1, k2).
TwoPhotonAmplitude apply_mask_pair(const TwoPhotonAmplitude& psi, const PhaseMask& mask);

struct FullCorrelation {
  RealField C;         // |F ψ|² over (x1[, y1], x2[, y2]), peak-normalized
  double total = 0.0;  // Σ|F ψ|² before normalization
};

/// Far-field joint intensity via one transform over every photon axis.
/// Throws ResourceError when the pair grid exceeds `max_elements`.
FullCorrelation full_correlation(const TwoPhotonAmplitude& psi,
                                 std::size_t max_elements = kDefaultMaxPairElements);

/// map(d) = Σ_x C(x, x − d) for a rank-2 or rank-4 joint intensity.
CorrelationMap difference_projection(const RealField& C);

struct SliceOptions {
  /// Sum-momentum slices whose share of |ψ|² is below this are skipped.
  double prune_mass = 1e-14;
  std::size_t max_photon_elements = std::size_t{1} << 22;
};

/// Same quantity as difference_projection(full_correlation(apply_mask_pair(
/// build_two_photon_amplitude(photon, s), mask)).C), evaluated without
/// materializing the pair grid. For every residue σ of the k1 + k2 index,
///   map(D) ∝ Σ_σ |Σ_{i1} ψ'(i1, σ − i1) e^{2πi i1·D / n}|²,
/// which needs one photon-grid transform per significant slice.
CorrelationMap sliced_difference_projection(const Grid& photon, const SigmaPair& s,
                                            const PhaseMask& mask, const SliceOptions& opt = {});

/// |FT(e^{i(φ(k) + φ(−k))} e^{−2k²σ−²})|² over d, peak-normalized. Throws
/// ResolutionError if the kernel is truncated by or under-sampled on the grid.
CorrelationMap delta_approx_correlation(const PhaseMask& mask, double sigma_minus);

/// |FT(e^{i·m·φ} e^{−k_p²σ−²/2})|² with mask sample k read at k_p = 2k.
PumpPattern aux_pump_intensity(const PhaseMask& mask, double sigma_minus,
                               double phase_multiplier = 2.0);

/// Pearson coefficient of a two-photon map and a pump pattern on the
/// factor-2 coordinate identification d = 2x (both grids centred, no search).
double compare_patterns(const CorrelationMap& twophoton, const PumpPattern& pump);

/// Cyclic convolution in centred coordinates, (a ⊛ b)(x) = Σ_y a(y) b(x − y).
RealField convolve_centered(const RealField& a, const RealField& b);

}  // namespace biphoton
