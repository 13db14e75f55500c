#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "biphoton/correlation.hpp"
#include "biphoton/gaussian_fit.hpp"
#include "biphoton/grid.hpp"
#include "biphoton/spdc.hpp"

namespace biphoton {

/// Camera model in photo-electron units. Pixel (x, y) has integer centre
/// coordinates; the optical axis hits pixel (width/2, height/2).
struct DetectorModel {
  std::size_t width = 0;
  std::size_t height = 0;
  double pairs_per_frame_mean = 0.0;
  double dark_electron_mean = 0.0;
  double readout_std = 0.0;
  double gain = 1.0;
  /// Frames sharing one threshold T = μ + σ of their raw electron counts.
  std::size_t threshold_batch = 100;

  /// Throws DomainError; width and height must be even and positive.
  void validate() const;
  std::size_t pixels() const { return width * height; }
};

/// Binary photon map, one bit per pixel, pixel (x, y) at bit x·height + y.
class PhotonFrame {
 public:
  PhotonFrame() = default;
  PhotonFrame(std::size_t width, std::size_t height);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  bool get(std::size_t x, std::size_t y) const {
    const std::size_t b = x * height_ + y;
    return (bits_[b >> 6] >> (b & 63)) & 1u;
  }
  void set(std::size_t x, std::size_t y, bool on = true);
  std::size_t count() const;
  std::span<const std::uint64_t> words() const { return bits_; }
  std::span<std::uint64_t> words() { return bits_; }

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Ordered frames of one detector, stored bit-packed back to back.
class FrameStack {
 public:
  FrameStack() = default;
  explicit FrameStack(DetectorModel model);

  const DetectorModel& model() const { return model_; }
  std::size_t size() const { return count_; }
  std::size_t width() const { return model_.width; }
  std::size_t height() const { return model_.height; }

  void push_back(const PhotonFrame& frame);
  PhotonFrame frame(std::size_t i) const;
  bool get(std::size_t i, std::size_t x, std::size_t y) const;

 private:
  DetectorModel model_;
  std::size_t words_per_frame_ = 0;
  std::size_t count_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Grid-format file, kind FrameStack, uint8 payload (one byte per pixel).
/// Meta: pairs_per_frame_mean, dark_electron_mean, readout_std, gain,
/// threshold_batch.
void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack);
FrameStack read_frame_stack(const std::filesystem::path& path);

/// Odd-sized lattice of integer pixel offsets [−half_x, half_x] × [−half_y, half_y],
/// row-major with x slow.
struct CoincidenceMap {
  std::size_t half_x = 0;
  std::size_t half_y = 0;
  std::vector<double> values;
  std::size_t frames = 0;

  CoincidenceMap() = default;
  CoincidenceMap(std::size_t hx, std::size_t hy);
  std::size_t nx() const { return 2 * half_x + 1; }
  std::size_t ny() const { return 2 * half_y + 1; }
  double& at(long dx, long dy) { return values[index(dx, dy)]; }
  double at(long dx, long dy) const { return values[index(dx, dy)]; }
  Lattice2D lattice() const;

 private:
  std::size_t index(long dx, long dy) const {
    return static_cast<std::size_t>(dx + static_cast<long>(half_x)) * ny() +
           static_cast<std::size_t>(dy + static_cast<long>(half_y));
  }
};

/// Central (2hx+1)×(2hy+1) block of a centred map, one sample per pixel.
CoincidenceMap crop_offsets(const RealField& centred_map, std::size_t half_x, std::size_t half_y);
/// Kind CoincidenceMap; meta holds the frame count.
void write_coincidence_map(const std::filesystem::path& path, const CoincidenceMap& map);

/// Pixel indices of both photons; positions off the sensor are dropped later.
struct PixelPair {
  long x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

class PairSampler {
 public:
  virtual ~PairSampler() = default;
  virtual PixelPair sample(std::mt19937_64& rng) const = 0;
};

/// Gaussian biphoton in pixel units: per axis the sum x1 + x2 (relative to
/// twice the centre pixel) has standard deviation σ_j and each photon's
/// marginal has σ_m. Requires 2σ_m > σ_j ≥ 0.
class DoubleGaussianSampler : public PairSampler {
 public:
  DoubleGaussianSampler(double sigma_m_px, double sigma_j_px, long centre_x, long centre_y);
  /// σ_j = 1/(√2σ+), σ_m = √(σ+² + σ−²)/(2√2 σ+ σ−), divided by the pixel pitch.
  static DoubleGaussianSampler from_sigmas(const SigmaPair& s, double pixel_pitch,
                                           const DetectorModel& model);
  PixelPair sample(std::mt19937_64& rng) const override;
  double sigma_m() const { return sigma_m_; }
  double sigma_j() const { return sigma_j_; }

 private:
  double sigma_m_, sigma_j_, sigma_d_;
  long cx_, cy_;
};

/// Pair separation drawn from a non-negative offset map, centroid either
/// Gaussian about the centre pixel or uniform over the sensor (nullopt).
class DifferenceMapSampler : public PairSampler {
 public:
  DifferenceMapSampler(const CoincidenceMap& offsets, const DetectorModel& model,
                       std::optional<double> centroid_sigma_px);
  PixelPair sample(std::mt19937_64& rng) const override;

 private:
  std::vector<long> dx_, dy_;
  std::vector<double> cumulative_;
  std::optional<double> centroid_sigma_;
  double width_, height_;
};

/// Counter-based stream seed for frame `frame` of run `seed`.
std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame);

/// Raw electron image of one frame: Poisson(pairs) pairs from the sampler,
/// gain per photon, Gaussian(μ_d, σ_r) per pixel.
std::vector<double> synthesize_raw_frame(const PairSampler& source, const DetectorModel& model,
                                         std::uint64_t seed, std::uint64_t frame);

/// 1 where raw > μ + σ.
PhotonFrame threshold_frame(std::span<const double> raw, std::size_t width, std::size_t height,
                            double mu, double sigma);

/// Frames thresholded in batches of model.threshold_batch with the batch μ, σ.
/// Deterministic in (seed, frame index).
FrameStack synthesize_frames(const PairSampler& source, const DetectorModel& model,
                             std::size_t n_frames, std::uint64_t seed);

/// Calls `sink(frame)` for each thresholded frame instead of storing them.
template <class Sink>
void stream_frames(const PairSampler& source, const DetectorModel& model, std::size_t n_frames,
                   std::uint64_t seed, Sink&& sink);

struct Window {
  std::size_t half_x = 0;
  std::size_t half_y = 0;
};

enum class CoincidenceKind {
  Difference,  // offset (x2 − x1, y2 − y1)
  Sum,         // (x1 + x2, y1 + y2) relative to twice the centre pixel
};

/// Streaming genuine-minus-accidental accumulator:
///   map = (1/(N−1)) Σ_{i=0}^{N−2} [G(P_i, P_i) − G(P_i, P_{i+1})]
/// with G the cross-correlation (Difference) or convolution (Sum) of two
/// frames. As written, G(P_i, P_i) pairs each photon with itself: at offset
/// (0, 0) for Difference, at sum 2p for Sum. `exclude_self_pairs` removes
/// those terms; a static pattern then no longer cancels at those bins.
class CoincidenceAccumulator {
 public:
  CoincidenceAccumulator(std::size_t width, std::size_t height, Window window,
                         CoincidenceKind kind, bool exclude_self_pairs = false);
  ~CoincidenceAccumulator();
  CoincidenceAccumulator(const CoincidenceAccumulator&) = delete;
  CoincidenceAccumulator& operator=(const CoincidenceAccumulator&) = delete;

  void add(const PhotonFrame& frame);
  std::size_t frames() const { return frames_; }

  /// Throws InsufficientDataError below two frames.
  CoincidenceMap result() const;
  /// The two terms separately, each divided by N − 1.
  CoincidenceMap genuine() const;
  CoincidenceMap accidental() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t frames_ = 0;
};

/// Accumulator output as defined above; bin (0, 0) holds the singles count, not coincidences.
CoincidenceMap coincidence_correlation(const FrameStack& stack, Window window);
/// Sum-coordinate map with self pairs excluded.
CoincidenceMap sum_coincidence_correlation(const FrameStack& stack, Window window);

/// Per-pixel mean photon count, on a unit-spacing centred plane.
RealImage mean_frame(const FrameStack& stack);

struct SchmidtEstimate {
  double K = 0.0;
  double K_stderr = 0.0;
  double sigma_m = 0.0;
  double sigma_m_stderr = 0.0;
  double sigma_j = 0.0;
  double sigma_j_stderr = 0.0;
};

/// K = (σ_m/σ_j)² with first-order error propagation.
SchmidtEstimate schmidt_from_widths(double sigma_m, double sigma_m_stderr, double sigma_j,
                                    double sigma_j_stderr);

struct SchmidtOptions {
  FitOptions fit;
  /// Subtract the pixel quantization variance (1/12 per photon per axis)
  /// from the fitted widths before forming K.
  bool pixel_correction = true;
};

/// 2D Gaussian fits to the single-photon image and the sum-coordinate map.
SchmidtEstimate estimate_schmidt(const RealImage& marginal_image, const CoincidenceMap& sum_map,
                                 const SchmidtOptions& opt = {});

struct PixelRegion {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0, x1) × [y0, y1)
};

/// κ = σ_I/⟨I⟩ over the image or a region. Throws DomainError when ⟨I⟩ ≤ 0.
double speckle_contrast(const RealImage& image, std::optional<PixelRegion> region = std::nullopt);
double speckle_contrast(std::span<const double> values);

template <class Sink>
void stream_frames(const PairSampler& source, const DetectorModel& model, std::size_t n_frames,
                   std::uint64_t seed, Sink&& sink) {
  model.validate();
  const std::size_t batch = model.threshold_batch;
  std::vector<std::vector<double>> raw;
  for (std::size_t start = 0; start < n_frames; start += batch) {
    const std::size_t stop = std::min(n_frames, start + batch);
    raw.clear();
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t f = start; f < stop; ++f) {
      raw.push_back(synthesize_raw_frame(source, model, seed, f));
      for (double v : raw.back()) {
        s1 += v;
        s2 += v * v;
      }
    }
    const double count = static_cast<double>(raw.size() * model.pixels());
    const double mu = s1 / count;
    const double sigma = std::sqrt(std::max(0.0, s2 / count - mu * mu));
    for (const auto& r : raw) sink(threshold_frame(r, model.width, model.height, mu, sigma));
  }
}

}  // namespace biphoton
