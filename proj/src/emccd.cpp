#include "biphoton/emccd.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>

#include "biphoton/grid_io.hpp"
#include "biphoton/stats.hpp"

namespace biphoton {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

bool smooth_size(std::size_t n) {
  for (std::size_t p : {2, 3, 5, 7}) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

// Even FFT length ≥ n with no prime factor above 7.
std::size_t fft_size(std::size_t n) {
  n += n % 2;
  while (!smooth_size(n)) n += 2;
  return n;
}

}  // namespace

void DetectorModel::validate() const {
  if (width == 0 || height == 0 || width % 2 || height % 2) {
    throw DomainError("detector width and height must be even and positive");
  }
  if (!(pairs_per_frame_mean >= 0.0) || !std::isfinite(pairs_per_frame_mean)) {
    throw DomainError("pairs_per_frame_mean must be finite and >= 0");
  }
  if (!std::isfinite(dark_electron_mean)) throw DomainError("dark_electron_mean must be finite");
  if (!(readout_std >= 0.0) || !std::isfinite(readout_std)) {
    throw DomainError("readout_std must be finite and >= 0");
  }
  if (!(gain > 0.0) || !std::isfinite(gain)) throw DomainError("gain must be finite and > 0");
  if (threshold_batch == 0) throw DomainError("threshold_batch must be >= 1");
}

PhotonFrame::PhotonFrame(std::size_t width, std::size_t height)
    : width_(width), height_(height), bits_(words_for(width * height), 0) {}

void PhotonFrame::set(std::size_t x, std::size_t y, bool on) {
  const std::size_t b = x * height_ + y;
  const std::uint64_t bit = std::uint64_t{1} << (b & 63);
  if (on) {
    bits_[b >> 6] |= bit;
  } else {
    bits_[b >> 6] &= ~bit;
  }
}

std::size_t PhotonFrame::count() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

FrameStack::FrameStack(DetectorModel model)
    : model_(model), words_per_frame_(words_for(model.pixels())) {
  model_.validate();
}

void FrameStack::push_back(const PhotonFrame& frame) {
  if (frame.width() != width() || frame.height() != height()) {
    throw ShapeError("frame dimensions do not match the detector");
  }
  bits_.insert(bits_.end(), frame.words().begin(), frame.words().end());
  ++count_;
}

PhotonFrame FrameStack::frame(std::size_t i) const {
  if (i >= count_) throw ShapeError("frame index out of range");
  PhotonFrame f(width(), height());
  std::copy_n(bits_.begin() + static_cast<std::ptrdiff_t>(i * words_per_frame_), words_per_frame_,
              f.words().begin());
  return f;
}

bool FrameStack::get(std::size_t i, std::size_t x, std::size_t y) const {
  const std::size_t b = x * height() + y;
  return (bits_[i * words_per_frame_ + (b >> 6)] >> (b & 63)) & 1u;
}

void write_frame_stack(const std::filesystem::path& path, const FrameStack& stack) {
  const auto& m = stack.model();
  GridFileHeader h;
  h.dtype = Dtype::UInt8;
  h.kind = PayloadKind::FrameStack;
  h.shape = {m.width, m.height};
  h.spacing = {1.0, 1.0};
  h.meta = {m.pairs_per_frame_mean, m.dark_electron_mean, m.readout_std, m.gain,
            static_cast<double>(m.threshold_batch)};
  h.n_frames = stack.size();
  std::vector<unsigned char> bytes(stack.size() * m.pixels());
  std::size_t k = 0;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    for (std::size_t x = 0; x < m.width; ++x) {
      for (std::size_t y = 0; y < m.height; ++y) bytes[k++] = stack.get(i, x, y) ? 1 : 0;
    }
  }
  write_grid_file(path, h, bytes.data(), bytes.size());
}

FrameStack read_frame_stack(const std::filesystem::path& path) {
  const auto file = read_grid_file(path);
  const auto& h = file.header;
  if (h.kind != PayloadKind::FrameStack || h.dtype != Dtype::UInt8 || h.shape.size() != 2) {
    throw SchemaError(path.string() + ": not a uint8 2D frame stack");
  }
  DetectorModel m;
  m.width = h.shape[0];
  m.height = h.shape[1];
  if (h.meta.size() >= 5) {
    m.pairs_per_frame_mean = h.meta[0];
    m.dark_electron_mean = h.meta[1];
    m.readout_std = h.meta[2];
    m.gain = h.meta[3];
    m.threshold_batch = static_cast<std::size_t>(h.meta[4]);
  }
  FrameStack stack(m);
  std::size_t k = 0;
  for (std::uint64_t i = 0; i < h.n_frames; ++i) {
    PhotonFrame f(m.width, m.height);
    for (std::size_t x = 0; x < m.width; ++x) {
      for (std::size_t y = 0; y < m.height; ++y) {
        const unsigned char v = file.payload[k++];
        if (v > 1) throw DomainError(path.string() + ": photon maps must hold 0 or 1");
        if (v) f.set(x, y);
      }
    }
    stack.push_back(f);
  }
  return stack;
}

CoincidenceMap::CoincidenceMap(std::size_t hx, std::size_t hy)
    : half_x(hx), half_y(hy), values((2 * hx + 1) * (2 * hy + 1), 0.0) {}

Lattice2D CoincidenceMap::lattice() const {
  return {nx(), ny(), -static_cast<double>(half_x), -static_cast<double>(half_y), 1.0, 1.0};
}

CoincidenceMap crop_offsets(const RealField& m, std::size_t half_x, std::size_t half_y) {
  if (m.grid.rank() != 2) throw ShapeError("crop_offsets expects a 2D map");
  const std::size_t cx = m.grid.axis(0).n / 2;
  const std::size_t cy = m.grid.axis(1).n / 2;
  if (half_x > cx - 1 || half_y > cy - 1) throw ShapeError("crop window exceeds the map");
  CoincidenceMap out(half_x, half_y);
  const long hx = static_cast<long>(half_x);
  const long hy = static_cast<long>(half_y);
  for (long dx = -hx; dx <= hx; ++dx) {
    for (long dy = -hy; dy <= hy; ++dy) {
      out.at(dx, dy) = m.at(static_cast<std::size_t>(static_cast<long>(cx) + dx),
                            static_cast<std::size_t>(static_cast<long>(cy) + dy));
    }
  }
  return out;
}

void write_coincidence_map(const std::filesystem::path& path, const CoincidenceMap& map) {
  GridFileHeader h;
  h.dtype = Dtype::Float64;
  h.kind = PayloadKind::CoincidenceMap;
  h.shape = {map.nx(), map.ny()};
  h.spacing = {1.0, 1.0};
  h.meta = {static_cast<double>(map.frames)};
  write_grid_file(path, h, map.values.data(), map.values.size() * sizeof(double));
}

DoubleGaussianSampler::DoubleGaussianSampler(double sigma_m_px, double sigma_j_px, long centre_x,
                                             long centre_y)
    : sigma_m_(sigma_m_px), sigma_j_(sigma_j_px), sigma_d_(0.0), cx_(centre_x), cy_(centre_y) {
  if (!std::isfinite(sigma_m_px) || !std::isfinite(sigma_j_px) || sigma_j_px < 0.0 ||
      !(2.0 * sigma_m_px > sigma_j_px)) {
    throw DomainError("double-Gaussian source needs 2*sigma_m > sigma_j >= 0");
  }
  sigma_d_ = std::sqrt(4.0 * sigma_m_px * sigma_m_px - sigma_j_px * sigma_j_px);
}

DoubleGaussianSampler DoubleGaussianSampler::from_sigmas(const SigmaPair& s, double pixel_pitch,
                                                         const DetectorModel& model) {
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw DomainError("pixel_pitch must be finite and > 0");
  }
  if (!(s.sigma_plus > 0.0) || !(s.sigma_minus > 0.0)) throw DomainError("sigmas must be > 0");
  const double r2 = 2.0 * std::numbers::sqrt2;
  const double sigma_j = 1.0 / (std::numbers::sqrt2 * s.sigma_plus);
  const double sigma_m = std::hypot(s.sigma_plus, s.sigma_minus) / (r2 * s.sigma_plus * s.sigma_minus);
  return DoubleGaussianSampler(sigma_m / pixel_pitch, sigma_j / pixel_pitch,
                               static_cast<long>(model.width / 2), static_cast<long>(model.height / 2));
}

PixelPair DoubleGaussianSampler::sample(std::mt19937_64& rng) const {
  std::normal_distribution<double> n01;
  const double sx = sigma_j_ * n01(rng);
  const double sy = sigma_j_ * n01(rng);
  const double dx = sigma_d_ * n01(rng);
  const double dy = sigma_d_ * n01(rng);
  return {cx_ + std::lround(0.5 * (sx + dx)), cy_ + std::lround(0.5 * (sy + dy)),
          cx_ + std::lround(0.5 * (sx - dx)), cy_ + std::lround(0.5 * (sy - dy))};
}

DifferenceMapSampler::DifferenceMapSampler(const CoincidenceMap& offsets, const DetectorModel& model,
                                           std::optional<double> centroid_sigma_px)
    : centroid_sigma_(centroid_sigma_px),
      width_(static_cast<double>(model.width)),
      height_(static_cast<double>(model.height)) {
  model.validate();
  if (centroid_sigma_px && !(*centroid_sigma_px >= 0.0)) {
    throw DomainError("centroid sigma must be >= 0");
  }
  double total = 0.0;
  const long hx = static_cast<long>(offsets.half_x);
  const long hy = static_cast<long>(offsets.half_y);
  for (long dx = -hx; dx <= hx; ++dx) {
    for (long dy = -hy; dy <= hy; ++dy) {
      const double w = offsets.at(dx, dy);
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw DomainError("difference map must be finite and non-negative");
      }
      if (w == 0.0) continue;
      total += w;
      dx_.push_back(dx);
      dy_.push_back(dy);
      cumulative_.push_back(total);
    }
  }
  if (!(total > 0.0)) throw DomainError("difference map has no mass to sample from");
  for (auto& c : cumulative_) c /= total;
  cumulative_.back() = 1.0;
}

PixelPair DifferenceMapSampler::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u01(rng));
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                              cumulative_.size() - 1);
  double cx;
  double cy;
  if (centroid_sigma_) {
    std::normal_distribution<double> n01;
    cx = 0.5 * width_ + *centroid_sigma_ * n01(rng);
    cy = 0.5 * height_ + *centroid_sigma_ * n01(rng);
  } else {
    cx = width_ * u01(rng) - 0.5;
    cy = height_ * u01(rng) - 0.5;
  }
  // x2 − x1 is exactly the drawn offset; the centroid only fixes the rounding.
  const long x1 = std::lround(cx - 0.5 * static_cast<double>(dx_[k]));
  const long y1 = std::lround(cy - 0.5 * static_cast<double>(dy_[k]));
  return {x1, y1, x1 + dx_[k], y1 + dy_[k]};
}

std::uint64_t frame_seed(std::uint64_t seed, std::uint64_t frame) {
  return splitmix64(splitmix64(seed) ^ splitmix64(frame + 0x632be59bd9b4e019ULL));
}

std::vector<double> synthesize_raw_frame(const PairSampler& source, const DetectorModel& model,
                                         std::uint64_t seed, std::uint64_t frame) {
  std::mt19937_64 rng(frame_seed(seed, frame));
  std::vector<double> raw(model.pixels(), 0.0);
  const long w = static_cast<long>(model.width);
  const long h = static_cast<long>(model.height);
  auto deposit = [&](long x, long y) {
    if (x >= 0 && x < w && y >= 0 && y < h) raw[static_cast<std::size_t>(x * h + y)] += model.gain;
  };
  if (model.pairs_per_frame_mean > 0.0) {
    std::poisson_distribution<long> pairs(model.pairs_per_frame_mean);
    const long n = pairs(rng);
    for (long p = 0; p < n; ++p) {
      const PixelPair pp = source.sample(rng);
      deposit(pp.x1, pp.y1);
      deposit(pp.x2, pp.y2);
    }
  }
  if (model.readout_std > 0.0) {
    std::normal_distribution<double> noise(model.dark_electron_mean, model.readout_std);
    for (auto& v : raw) v += noise(rng);
  } else if (model.dark_electron_mean != 0.0) {
    for (auto& v : raw) v += model.dark_electron_mean;
  }
  return raw;
}

PhotonFrame threshold_frame(std::span<const double> raw, std::size_t width, std::size_t height,
                            double mu, double sigma) {
  if (raw.size() != width * height) throw ShapeError("raw frame size does not match detector");
  const double t = mu + sigma;
  PhotonFrame f(width, height);
  auto words = f.words();
  for (std::size_t b = 0; b < raw.size(); ++b) {
    if (raw[b] > t) words[b >> 6] |= std::uint64_t{1} << (b & 63);
  }
  return f;
}

FrameStack synthesize_frames(const PairSampler& source, const DetectorModel& model,
                             std::size_t n_frames, std::uint64_t seed) {
  FrameStack stack(model);
  stream_frames(source, model, n_frames, seed, [&](const PhotonFrame& f) { stack.push_back(f); });
  return stack;
}

struct CoincidenceAccumulator::Impl {
  std::size_t width, height;
  Window window;
  CoincidenceKind kind;
  bool exclude_self;
  std::size_t px, py, pyc;  // padded sizes; pyc = py/2 + 1 complex columns
  double* buffer = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  std::vector<complex> previous;
  std::vector<complex> genuine;
  std::vector<complex> accidental;
  std::vector<double> self_counts;  // self-pair contributions on the output window
  std::vector<std::size_t> previous_ones;
  bool has_previous = false;

  Impl(std::size_t w, std::size_t h, Window win, CoincidenceKind k, bool ex)
      : width(w), height(h), window(win), kind(k), exclude_self(ex) {
    px = fft_size(w + win.half_x + 1);
    py = fft_size(h + win.half_y + 1);
    pyc = py / 2 + 1;
    buffer = fftw_alloc_real(px * py);
    spectrum = fftw_alloc_complex(px * pyc);
    if (!buffer || !spectrum) throw ResourceError("coincidence accumulator: allocation failed");
    forward = fftw_plan_dft_r2c_2d(static_cast<int>(px), static_cast<int>(py), buffer, spectrum,
                                   FFTW_ESTIMATE);
    std::fill_n(buffer, px * py, 0.0);
    previous.assign(px * pyc, complex{});
    genuine.assign(px * pyc, complex{});
    accidental.assign(px * pyc, complex{});
    self_counts.assign((2 * win.half_x + 1) * (2 * win.half_y + 1), 0.0);
  }
  ~Impl() {
    fftw_destroy_plan(forward);
    fftw_free(spectrum);
    fftw_free(buffer);
  }

  void add(const PhotonFrame& f) {
    std::vector<std::size_t> ones;
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t y = 0; y < height; ++y) {
        if (f.get(x, y)) ones.push_back(x * height + y);
      }
    }
    for (auto b : ones) buffer[(b / height) * py + b % height] = 1.0;
    fftw_execute(forward);
    for (auto b : ones) buffer[(b / height) * py + b % height] = 0.0;
    const auto* cur = reinterpret_cast<const complex*>(spectrum);
    if (has_previous) {
      for (std::size_t i = 0; i < previous.size(); ++i) {
        const complex a = kind == CoincidenceKind::Difference ? std::conj(previous[i]) : previous[i];
        genuine[i] += a * previous[i];
        accidental[i] += a * cur[i];
      }
      if (exclude_self) count_self_pairs(previous_ones);
    }
    std::copy_n(cur, previous.size(), previous.begin());
    previous_ones = std::move(ones);
    has_previous = true;
  }

  void count_self_pairs(const std::vector<std::size_t>& ones) {
    const long hx = static_cast<long>(window.half_x);
    const long hy = static_cast<long>(window.half_y);
    const long ny = 2 * hy + 1;
    if (kind == CoincidenceKind::Difference) {
      self_counts[static_cast<std::size_t>(hx * ny + hy)] += static_cast<double>(ones.size());
      return;
    }
    for (auto b : ones) {
      const long sx = 2 * static_cast<long>(b / height) - static_cast<long>(width);
      const long sy = 2 * static_cast<long>(b % height) - static_cast<long>(height);
      if (std::abs(sx) <= hx && std::abs(sy) <= hy) {
        self_counts[static_cast<std::size_t>((sx + hx) * ny + sy + hy)] += 1.0;
      }
    }
  }

  // Inverse transform of an accumulated spectrum, read out on the window.
  CoincidenceMap extract(const std::vector<complex>& spec, double self_sign,
                         std::size_t frames) const {
    std::vector<complex> work(spec);
    std::vector<double> real(px * py);
    fftw_plan inverse = fftw_plan_dft_c2r_2d(static_cast<int>(px), static_cast<int>(py),
                                             reinterpret_cast<fftw_complex*>(work.data()),
                                             real.data(), FFTW_ESTIMATE);
    fftw_execute(inverse);
    fftw_destroy_plan(inverse);
    const double scale = 1.0 / (static_cast<double>(px * py) * static_cast<double>(frames - 1));
    CoincidenceMap out(window.half_x, window.half_y);
    out.frames = frames;
    const long hx = static_cast<long>(window.half_x);
    const long hy = static_cast<long>(window.half_y);
    const long base_x = kind == CoincidenceKind::Sum ? static_cast<long>(width) : 0;
    const long base_y = kind == CoincidenceKind::Sum ? static_cast<long>(height) : 0;
    const long lpx = static_cast<long>(px);
    const long lpy = static_cast<long>(py);
    for (long dx = -hx; dx <= hx; ++dx) {
      const long ix = ((base_x + dx) % lpx + lpx) % lpx;
      for (long dy = -hy; dy <= hy; ++dy) {
        const long iy = ((base_y + dy) % lpy + lpy) % lpy;
        out.at(dx, dy) = real[static_cast<std::size_t>(ix * lpy + iy)] * scale;
      }
    }
    if (self_sign != 0.0) {
      const double inv = 1.0 / static_cast<double>(frames - 1);
      for (std::size_t i = 0; i < out.values.size(); ++i) {
        out.values[i] += self_sign * self_counts[i] * inv;
      }
    }
    return out;
  }
};

CoincidenceAccumulator::CoincidenceAccumulator(std::size_t width, std::size_t height, Window window,
                                               CoincidenceKind kind, bool exclude_self_pairs) {
  if (width == 0 || height == 0) throw DomainError("accumulator needs a non-empty sensor");
  if (window.half_x >= width || window.half_y >= height) {
    throw DomainError("coincidence window exceeds the sensor");
  }
  impl_ = std::make_unique<Impl>(width, height, window, kind, exclude_self_pairs);
}

CoincidenceAccumulator::~CoincidenceAccumulator() = default;

void CoincidenceAccumulator::add(const PhotonFrame& frame) {
  if (frame.width() != impl_->width || frame.height() != impl_->height) {
    throw ShapeError("frame dimensions do not match the accumulator");
  }
  impl_->add(frame);
  ++frames_;
}

namespace {
void require_pairs(std::size_t frames) {
  if (frames < 2) {
    throw InsufficientDataError("coincidence correlation needs at least 2 frames, got " +
                                std::to_string(frames));
  }
}
}  // namespace

CoincidenceMap CoincidenceAccumulator::result() const {
  require_pairs(frames_);
  std::vector<complex> diff(impl_->genuine.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = impl_->genuine[i] - impl_->accidental[i];
  return impl_->extract(diff, impl_->exclude_self ? -1.0 : 0.0, frames_);
}

CoincidenceMap CoincidenceAccumulator::genuine() const {
  require_pairs(frames_);
  return impl_->extract(impl_->genuine, impl_->exclude_self ? -1.0 : 0.0, frames_);
}

CoincidenceMap CoincidenceAccumulator::accidental() const {
  require_pairs(frames_);
  return impl_->extract(impl_->accidental, 0.0, frames_);
}

namespace {
CoincidenceMap run_accumulator(const FrameStack& stack, Window window, CoincidenceKind kind,
                               bool exclude_self) {
  require_pairs(stack.size());
  CoincidenceAccumulator acc(stack.width(), stack.height(), window, kind, exclude_self);
  for (std::size_t i = 0; i < stack.size(); ++i) acc.add(stack.frame(i));
  return acc.result();
}
}  // namespace

CoincidenceMap coincidence_correlation(const FrameStack& stack, Window window) {
  return run_accumulator(stack, window, CoincidenceKind::Difference, false);
}

CoincidenceMap sum_coincidence_correlation(const FrameStack& stack, Window window) {
  return run_accumulator(stack, window, CoincidenceKind::Sum, true);
}

RealImage mean_frame(const FrameStack& stack) {
  if (stack.size() == 0) throw InsufficientDataError("mean_frame of an empty stack");
  RealImage img(Grid::plane(stack.width(), 1.0, stack.height(), 1.0));
  for (std::size_t i = 0; i < stack.size(); ++i) {
    for (std::size_t x = 0; x < stack.width(); ++x) {
      for (std::size_t y = 0; y < stack.height(); ++y) {
        if (stack.get(i, x, y)) img.at(x, y) += 1.0;
      }
    }
  }
  for (auto& v : img.values) v /= static_cast<double>(stack.size());
  return img;
}

SchmidtEstimate schmidt_from_widths(double sigma_m, double sigma_m_stderr, double sigma_j,
                                    double sigma_j_stderr) {
  if (!(sigma_m > 0.0) || !(sigma_j > 0.0) || !std::isfinite(sigma_m) || !std::isfinite(sigma_j)) {
    throw DomainError("Schmidt estimate needs finite positive widths");
  }
  SchmidtEstimate e;
  e.sigma_m = sigma_m;
  e.sigma_m_stderr = sigma_m_stderr;
  e.sigma_j = sigma_j;
  e.sigma_j_stderr = sigma_j_stderr;
  const double q = sigma_m / sigma_j;
  e.K = q * q;
  e.K_stderr = 2.0 * e.K * std::hypot(sigma_m_stderr / sigma_m, sigma_j_stderr / sigma_j);
  return e;
}

namespace {
// Removes `quantization` (px²) from a fitted width, scaling the stderr alike.
std::pair<double, double> corrected(double sigma, double stderr_, double quantization) {
  const double v = sigma * sigma - quantization;
  if (!(v > 0.0)) throw EstimationError("fitted width is below the pixel quantization limit");
  const double c = std::sqrt(v);
  return {c, stderr_ * sigma / c};
}
}  // namespace

SchmidtEstimate estimate_schmidt(const RealImage& marginal_image, const CoincidenceMap& sum_map,
                                 const SchmidtOptions& opt) {
  const auto m = fit_gaussian_2d(marginal_image, opt.fit);
  const auto j = fit_gaussian_2d(sum_map.values, sum_map.lattice(), opt.fit);
  if (!opt.pixel_correction) return schmidt_from_widths(m.sigma, m.sigma_stderr, j.sigma, j.sigma_stderr);
  const auto [sm, sm_se] = corrected(m.sigma, m.sigma_stderr, 1.0 / 12.0);
  const auto [sj, sj_se] = corrected(j.sigma, j.sigma_stderr, 2.0 / 12.0);
  return schmidt_from_widths(sm, sm_se, sj, sj_se);
}

double speckle_contrast(std::span<const double> values) {
  if (values.empty()) throw DomainError("speckle_contrast of an empty region");
  const auto ms = mean_std(values);
  if (!(ms.mean > 0.0)) throw DomainError("speckle_contrast needs a positive mean intensity");
  return ms.stddev / ms.mean;
}

double speckle_contrast(const RealImage& image, std::optional<PixelRegion> region) {
  if (!region) return speckle_contrast(image.values);
  if (image.grid.rank() != 2) throw ShapeError("speckle_contrast region needs a 2D image");
  const auto& r = *region;
  if (r.x0 >= r.x1 || r.y0 >= r.y1 || r.x1 > image.grid.axis(0).n || r.y1 > image.grid.axis(1).n) {
    throw ShapeError("speckle_contrast region is empty or outside the image");
  }
  std::vector<double> v;
  v.reserve((r.x1 - r.x0) * (r.y1 - r.y0));
  for (std::size_t x = r.x0; x < r.x1; ++x) {
    for (std::size_t y = r.y0; y < r.y1; ++y) v.push_back(image.at(x, y));
  }
  return speckle_contrast(v);
}

}  // namespace biphoton
