#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "biphoton/emccd.hpp"
#include "biphoton/grid_io.hpp"
#include "biphoton/stats.hpp"
#include "biphoton/zernike.hpp"
#include "doctest.h"

using namespace biphoton;

namespace {

DetectorModel noiseless(std::size_t w, std::size_t h, double pairs) {
  DetectorModel m;
  m.width = w;
  m.height = h;
  m.pairs_per_frame_mean = pairs;
  m.gain = 100.0;
  return m;
}

FrameStack random_stack(std::size_t w, std::size_t h, std::size_t n, double p, std::uint64_t seed) {
  FrameStack s(noiseless(w, h, 0.0));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(p);
  for (std::size_t i = 0; i < n; ++i) {
    PhotonFrame f(w, h);
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t y = 0; y < h; ++y) f.set(x, y, on(rng));
    }
    s.push_back(f);
  }
  return s;
}

// Genuine-minus-accidental sum evaluated term by term.
CoincidenceMap brute_force(const FrameStack& s, Window win, CoincidenceKind kind, bool exclude_self) {
  const long W = static_cast<long>(s.width());
  const long H = static_cast<long>(s.height());
  const long hx = static_cast<long>(win.half_x);
  const long hy = static_cast<long>(win.half_y);
  CoincidenceMap out(win.half_x, win.half_y);
  auto px = [&](std::size_t i, long x, long y) -> double {
    if (x < 0 || y < 0 || x >= W || y >= H) return 0.0;
    return s.get(i, static_cast<std::size_t>(x), static_cast<std::size_t>(y)) ? 1.0 : 0.0;
  };
  for (long ox = -hx; ox <= hx; ++ox) {
    for (long oy = -hy; oy <= hy; ++oy) {
      double acc = 0.0;
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        for (long x = 0; x < W; ++x) {
          for (long y = 0; y < H; ++y) {
            const double a = px(i, x, y);
            if (a == 0.0) continue;
            long x2 = x + ox;
            long y2 = y + oy;
            if (kind == CoincidenceKind::Sum) {
              x2 = W + ox - x;
              y2 = H + oy - y;
            }
            const bool self = x2 == x && y2 == y;
            if (!(exclude_self && self)) acc += a * px(i, x2, y2);
            acc -= a * px(i + 1, x2, y2);
          }
        }
      }
      out.at(ox, oy) = acc / static_cast<double>(s.size() - 1);
    }
  }
  return out;
}

double max_abs_dev(const CoincidenceMap& a, const CoincidenceMap& b) {
  REQUIRE(a.values.size() == b.values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d = std::max(d, std::abs(a.values[i] - b.values[i]));
  return d;
}

class FixedOffsetSampler : public PairSampler {
 public:
  FixedOffsetSampler(long dx, long dy, long w, long h) : dx_(dx), dy_(dy), w_(w), h_(h) {}
  PixelPair sample(std::mt19937_64& rng) const override {
    std::uniform_int_distribution<long> ux(0, w_ - 1 - dx_);
    std::uniform_int_distribution<long> uy(0, h_ - 1 - dy_);
    const long x = ux(rng);
    const long y = uy(rng);
    return {x, y, x + dx_, y + dy_};
  }

 private:
  long dx_, dy_, w_, h_;
};

}  // namespace

TEST_CASE("detector model and frame containers") {
  CHECK_THROWS_AS(noiseless(0, 8, 1.0).validate(), DomainError);
  CHECK_THROWS_AS(noiseless(7, 8, 1.0).validate(), DomainError);
  DetectorModel bad = noiseless(8, 8, 1.0);
  bad.gain = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = noiseless(8, 8, -1.0);
  CHECK_THROWS_AS(bad.validate(), DomainError);

  PhotonFrame f(10, 14);
  f.set(3, 5);
  f.set(9, 13);
  f.set(0, 0);
  f.set(0, 0, false);
  CHECK(f.count() == 2);
  CHECK(f.get(3, 5));
  CHECK_FALSE(f.get(5, 3));

  FrameStack s(noiseless(10, 14, 0.0));
  s.push_back(f);
  s.push_back(PhotonFrame(10, 14));
  CHECK(s.size() == 2);
  CHECK(s.get(0, 9, 13));
  CHECK(s.frame(1).count() == 0);
  CHECK_THROWS_AS(s.push_back(PhotonFrame(14, 10)), ShapeError);
}

TEST_CASE("frame stack and coincidence map files") {
  const auto dir = std::filesystem::temp_directory_path() / "biphoton_emccd_io";
  std::filesystem::create_directories(dir);
  auto s = random_stack(12, 6, 5, 0.2, 4);
  write_frame_stack(dir / "stack.bin", s);
  const auto back = read_frame_stack(dir / "stack.bin");
  REQUIRE(back.size() == 5);
  CHECK(back.model().gain == s.model().gain);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t x = 0; x < 12; ++x) {
      for (std::size_t y = 0; y < 6; ++y) REQUIRE(back.get(i, x, y) == s.get(i, x, y));
    }
  }
  CoincidenceMap m(2, 1);
  m.at(-2, 1) = 3.5;
  m.frames = 9;
  write_coincidence_map(dir / "map.bin", m);
  const auto file = read_grid_file(dir / "map.bin");
  CHECK(file.header.shape == std::vector<std::uint64_t>{5, 3});
  CHECK(file.header.meta == std::vector<double>{9.0});
  RealField img(Grid::plane(4, 1.0, 4, 1.0));
  write_field(dir / "field.bin", img);
  CHECK_THROWS_AS(read_frame_stack(dir / "field.bin"), SchemaError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthesize_frames") {
  SUBCASE("no pairs gives empty frames") {
    const auto src = DoubleGaussianSampler(5.0, 1.0, 16, 16);
    const auto s = synthesize_frames(src, noiseless(32, 32, 0.0), 20, 1);
    for (std::size_t i = 0; i < s.size(); ++i) REQUIRE(s.frame(i).count() == 0);
  }
  SUBCASE("noiseless occupancy follows the pair rate") {
    const FixedOffsetSampler src(3, 0, 128, 128);
    const auto m = noiseless(128, 128, 20.0);
    const auto s = synthesize_frames(src, m, 1000, 2);
    const double occupancy = sum(mean_frame(s).values) / static_cast<double>(m.pixels());
    CHECK(occupancy == doctest::Approx(2.0 * 20.0 / 16384.0).epsilon(0.05));
  }
  SUBCASE("fixed separation sampler keeps (3, 0) exactly") {
    CoincidenceMap offsets(4, 4);
    offsets.at(3, 0) = 1.0;
    const auto m = noiseless(256, 256, 0.5);
    const DifferenceMapSampler src(offsets, m, std::nullopt);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 2000; ++k) {
      const auto p = src.sample(rng);
      REQUIRE(p.x2 - p.x1 == 3);
      REQUIRE(p.y2 == p.y1);
    }
    const auto s = synthesize_frames(src, m, 300, 6);
    int pairs_seen = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto f = s.frame(i);
      if (f.count() != 2) continue;
      std::vector<std::pair<std::size_t, std::size_t>> on;
      for (std::size_t x = 0; x < 256; ++x) {
        for (std::size_t y = 0; y < 256; ++y) {
          if (f.get(x, y)) on.emplace_back(x, y);
        }
      }
      if (on[1].first - on[0].first == 3 && on[0].second == on[1].second) ++pairs_seen;
      else FAIL("two-photon frame without the (3, 0) separation");
    }
    CHECK(pairs_seen > 50);
  }
  SUBCASE("deterministic per seed and frame index") {
    DetectorModel m = noiseless(32, 32, 4.0);
    m.readout_std = 2.0;
    m.dark_electron_mean = 10.0;
    const DoubleGaussianSampler src(5.0, 1.0, 16, 16);
    CHECK(synthesize_raw_frame(src, m, 11, 7) == synthesize_raw_frame(src, m, 11, 7));
    CHECK(synthesize_raw_frame(src, m, 11, 7) != synthesize_raw_frame(src, m, 11, 8));
    CHECK(synthesize_raw_frame(src, m, 11, 7) != synthesize_raw_frame(src, m, 12, 7));
    const auto a = synthesize_frames(src, m, 30, 3);
    const auto b = synthesize_frames(src, m, 30, 3);
    for (std::size_t i = 0; i < 30; ++i) {
      const auto fa = a.frame(i);
      const auto fb = b.frame(i);
      REQUIRE(std::ranges::equal(fa.words(), fb.words()));
    }
  }
  SUBCASE("sampler parameter checks") {
    CHECK_THROWS_AS(DoubleGaussianSampler(1.0, 2.0, 0, 0), DomainError);
    CoincidenceMap empty(2, 2);
    CHECK_THROWS_AS(DifferenceMapSampler(empty, noiseless(8, 8, 1), std::nullopt), DomainError);
    empty.at(1, 1) = -1.0;
    CHECK_THROWS_AS(DifferenceMapSampler(empty, noiseless(8, 8, 1), std::nullopt), DomainError);
  }
}

TEST_CASE("threshold_frame") {
  SUBCASE("strict inequality") {
    std::vector<double> raw(16, 5.0);
    CHECK(threshold_frame(raw, 4, 4, 5.0, 0.0).count() == 0);
    raw[6] = 5.0 + 2.0 + 1e-9;
    const auto f = threshold_frame(raw, 4, 4, 5.0, 2.0);
    CHECK(f.count() == 1);
    CHECK(f.get(1, 2));
  }
  SUBCASE("Gaussian electrons: ones fraction is P(Z > 1)") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(40.0, 6.0);
    std::vector<double> raw(1000 * 1000);
    for (auto& v : raw) v = n(rng);
    const auto ms = mean_std(raw);
    const auto f = threshold_frame(raw, 1000, 1000, ms.mean, ms.stddev);
    const double expected = 0.5 * std::erfc(1.0 / std::numbers::sqrt2);
    CHECK(static_cast<double>(f.count()) / 1e6 == doctest::Approx(expected).epsilon(0.01));
  }
  SUBCASE("ones count never increases with the threshold (property)") {
    DetectorModel m = noiseless(64, 64, 200.0);
    m.readout_std = 3.0;
    m.dark_electron_mean = 20.0;
    const DoubleGaussianSampler src(12.0, 2.0, 32, 32);
    for (std::uint64_t frame = 0; frame < 5; ++frame) {
      const auto raw = synthesize_raw_frame(src, m, 1, frame);
      const auto ms = mean_std(raw);
      std::size_t last = raw.size() + 1;
      for (double t = 0.0; t < 8.0; t += 0.25) {
        const std::size_t c = threshold_frame(raw, 64, 64, ms.mean, t * ms.stddev).count();
        REQUIRE(c <= last);
        last = c;
      }
    }
  }
}

TEST_CASE("coincidence accumulator matches the term-by-term formula") {
  const auto s = random_stack(10, 8, 7, 0.3, 21);
  for (auto kind : {CoincidenceKind::Difference, CoincidenceKind::Sum}) {
    for (bool ex : {false, true}) {
      for (Window w : {Window{9, 7}, Window{3, 2}}) {
        CoincidenceAccumulator acc(10, 8, w, kind, ex);
        for (std::size_t i = 0; i < s.size(); ++i) acc.add(s.frame(i));
        CHECK(max_abs_dev(acc.result(), brute_force(s, w, kind, ex)) < 1e-9);
      }
    }
  }
  CHECK(max_abs_dev(coincidence_correlation(s, {4, 4}),
                    brute_force(s, {4, 4}, CoincidenceKind::Difference, false)) < 1e-9);
  CHECK(max_abs_dev(sum_coincidence_correlation(s, {4, 4}),
                    brute_force(s, {4, 4}, CoincidenceKind::Sum, true)) < 1e-9);
  CoincidenceAccumulator acc(10, 8, {2, 2}, CoincidenceKind::Difference);
  acc.add(s.frame(0));
  CHECK_THROWS_AS(acc.result(), InsufficientDataError);
  CHECK_THROWS_AS(CoincidenceAccumulator(10, 8, {10, 2}, CoincidenceKind::Sum), DomainError);
}

TEST_CASE("static patterns cancel exactly") {
  const auto one = random_stack(32, 24, 1, 0.2, 8).frame(0);
  FrameStack s(noiseless(32, 24, 0.0));
  for (int i = 0; i < 20; ++i) s.push_back(one);
  const auto c = coincidence_correlation(s, {31, 23});
  CHECK(*std::max_element(c.values.begin(), c.values.end()) == 0.0);
  CHECK(*std::min_element(c.values.begin(), c.values.end()) == 0.0);
}

TEST_CASE("one pair per frame at separation (3, 0)") {
  const std::size_t W = 128;
  const std::size_t H = 128;
  const FixedOffsetSampler src(3, 0, W, H);
  CoincidenceAccumulator acc(W, H, {8, 8}, CoincidenceKind::Difference);
  std::mt19937_64 rng(99);
  for (int i = 0; i < 10000; ++i) {
    PhotonFrame f(W, H);
    const auto p = src.sample(rng);
    f.set(static_cast<std::size_t>(p.x1), static_cast<std::size_t>(p.y1));
    f.set(static_cast<std::size_t>(p.x2), static_cast<std::size_t>(p.y2));
    acc.add(f);
  }
  const auto c = acc.result();
  std::vector<double> rest;
  for (long dx = -8; dx <= 8; ++dx) {
    for (long dy = -8; dy <= 8; ++dy) {
      if (dy == 0 && (dx == 0 || std::abs(dx) == 3)) continue;
      rest.push_back(c.at(dx, dy));
    }
  }
  const double sd = mean_std(rest).stddev;
  CHECK(c.at(3, 0) > 5.0 * sd);
  CHECK(c.at(-3, 0) > 5.0 * sd);
  CHECK(c.at(3, 0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("sum-coordinate correlation") {
  SUBCASE("perfect anti-correlation through the centre peaks at sum 0") {
    const auto m = noiseless(64, 64, 3.0);
    const DoubleGaussianSampler src(8.0, 0.0, 32, 32);
    const auto c = sum_coincidence_correlation(synthesize_frames(src, m, 2000, 4), {6, 6});
    const auto it = std::max_element(c.values.begin(), c.values.end());
    CHECK(static_cast<std::size_t>(it - c.values.begin()) == 6 * 13 + 6);
    // each pair is counted once per ordering
    CHECK(c.at(0, 0) == doctest::Approx(6.0).epsilon(0.05));
  }
  SUBCASE("uncorrelated frames average to zero") {
    const auto s = random_stack(64, 64, 400, 0.05, 31);
    const auto c = sum_coincidence_correlation(s, {10, 10});
    const auto ms = mean_std(c.values);
    CHECK(std::abs(ms.mean) < 3.0 * ms.stddev / std::sqrt(static_cast<double>(c.values.size())));
  }
  SUBCASE("double-Gaussian source: fitted widths reproduce σ_j and σ_m") {
    const SigmaPair sp{20.0, 1.0};
    const auto m = noiseless(128, 128, 100.0);
    const double pitch = 1.0 / (std::numbers::sqrt2 * sp.sigma_plus * 2.0);  // σ_j = 2 px
    const auto src = DoubleGaussianSampler::from_sigmas(sp, pitch, m);
    CHECK(src.sigma_j() == doctest::Approx(2.0));
    const auto s = synthesize_frames(src, m, 1500, 12);
    const auto c = sum_coincidence_correlation(s, {12, 12});
    const auto est = estimate_schmidt(mean_frame(s), c);
    CHECK(est.sigma_j == doctest::Approx(2.0).epsilon(0.05));
    CHECK(est.sigma_m == doctest::Approx(src.sigma_m()).epsilon(0.05));
    CHECK(est.K == doctest::Approx(0.25 * (1.0 + 400.0)).epsilon(0.10));
  }
}

TEST_CASE("Schmidt estimate from widths") {
  const auto reported = schmidt_from_widths(121.97, 0.0, 4.59, 0.0);
  CHECK(reported.K == doctest::Approx(706.1).epsilon(1e-3));
  CHECK(std::abs(reported.K - 707.0) <= 10.0);
  CHECK(schmidt_from_widths(3.0, 0.0, 3.0, 0.0).K == 1.0);
  const auto e = schmidt_from_widths(10.0, 0.1, 1.0, 0.01);
  CHECK(e.K_stderr == doctest::Approx(2.0 * 100.0 * std::hypot(0.01, 0.01)));
  CHECK_THROWS_AS(schmidt_from_widths(0.0, 0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("estimator converges with frame count (property)") {
  const SigmaPair sp{20.0, 1.0};
  const double K = 0.25 * (1.0 + 400.0);
  DetectorModel m = noiseless(128, 128, 60.0);
  m.readout_std = 2.0;
  m.dark_electron_mean = 10.0;
  const double pitch = 1.0 / (std::numbers::sqrt2 * sp.sigma_plus * 2.0);
  const auto src = DoubleGaussianSampler::from_sigmas(sp, pitch, m);
  std::vector<double> medians;
  for (std::size_t n : {500, 1500, 3000}) {
    std::vector<double> err;
    for (std::uint64_t seed : {1, 2, 3}) {
      const auto s = synthesize_frames(src, m, n, 1000 + seed);
      err.push_back(std::abs(estimate_schmidt(mean_frame(s), sum_coincidence_correlation(s, {12, 12})).K - K));
    }
    std::sort(err.begin(), err.end());
    medians.push_back(err[1]);
  }
  MESSAGE("median |K - K_true| at N = 500, 1500, 3000: " << medians[0] << ", " << medians[1] << ", "
                                                            << medians[2]);
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] <= medians[1]);
}

TEST_CASE("raw genuine term grows quadratically with the pair rate") {
  // Broad separation distribution at 5-10% occupancy: in-frame accidental
  // pairs (∝ m²) outnumber true pairs (∝ m) at every offset.
  CoincidenceMap offsets(12, 12);
  for (long dx = -12; dx <= 12; ++dx) {
    for (long dy = -12; dy <= 12; ++dy) offsets.at(dx, dy) = std::exp(-(dx * dx + dy * dy) / 50.0);
  }
  auto terms = [&](double pairs) {
    const auto m = noiseless(64, 64, pairs);
    const DifferenceMapSampler src(offsets, m, std::nullopt);
    const auto s = synthesize_frames(src, m, 2000, 77);
    CoincidenceAccumulator acc(64, 64, {4, 4}, CoincidenceKind::Difference);
    for (std::size_t i = 0; i < s.size(); ++i) acc.add(s.frame(i));
    return std::pair{acc.genuine().at(2, 0), acc.result().at(2, 0)};
  };
  const auto [g1, c1] = terms(100.0);
  const auto [g2, c2] = terms(200.0);
  CHECK(g2 / g1 == doctest::Approx(4.0).epsilon(0.2));
  CHECK(c2 / c1 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("speckle_contrast") {
  RealField flat(Grid::plane(16, 1.0, 16, 1.0));
  for (auto& v : flat.values) v = 2.5;
  CHECK(speckle_contrast(flat) == 0.0);
  CHECK_THROWS_AS(speckle_contrast(RealField(Grid::plane(4, 1.0, 4, 1.0))), DomainError);
  RealField half = flat;
  for (std::size_t x = 0; x < 8; ++x) {
    for (std::size_t y = 0; y < 16; ++y) half.at(x, y) = 0.0;
  }
  CHECK(speckle_contrast(half, PixelRegion{8, 0, 16, 16}) == 0.0);
  CHECK(speckle_contrast(half) == doctest::Approx(1.0));
  CHECK_THROWS_AS(speckle_contrast(half, PixelRegion{8, 0, 20, 16}), ShapeError);

  SUBCASE("fully developed speckle from white pupil phase (Monte Carlo)") {
    const Grid g = Grid::plane(256, 0.05, 256, 0.05);
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto img = far_field_intensity(white_random_mask(g, 4.0, seed), INFINITY);
      const double k = speckle_contrast(img);
      CHECK(k == doctest::Approx(1.0).epsilon(0.1));
      mean += k / 10.0;
    }
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
  }
}
