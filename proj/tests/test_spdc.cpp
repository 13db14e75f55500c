#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "biphoton/gaussian_fit.hpp"
#include "biphoton/spdc.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace biphoton;

namespace {

// 1D photon grid with the given (n/2)·dk·σ− for σ− = 1.
Grid photon_line(std::size_t n, double half_extent) {
  return Grid::line(n, 2.0 * half_extent / static_cast<double>(n));
}

std::vector<double> sampled_gaussian(const Axis& a, double mu, double sigma, double amp) {
  std::vector<double> v(a.n);
  for (std::size_t i = 0; i < a.n; ++i) {
    const double z = (a.coordinate(i) - mu) / sigma;
    v[i] = amp * std::exp(-0.5 * z * z);
  }
  return v;
}

}  // namespace

TEST_CASE("fit_gaussian recovers an exact sampled Gaussian") {
  const Axis a(128, 0.1);
  const auto v = sampled_gaussian(a, 0.37, 0.8, 2.5);
  const auto fit = fit_gaussian(RealField(Grid({a}), v));
  CHECK(fit.sigma == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(fit.center == doctest::Approx(0.37).epsilon(1e-10));
  CHECK(fit.amplitude == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(fit.sigma_stderr < 1e-8);
}

TEST_CASE("fit_gaussian: reported standard error tracks Monte-Carlo scatter") {
  const Axis a(64, 0.25);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 0.01);
  double mean = 0.0;
  double mean2 = 0.0;
  double reported = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    auto v = sampled_gaussian(a, 0.0, 1.5, 1.0);
    for (auto& x : v) x = std::max(1e-6, x + noise(rng));
    const auto fit = fit_gaussian(RealField(Grid({a}), v));
    mean += fit.sigma / trials;
    mean2 += fit.sigma * fit.sigma / trials;
    reported += fit.sigma_stderr / trials;
  }
  const double scatter = std::sqrt(mean2 - mean * mean);
  CHECK(mean == doctest::Approx(1.5).epsilon(0.01));
  CHECK(reported > 0.6 * scatter);
  CHECK(reported < 1.6 * scatter);
}

TEST_CASE("fit_gaussian_2d recovers axis widths and centre") {
  const Grid g = Grid::plane(64, 0.2, 48, 0.3);
  RealField img(g);
  for_each_index(g, [&](std::size_t flat, std::span<const std::size_t> idx) {
    const double x = (g.axis(0).coordinate(idx[0]) - 0.4) / 1.1;
    const double y = (g.axis(1).coordinate(idx[1]) + 0.9) / 2.0;
    img.values[flat] = 3.0 * std::exp(-0.5 * (x * x + y * y));
  });
  const auto fit = fit_gaussian_2d(img);
  CHECK(fit.sigma_x == doctest::Approx(1.1).epsilon(1e-9));
  CHECK(fit.sigma_y == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(fit.sigma == doctest::Approx(std::sqrt(2.2)).epsilon(1e-9));
  CHECK(fit.center_x == doctest::Approx(0.4).epsilon(1e-9));
  CHECK(fit.center_y == doctest::Approx(-0.9).epsilon(1e-9));
  CHECK(fit.amplitude == doctest::Approx(3.0).epsilon(1e-9));
}

TEST_CASE("fit_gaussian rejects non-peaked input") {
  const Axis a(16, 1.0);
  CHECK_THROWS_AS(fit_gaussian(RealField(Grid({a}), std::vector<double>(16, 0.0))), EstimationError);
  std::vector<double> bowl(16);
  for (std::size_t i = 0; i < 16; ++i) bowl[i] = std::exp(0.01 * a.coordinate(i) * a.coordinate(i));
  CHECK_THROWS_AS(fit_gaussian(RealField(Grid({a}), bowl)), EstimationError);
  std::vector<double> spike(16, 0.0);
  spike[8] = 1.0;
  CHECK_THROWS_AS(fit_gaussian(RealField(Grid({a}), spike)), EstimationError);
}

TEST_CASE("derive_sigmas") {
  const SpdcParams p{425e-6, 5e-3, 405e-9, 1.84};
  const auto s = derive_sigmas(p);
  CHECK(s.sigma_plus == doctest::Approx(300.52e-6).epsilon(1e-5));
  CHECK(s.sigma_minus == doctest::Approx(5.40e-6).epsilon(1e-3));
  auto p4 = p;
  p4.L *= 4.0;
  CHECK(derive_sigmas(p4).sigma_minus == doctest::Approx(2.0 * s.sigma_minus).epsilon(1e-15));
  for (double SpdcParams::*field : {&SpdcParams::w0, &SpdcParams::L, &SpdcParams::lambda_p, &SpdcParams::n_p}) {
    auto bad = p;
    bad.*field = 0.0;
    CHECK_THROWS_AS(derive_sigmas(bad), DomainError);
    bad.*field = -1.0;
    CHECK_THROWS_AS(derive_sigmas(bad), DomainError);
  }
}

TEST_CASE("schmidt_number") {
  CHECK(schmidt_number({2.0, 2.0}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(schmidt_number({7.0, 0.3}) == doctest::Approx(schmidt_number({0.3, 7.0})).epsilon(1e-15));
  // Measured projection widths 121.97 px and 4.59 px; σ+/σ− = 2 σ_m/σ_j.
  const double K = schmidt_number({2.0 * 121.97, 4.59});
  CHECK(K == doctest::Approx(706.0).epsilon(0.003));
  CHECK(std::abs(K - 707.0) <= 10.0);
  CHECK_THROWS_AS(schmidt_number({0.0, 1.0}), DomainError);
  CHECK_THROWS_AS(schmidt_number({1.0, 0.0}), DomainError);
}

TEST_CASE("sigmas_for_schmidt inverts schmidt_number") {
  for (double K : {1.0, 2.0, 625.5, 1600.0, 1e5}) {
    const auto s = sigmas_for_schmidt(K, 0.7);
    CHECK(s.sigma_minus == 0.7);
    CHECK(s.sigma_plus >= s.sigma_minus);
    CHECK(schmidt_number(s) == doctest::Approx(K).epsilon(1e-12));
  }
  CHECK(sigmas_for_schmidt(1600.0, 1.0).ratio() == doctest::Approx(79.99).epsilon(1e-4));
  CHECK_THROWS_AS(sigmas_for_schmidt(0.5, 1.0), DomainError);
}

TEST_CASE("build_two_photon_amplitude: 1D structural properties") {
  const SigmaPair s{20.0, 1.0};
  const auto amp = build_two_photon_amplitude(photon_line(256, 3.2), s);
  const std::size_t n = 256;
  double norm = 0.0;
  for (auto v : amp.psi.values) norm += std::norm(v);
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-13));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) REQUIRE(amp(i, j) == amp(j, i));
  }
  // Anti-correlation ridge: the largest |ψ| over k2 sits at k2 = −k1. The
  // continuous maximum is at −k1(σ+²−σ−²)/(σ+²+σ−²), within half a sample
  // of −k1 for |k1| < dk(σ+²+σ−²)/(4σ−²).
  const Axis& a = amp.photon.axis(0);
  const double reach = a.spacing * (s.sigma_plus * s.sigma_plus + 1.0) / 4.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (std::abs(a.coordinate(i)) >= reach) continue;
    std::size_t best = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(amp(i, j)) > std::abs(amp(i, best))) best = j;
    }
    REQUIRE(best == a.mirror(i));
  }
}

TEST_CASE("build_two_photon_amplitude: 2D is the separable product") {
  const SigmaPair s{2.5, 1.0};
  const Grid photon = Grid::plane(16, 0.35, 16, 0.35);
  const auto amp = build_two_photon_amplitude(photon, s);
  CHECK(amp.psi.grid.shape() == std::vector<std::size_t>{16, 16, 16, 16});
  const auto fx = gaussian_pair_factor(photon.axis(0), s);
  double norm = 0.0;
  double dev = 0.0;
  for_each_index(amp.psi.grid, [&](std::size_t flat, std::span<const std::size_t> i) {
    const complex v = amp.psi.values[flat];
    norm += std::norm(v);
    dev = std::max(dev, std::abs(v - fx[i[0] * 16 + i[2]] * fx[i[1] * 16 + i[3]]));
    const std::size_t swapped = ((i[2] * 16 + i[3]) * 16 + i[0]) * 16 + i[1];
    REQUIRE(std::abs(amp.psi.values[swapped] - v) <= 1e-12);
  });
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(dev < 1e-15);
}

TEST_CASE("build_two_photon_amplitude: preconditions") {
  try {
    build_two_photon_amplitude(photon_line(64, 2.0), {4.0, 1.0});
    FAIL("expected resolution error");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("sigma_minus") != std::string::npos);
  }
  try {
    build_two_photon_amplitude(photon_line(64, 5.0), {50.0, 1.0});
    FAIL("expected resolution error");
  } catch (const ResolutionError& e) {
    CHECK(std::string(e.what()).find("sigma_plus") != std::string::npos);
  }
  CHECK_THROWS_AS(build_two_photon_amplitude(Grid::plane(64, 0.1, 64, 0.1), {5.0, 1.0}, 1000),
                  ResourceError);
  CHECK_THROWS_AS(build_two_photon_amplitude(Grid({Axis(8, 1), Axis(8, 1), Axis(8, 1)}), {1, 1}),
                  ShapeError);
}

TEST_CASE("closed-form Schmidt number equals the squared per-axis SVD value") {
  struct Case {
    double ratio;
    std::size_t n;
  };
  for (Case c : {Case{5.0, 128}, Case{20.0, 256}, Case{50.0, 512}}) {
    const SigmaPair s{c.ratio, 1.0};
    const auto amp = build_two_photon_amplitude(photon_line(c.n, c.n == 512 ? 2.5 : 3.2), s);
    std::vector<double> real(amp.psi.size());
    for (std::size_t i = 0; i < real.size(); ++i) real[i] = amp.psi.values[i].real();
    const double k1d = oracle::svd_schmidt(real, c.n);
    CAPTURE(c.ratio);
    CHECK(k1d * k1d == doctest::Approx(schmidt_number(s)).epsilon(0.02));
  }
}

TEST_CASE("closed-form vs SVD Schmidt number on random resolved grids (property)") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ratio(1.5, 30.0);
  for (int t = 0; t < 5; ++t) {
    const SigmaPair s{ratio(rng), 1.0};
    // ≥ 8 samples per 1/σ+ and the marginal covered to 3.2/σ−
    const double dk = 1.0 / (8.0 * s.sigma_plus);
    const std::size_t n = 2 * static_cast<std::size_t>(std::ceil(3.2 / dk));
    const auto amp = build_two_photon_amplitude(Grid::line(n, dk), s);
    std::vector<double> real(amp.psi.size());
    for (std::size_t i = 0; i < real.size(); ++i) real[i] = amp.psi.values[i].real();
    const double k1d = oracle::svd_schmidt(real, n);
    CAPTURE(s.sigma_plus);
    CHECK(k1d * k1d == doctest::Approx(schmidt_number(s)).epsilon(0.02));
  }
}

TEST_CASE("sum projection and marginal widths") {
  SUBCASE("sum projection width 1/(√2 σ+)") {
    const SigmaPair s{10.0, 1.0};
    const auto rho = joint_probability(build_two_photon_amplitude(Grid::line(512, 0.01), s));
    const auto proj = sum_projection(rho);
    CHECK(proj.grid.axis(0).n == 1024);
    CHECK(sum(proj.values) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit_gaussian(proj).sigma == doctest::Approx(1.0 / (std::numbers::sqrt2 * 10.0)).epsilon(0.02));
  }
  SUBCASE("marginal width 1/(2√2 σ−) and width ratio at σ+/σ− = 50") {
    const SigmaPair s{50.0, 1.0};
    const auto rho = joint_probability(build_two_photon_amplitude(photon_line(512, 2.5), s));
    const auto m = marginal(rho);
    CHECK(sum(m.values) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit_gaussian(m).sigma == doctest::Approx(1.0 / (2.0 * std::numbers::sqrt2)).epsilon(0.02));
    const auto w = projection_widths(rho);
    CHECK(w.schmidt_estimate == doctest::Approx(schmidt_number(s)).epsilon(0.05));
  }
}

TEST_CASE("sum projection narrows monotonically with σ+ and tends to a single bin") {
  const Axis a(256, 0.02);
  double previous = INFINITY;
  for (double sp : {5.0, 10.0, 20.0, 40.0}) {
    const auto rho = joint_probability(build_two_photon_amplitude(Grid({a}), {sp, 1.0}));
    const double width = fit_gaussian(sum_projection(rho)).sigma;
    CHECK(width < previous);
    previous = width;
  }
  // Far beyond the sampling limit the ridge collapses onto s = 0.
  const auto f = gaussian_pair_factor(a, {40.0 / a.spacing, 1.0});
  RealField rho(Grid::pair(Grid({a})));
  for (std::size_t i = 0; i < f.size(); ++i) rho.values[i] = f[i] * f[i];
  const auto proj = sum_projection(rho);
  CHECK(proj.values[a.n] > 1.0 - 1e-12);
}

TEST_CASE("2D projections carry unit mass and per-axis widths") {
  const SigmaPair s{4.0, 1.0};
  const Grid photon = Grid::plane(32, 0.2, 32, 0.2);
  const auto rho = joint_probability(build_two_photon_amplitude(photon, s));
  const auto m = marginal(rho);
  const auto sp = sum_projection(rho);
  CHECK(sum(m.values) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sum(sp.values) == doctest::Approx(1.0).epsilon(1e-12));
  const auto fit = fit_gaussian_2d(m);
  const double expected = std::sqrt((1.0 / 16.0 + 1.0) / 8.0);  // √(var s + var d)/2
  CHECK(fit.sigma_x == doctest::Approx(expected).epsilon(0.01));
  CHECK(fit.sigma_y == doctest::Approx(expected).epsilon(0.01));
  CHECK(fit_gaussian_2d(sp).sigma == doctest::Approx(1.0 / (std::numbers::sqrt2 * 4.0)).epsilon(0.01));
}
