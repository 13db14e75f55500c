#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "biphoton/fourier.hpp"
#include "biphoton/grid.hpp"
#include "biphoton/grid_io.hpp"
#include "biphoton/stats.hpp"
#include "doctest.h"

using namespace biphoton;

namespace {

ComplexField random_field(const Grid& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  ComplexField f(grid);
  for (auto& v : f.values) v = {n01(rng), n01(rng)};
  return f;
}

double energy(const ComplexField& f) {
  double e = 0.0;
  for (auto v : f.values) e += std::norm(v);
  return e;
}

// 1/e^2 point of a sampled, centred, monotone-decaying intensity profile.
double half_width_e2(const RealField& intensity) {
  const Axis& a = intensity.grid.axis(0);
  const std::size_t c = a.n / 2;
  const double level = intensity.values[c] * std::exp(-2.0);
  for (std::size_t i = c; i + 1 < a.n; ++i) {
    if (intensity.values[i + 1] < level) {
      const double t = (intensity.values[i] - level) / (intensity.values[i] - intensity.values[i + 1]);
      return a.coordinate(i) + t * a.spacing;
    }
  }
  return NAN;
}

}  // namespace

TEST_CASE("axis construction and centring") {
  Axis a(8, 0.5);
  CHECK(a.coordinate(4) == 0.0);
  CHECK(a.coordinate(0) == -2.0);
  CHECK(a.mirror(0) == 0);
  CHECK(a.mirror(3) == 5);
  CHECK(a.coordinate(a.mirror(3)) == -a.coordinate(3));
  CHECK(a.reciprocal().spacing == doctest::Approx(2.0 * std::numbers::pi / 4.0));
  CHECK_THROWS_AS(Axis(7, 1.0), ShapeError);
  CHECK_THROWS_AS(Axis(8, 0.0), DomainError);
  CHECK_THROWS_AS(Axis(8, -1.0), DomainError);
}

TEST_CASE("fourier_transform: unit impulse gives flat magnitude 1/sqrt(n)") {
  ComplexField f(Grid::line(64, 0.1));
  f.values[32] = 1.0;
  const auto out = fourier_transform(f);
  for (auto v : out.values) CHECK(std::abs(v) == doctest::Approx(1.0 / 8.0).epsilon(1e-14));
  CHECK(out.grid.axis(0).spacing == doctest::Approx(2.0 * std::numbers::pi / (64 * 0.1)));
}

TEST_CASE("fourier_transform: Gaussian matches its analytic transform") {
  // exp(-k^2 s^2/2)  <->  (sqrt(2 pi)/s) exp(-x^2/(2 s^2)); intensity 1/e^2 at x = sqrt(2) s.
  const double s = 3.0;
  const std::size_t n = 512;
  const double dk = 0.02;  // n dk = 10.24 >> 1/s, dk << 1/s
  ComplexField f(Grid::line(n, dk));
  for (std::size_t i = 0; i < n; ++i) {
    const double k = f.grid.axis(0).coordinate(i);
    f.values[i] = std::exp(-k * k * s * s / 2.0);
  }
  const auto out = fourier_transform(f);
  const Axis& xa = out.grid.axis(0);
  const double scale = std::sqrt(2.0 * std::numbers::pi) / s / (std::sqrt(double(n)) * dk);
  RealField intensity(out.grid);
  double max_err = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double x = xa.coordinate(j);
    const double analytic = scale * std::exp(-x * x / (2.0 * s * s));
    max_err = std::max(max_err, std::abs(out.values[j] - analytic) / scale);
    intensity.values[j] = std::norm(out.values[j]);
  }
  CHECK(max_err < 1e-10);
  CHECK(half_width_e2(intensity) == doctest::Approx(std::sqrt(2.0) * s).epsilon(0.01));
}

TEST_CASE("fourier_transform: shift theorem for integer shifts") {
  const Grid grid = Grid::line(128, 0.05);
  const auto f = random_field(grid, 7);
  const double dx = grid.axis(0).reciprocal().spacing;
  const int m = 5;
  ComplexField g = f;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double k = grid.axis(0).coordinate(i);
    g.values[i] *= std::polar(1.0, k * m * dx);
  }
  const auto F = fourier_transform(f);
  const auto G = fourier_transform(g);
  double dev = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    dev = std::max(dev, std::abs(G.values[j] - F.values[(j + m) % grid.size()]));
  }
  CHECK(dev < 1e-10);
}

TEST_CASE("fourier_transform: Parseval and round trip on every rank") {
  for (const Grid& grid : {Grid::line(64, 0.3), Grid::plane(16, 0.2, 8, 0.7),
                           Grid({Axis(6, 1.0), Axis(4, 0.5), Axis(8, 0.25)}),
                           Grid({Axis(4, 1.0), Axis(6, 1.0), Axis(4, 2.0), Axis(2, 1.0)})}) {
    const auto f = random_field(grid, grid.size());
    const auto F = fourier_transform(f, +1);
    CHECK(std::abs(energy(F) - energy(f)) / energy(f) < 1e-10);
    const auto back = fourier_transform(F, -1);
    CHECK(back.grid.matches(grid, 1e-12));
    double dev = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) dev = std::max(dev, std::abs(back.values[i] - f.values[i]));
    CHECK(dev < 1e-10);
  }
}

TEST_CASE("fourier_transform: matches direct centred sum") {
  const Grid grid = Grid::line(6, 0.4);  // n/2 odd exercises the global sign
  const auto f = random_field(grid, 3);
  for (int sign : {+1, -1}) {
    const auto F = fourier_transform(f, sign);
    const Axis& ka = grid.axis(0);
    const Axis xa = ka.reciprocal();
    for (std::size_t j = 0; j < 6; ++j) {
      complex acc = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        acc += f.values[i] * std::polar(1.0, sign * ka.coordinate(i) * xa.coordinate(j));
      }
      CHECK(std::abs(F.values[j] - acc / std::sqrt(6.0)) < 1e-12);
    }
  }
}

TEST_CASE("FourierPlan agrees with fourier_transform") {
  const Grid grid = Grid::plane(32, 0.1, 16, 0.2);
  const auto f = random_field(grid, 11);
  FourierPlan plan(grid, +1);
  auto data = f.values;
  plan.execute(data);
  const auto ref = fourier_transform(f, +1);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(std::abs(data[i] - ref.values[i]) < 1e-12);
}

TEST_CASE("point_reflect symmetry cases") {
  const Grid grid = Grid::line(16, 0.5);
  RealField even(grid);
  RealField ramp(grid);
  for (std::size_t i = 0; i < 16; ++i) {
    const double k = grid.axis(0).coordinate(i);
    even.values[i] = std::cos(k);
    ramp.values[i] = k;
  }
  const auto re = point_reflect(even);
  for (std::size_t i = 1; i < 16; ++i) CHECK(re.values[i] == even.values[i]);
  const auto rr = point_reflect(ramp);
  for (std::size_t i = 1; i < 16; ++i) CHECK(rr.values[i] == -ramp.values[i]);
  CHECK(rr.values[0] == ramp.values[0]);  // unpaired edge maps to itself
}

TEST_CASE("point_reflect: involution and energy preservation (property)") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nx = 2 * (1 + rng() % 8);
    const std::size_t ny = 2 * (1 + rng() % 8);
    const Grid grid = Grid::plane(nx, 1.0, ny, 1.0);
    const auto f = random_field(grid, rng());
    const auto r = point_reflect(f);
    CHECK(std::abs(energy(r) - energy(f)) < 1e-12 * energy(f));
    const auto rr = point_reflect(r);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(rr.values[i] == f.values[i]);
  }
}

TEST_CASE("pearson_correlation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealField a(Grid::plane(8, 1.0, 8, 1.0));
  RealField b(a.grid);
  for (auto& v : a.values) v = u(rng);
  for (auto& v : b.values) v = u(rng);

  CHECK(pearson_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  RealField neg(a.grid);
  const double mx = max_value(a.values);
  for (std::size_t i = 0; i < a.size(); ++i) neg.values[i] = mx - a.values[i];
  CHECK(pearson_correlation(a, neg) == doctest::Approx(-1.0).epsilon(1e-14));

  // symmetric, and invariant under positive affine rescaling
  const double r = pearson_correlation(a, b);
  CHECK(pearson_correlation(b, a) == doctest::Approx(r).epsilon(1e-14));
  RealField scaled(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) scaled.values[i] = 3.5 * a.values[i] + 2.0;
  CHECK(pearson_correlation(scaled, b) == doctest::Approx(r).epsilon(1e-12));

  RealField flat(a.grid);
  for (auto& v : flat.values) v = 0.25;
  CHECK_THROWS_AS(pearson_correlation(flat, a), DomainError);
  CHECK_THROWS_AS(pearson_correlation(a, flat), DomainError);
  CHECK_THROWS_AS(pearson_correlation(a, RealField(Grid::line(4, 1.0))), ShapeError);
}

TEST_CASE("binary grid format round trip and cross sections") {
  const auto dir = std::filesystem::temp_directory_path() / "biphoton_test_grid";
  std::filesystem::create_directories(dir);
  const auto f = random_field(Grid::plane(8, 0.25, 4, 0.5), 9);
  write_field(dir / "c.bin", f, PayloadKind::Field, {1.5, -2.0});
  std::vector<double> meta;
  const auto g = read_complex_field(dir / "c.bin", &meta);
  CHECK(g.grid.matches(f.grid, 0.0));
  CHECK(g.values == f.values);
  CHECK(meta == std::vector<double>{1.5, -2.0});
  CHECK_THROWS_AS(read_real_field(dir / "c.bin"), IoError);

  RealField m(Grid::plane(4, 1.0, 4, 0.5));
  for (std::size_t i = 0; i < m.size(); ++i) m.values[i] = double(i);
  const auto cut = cross_section(m, 1, 0.5);  // y index 3
  REQUIRE(cut.size() == 4);
  CHECK(cut.values[0] == 3.0);
  CHECK(cut.values[2] == 11.0);
  CHECK_THROWS_AS(cross_section(m, 1, 100.0), GeometryError);
  write_profile_csv(dir / "cut.csv", cut);
  CHECK(std::filesystem::file_size(dir / "cut.csv") > 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("field construction rejects non-conforming shapes") {
  CHECK_THROWS_AS(RealField(Grid::line(4, 1.0), std::vector<double>(5)), ShapeError);
  CHECK_THROWS_AS(Grid::pair(Grid({Axis(2, 1), Axis(2, 1), Axis(2, 1)})), ShapeError);
  CHECK(Grid::pair(Grid::plane(4, 1.0, 6, 1.0)).shape() == std::vector<std::size_t>{4, 6, 4, 6});
}
