#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "qdsm/forward.hpp"
#include "qdsm/specialfun.hpp"

#include <cmath>

using namespace qdsm;

namespace {

double rel(Complex got, Complex want) {
  return std::abs(got - want) / std::abs(want);
}

// Closed form of the weak-scattering datum for a gaussian contrast
// A exp(-a|y-c|^2): the integral is a shifted gaussian transform,
//   k^2 gamma_n(k) A (pi/a)^{n/2} exp(-k^2/a) exp(2ik theta.c).
Complex gaussian_far_closed_form(int dim, Complex A, double a, const Point& c,
                                 const Point& theta, double k) {
  const double tc = dot(theta, c);
  return k * k * gamma_n(dim, k) * A * std::pow(pi / a, 0.5 * dim) *
         std::exp(-k * k / a) * cis(2.0 * k * tc);
}

}  // namespace

TEST_CASE("weak-scattering far datum matches the gaussian closed form, 2D") {
  const Complex A{1e-2, 0.0};
  const double a = 100.0;
  const Point c{0.05, -0.03, 0.0};
  auto g = make_grid(2, {-0.7, -0.7, 0}, {0.7, 0.7, 0}, {161, 161, 1});
  auto f = rasterize(gaussian_bump(2, A, c, a), g);
  const Point t1{1.0, 0.0, 0.0};
  const Point t2{0.6, 0.8, 0.0};
  for (double k : {1.0, 5.0, 20.0}) {
    for (const Point& th : {t1, t2}) {
      CAPTURE(k);
      const Complex got = born_far_backscatter(f, th, k);
      const Complex want = gaussian_far_closed_form(2, A, a, c, th, k);
      CHECK(rel(got, want) <= 1e-6);
    }
  }
}

TEST_CASE("weak-scattering far datum matches the gaussian closed form, 3D") {
  const Complex A{1e-2, 2e-3};
  const double a = 400.0;
  const Point c{0.05, -0.03, 0.02};
  auto g = make_grid(3, {-0.35, -0.35, -0.35}, {0.35, 0.35, 0.35},
                     {81, 81, 81});
  auto f = rasterize(gaussian_bump(3, A, c, a), g);
  const Point t1{0.0, 0.0, 1.0};
  const Point t2{2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0};
  for (double k : {1.0, 5.0, 10.0}) {
    for (const Point& th : {t1, t2}) {
      CAPTURE(k);
      const Complex got = born_far_backscatter(f, th, k);
      const Complex want = gaussian_far_closed_form(3, A, a, c, th, k);
      CHECK(rel(got, want) <= 1e-6);
    }
  }
}

TEST_CASE("near-field datum decays with the source distance") {
  const double a = 400.0, k = 5.0;
  auto g2 = make_grid(2, {-0.35, -0.35, 0}, {0.35, 0.35, 0}, {121, 121, 1});
  auto f2 = rasterize(gaussian_bump(2, {1e-2, 0.0}, {0, 0, 0}, a), g2);
  const double m2a = std::abs(born_near_backscatter(f2, {100.0, 0, 0}, k));
  const double m2b = std::abs(born_near_backscatter(f2, {1000.0, 0, 0}, k));
  CHECK(m2a / m2b >= 8.0);   // |Phi^2| ~ 1/R in 2D
  CHECK(m2a / m2b <= 12.0);

  auto g3 = make_grid(3, {-0.35, -0.35, -0.35}, {0.35, 0.35, 0.35},
                      {61, 61, 61});
  auto f3 = rasterize(gaussian_bump(3, {1e-2, 0.0}, {0, 0, 0}, a), g3);
  const double m3a = std::abs(born_near_backscatter(f3, {0, 0, 100.0}, k));
  const double m3b = std::abs(born_near_backscatter(f3, {0, 0, 1000.0}, k));
  CHECK(m3a / m3b >= 80.0);  // |Phi^2| ~ 1/R^2 in 3D
  CHECK(m3a / m3b <= 120.0);
}

TEST_CASE("raster quadrature converges fast under refinement") {
  auto ph = complex_mountain_2d();
  const Point th{0.6, 0.8, 0.0};
  const double k = 8.0;
  auto datum = [&](int n) {
    auto g = make_grid(2, {-1.1, -1.1, 0}, {1.1, 1.1, 0}, {n, n, 1});
    return born_far_backscatter(rasterize(ph, g), th, k);
  };
  const Complex s41 = datum(41), s81 = datum(81), s161 = datum(161);
  const double d1 = std::abs(s41 - s161);
  const double d2 = std::abs(s81 - s161);
  REQUIRE(d1 > 1e-12);
  CHECK(d2 < d1 / 3.0);
  CHECK(d2 <= 1e-8 * std::abs(s161));
}

TEST_CASE("measurement synthesis matches the per-entry kernels") {
  auto ph = complex_mountain_2d();
  auto grid = make_grid(2, {-1.1, -1.1, 0}, {1.1, 1.1, 0}, {61, 61, 1});
  auto dirs = uniform_circle_directions(8);
  auto ks = make_wavenumbers(1.0, 9.0, 5);

  SUBCASE("far geometry") {
    const MeasurementGeometry geom{MeasurementGeometry::Kind::Far, 0.0};
    auto ref = synthesize(ph, geom, dirs, ks, grid, ForwardModel::Born,
                          Exec::Reference);
    auto fast = synthesize(ph, geom, dirs, ks, grid, ForwardModel::Born,
                           Exec::Fast);
    CHECK(ref.dim == 2);
    CHECK(ref.data.size() == 8 * 5);
    CHECK(ref.noise_delta == 0.0);
    auto f = rasterize(ph, grid);
    for (std::size_t j = 0; j < ref.n_dirs(); ++j)
      for (std::size_t m = 0; m < ref.n_k(); ++m) {
        const Complex direct =
            born_far_backscatter(f, dirs.dirs[j], ks.values[m]);
        CHECK(ref.at(j, m) == direct);  // reference path is the direct sum
        CHECK(std::abs(fast.at(j, m) - direct) <= 1e-12 * std::abs(direct));
      }
  }

  SUBCASE("near geometry") {
    const MeasurementGeometry geom{MeasurementGeometry::Kind::Near, 5.0};
    auto ref = synthesize(ph, geom, dirs, ks, grid, ForwardModel::Born,
                          Exec::Reference);
    auto fast = synthesize(ph, geom, dirs, ks, grid, ForwardModel::Born,
                           Exec::Fast);
    auto f = rasterize(ph, grid);
    for (std::size_t j = 0; j < ref.n_dirs(); ++j)
      for (std::size_t m = 0; m < ref.n_k(); ++m) {
        const Point x{5.0 * dirs.dirs[j][0], 5.0 * dirs.dirs[j][1], 0.0};
        CHECK(ref.at(j, m) == born_near_backscatter(f, x, ks.values[m]));
        CHECK(fast.at(j, m) == ref.at(j, m));
      }
    CHECK(ref.geometry.radius == 5.0);
  }
}

TEST_CASE("volume integral equation solves and reduces to weak scattering") {
  const double a = 100.0, k = 5.0;
  auto g = make_grid(2, {-0.35, -0.35, 0}, {0.35, 0.35, 0}, {32, 32, 1});

  SUBCASE("plane-wave solve meets the residual postcondition") {
    auto f = rasterize(gaussian_bump(2, {0.04, 0.0}, {0, 0, 0}, a), g);
    Incident inc;
    inc.kind = Incident::Kind::PlaneWave;
    inc.dir_or_src = {1.0, 0.0, 0.0};
    auto sol = ls_total_field(f, inc, k);
    CHECK(sol.residual <= 1e-9);
    CHECK(sol.iterations > 0);
    CHECK(sol.total.grid.same_layout(g));
    // the total field genuinely differs from the incident field
    double dev = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
      dev = std::max(dev, std::abs(sol.total.values[i] -
                                   cis(k * g.point(i)[0])));
    CHECK(dev > 1e-4);
  }

  SUBCASE("full model approaches the weak-scattering datum as q -> 0") {
    auto f = rasterize(gaussian_bump(2, {1e-6, 0.0}, {0, 0, 0}, a), g);
    const MeasurementGeometry far{MeasurementGeometry::Kind::Far, 0.0};
    const Point th{1.0, 0.0, 0.0};
    const Complex full = ls_backscatter(f, far, th, k);
    const Complex weak = born_far_backscatter(f, th, k);
    CHECK(rel(full, weak) <= 1e-4);

    const MeasurementGeometry near{MeasurementGeometry::Kind::Near, 10.0};
    const Complex full_n = ls_backscatter(f, near, th, k);
    const Complex weak_n = born_near_backscatter(f, {10.0, 0, 0}, k);
    CHECK(rel(full_n, weak_n) <= 1e-4);
  }

  SUBCASE("full-model synthesis is consistent with the single-datum path") {
    // decay 400 keeps the support radius (0.29) inside the grid
    auto ph = gaussian_bump(2, {0.02, 0.0}, {0, 0, 0}, 400.0);
    auto dirs = uniform_circle_directions(3);
    auto ks = make_wavenumbers(2.0, 4.0, 2);
    const MeasurementGeometry geom{MeasurementGeometry::Kind::Far, 0.0};
    auto ms = synthesize(ph, geom, dirs, ks, g, ForwardModel::LippmannSchwinger);
    auto f = rasterize(ph, g);
    for (std::size_t j = 0; j < ms.n_dirs(); ++j)
      for (std::size_t m = 0; m < ms.n_k(); ++m) {
        const Complex direct =
            ls_backscatter(f, geom, dirs.dirs[j], ks.values[m]);
        CHECK(std::abs(ms.at(j, m) - direct) <= 1e-10 * std::abs(direct));
      }
  }
}

TEST_CASE("noise calibration is exact and reproducible") {
  auto ph = gaussian_bump(2, {1e-2, 0.0}, {0, 0, 0}, 100.0);
  auto g = make_grid(2, {-0.7, -0.7, 0}, {0.7, 0.7, 0}, {33, 33, 1});
  auto ms = synthesize(ph, {MeasurementGeometry::Kind::Far, 0.0},
                       uniform_circle_directions(16),
                       make_wavenumbers(1.0, 11.0, 11), g);

  auto frob = [](const std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s);
  };

  auto noisy = add_noise(ms, 0.05, 7);
  std::vector<Complex> diff(ms.data.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = noisy.data[i] - ms.data[i];
  CHECK(std::abs(frob(diff) / frob(ms.data) - 0.05) <= 1e-12);
  CHECK(noisy.noise_delta == 0.05);
  CHECK(noisy.seed == 7);

  // bit-identical at zero level
  auto clean = add_noise(ms, 0.0, 99);
  for (std::size_t i = 0; i < ms.data.size(); ++i)
    CHECK(clean.data[i] == ms.data[i]);

  // seeded reproducibility, seed sensitivity
  auto again = add_noise(ms, 0.05, 7);
  for (std::size_t i = 0; i < ms.data.size(); ++i)
    CHECK(again.data[i] == noisy.data[i]);
  auto other = add_noise(ms, 0.05, 8);
  double dev = 0.0;
  for (std::size_t i = 0; i < ms.data.size(); ++i)
    dev = std::max(dev, std::abs(other.data[i] - noisy.data[i]));
  CHECK(dev > 0.0);

  CHECK_THROWS_AS(add_noise(ms, -0.1, 1), std::invalid_argument);
}

TEST_CASE("forward domain errors") {
  auto g = make_grid(2, {-0.35, -0.35, 0}, {0.35, 0.35, 0}, {33, 33, 1});
  auto f = rasterize(gaussian_bump(2, {1e-2, 0.0}, {0, 0, 0}, 400.0), g);

  // receiver inside the raster's bounding ball
  CHECK_THROWS_AS(born_near_backscatter(f, {0.4, 0.0, 0.0}, 2.0),
                  std::invalid_argument);
  CHECK_NOTHROW(born_near_backscatter(f, {0.6, 0.0, 0.0}, 2.0));

  // direction must be unit length and planar in 2D
  CHECK_THROWS_AS(born_far_backscatter(f, {1.0, 1.0, 0.0}, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(born_far_backscatter(f, {0.0, 0.0, 1.0}, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(born_far_backscatter(f, {1.0, 0.0, 0.0}, 0.0),
                  std::invalid_argument);

  auto dirs = uniform_circle_directions(4);
  auto ks = make_wavenumbers(1.0, 5.0, 3);

  // grid must cover the phantom support box
  auto wide = gaussian_bump(2, {1e-2, 0.0}, {0, 0, 0}, 100.0);  // radius 0.57
  CHECK_THROWS_AS(synthesize(wide, {MeasurementGeometry::Kind::Far, 0.0},
                             dirs, ks, g),
                  std::invalid_argument);

  // near radius must clear the support ball
  auto ph = complex_mountain_2d();  // support radius 1.06
  auto big = make_grid(2, {-1.1, -1.1, 0}, {1.1, 1.1, 0}, {33, 33, 1});
  CHECK_THROWS_AS(synthesize(ph, {MeasurementGeometry::Kind::Near, 1.0},
                             dirs, ks, big),
                  std::invalid_argument);
  CHECK_NOTHROW(synthesize(ph, {MeasurementGeometry::Kind::Near, 5.0},
                           dirs, ks, big));

  // dimension mismatch between phantom and grid
  CHECK_THROWS_AS(synthesize(cross_3d(false),
                             {MeasurementGeometry::Kind::Far, 0.0}, dirs, ks,
                             big),
                  std::invalid_argument);
}
