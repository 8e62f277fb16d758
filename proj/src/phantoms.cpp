#include "qdsm/phantoms.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qdsm {

namespace {

// Envelope level below which smooth phantoms are clamped to exact zero,
// making the advertised compact support literal.
constexpr double support_clamp = 1e-14;

double sq(double v) { return v * v; }

// Half-open interval test with a tiny inward nudge so that points produced
// by grid arithmetic that lands within one rounding error of a box face are
// classified as if the arithmetic were exact.
bool in_box_half_open(double v, double lo, double hi) {
  return v >= lo - 1e-13 && v < hi - 1e-13;
}

}  // namespace

ContrastPhantom gaussian_bump(int dim, Complex amplitude, const Point& center,
                              double decay) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("gaussian_bump: dim must be 2 or 3");
  if (!(decay > 0.0))
    throw std::invalid_argument("gaussian_bump: decay must be positive");
  if (dim == 2 && center[2] != 0.0)
    throw std::invalid_argument("gaussian_bump: 2D center must have z = 0");
  ContrastPhantom ph;
  ph.dim = dim;
  ph.label = "gaussian_bump";
  ph.notes = "amplitude*(exp(-decay*|x-center|^2)), clamped at 1e-14";
  const double r_cut2 = -std::log(support_clamp) / decay;
  ph.support_radius = norm2(center) + std::sqrt(r_cut2);
  for (int d = 0; d < 3; ++d) ph.support_box[d] = ph.support_radius;
  ph.eval = [amplitude, center, decay, r_cut2](const Point& x) -> Complex {
    const double dx = x[0] - center[0], dy = x[1] - center[1],
                 dz = x[2] - center[2];
    const double d2 = dx * dx + dy * dy + dz * dz;
    if (d2 > r_cut2) return {0.0, 0.0};
    return amplitude * std::exp(-decay * d2);
  };
  return ph;
}

ContrastPhantom complex_mountain_2d() {
  ContrastPhantom ph;
  ph.dim = 2;
  ph.label = "complex_mountain_2d";
  ph.notes = "two-peak real part, four-hump absorption";
  ph.support_radius = 1.06;
  ph.support_box = {1.06, 1.06, 0.0};
  const double rr = ph.support_radius;
  ph.eval = [rr](const Point& p) -> Complex {
    const double x1 = p[0], x2 = p[1];
    if (x1 * x1 + x2 * x2 > rr * rr) return {0.0, 0.0};
    const double re =
        1.1e-2 * std::exp(-200.0 * (sq(x1 - 0.01) + sq(x2 - 0.12))) -
        (x2 * x2 - x1 * x1) * std::exp(-90.0 * (x1 * x1 + x2 * x2));
    const double im =
        1e-2 * (0.9 * std::exp(-100.0 * (sq(x1 - 0.2) + sq(x2 - 0.2))) +
                1.1 * std::exp(-250.0 * (sq(x1 + 0.15) + sq(x2 - 0.15))) +
                1.3 * std::exp(-150.0 * (sq(x1 + 0.2) + 2.0 * sq(x2 + 0.2))) +
                std::exp(-50.0 * (sq(x1 - 0.25) + x2 * x2)));
    return {re, im};
  };
  return ph;
}

ContrastPhantom cross_3d(bool hollow) {
  ContrastPhantom ph;
  ph.dim = 3;
  ph.label = hollow ? "cross_3d_hollow" : "cross_3d";
  ph.notes =
      "three orthogonal half-open bars, section width 0.125, long axis "
      "[-0.1875, 0.25)";
  ph.support_radius = 0.2652;  // bar end corner: sqrt(0.25^2 + 2*0.0625^2)
  ph.support_box = {0.25, 0.25, 0.25};
  const double w = 0.0625, a = -0.1875, b = 0.25;
  ph.eval = [hollow, w, a, b](const Point& p) -> Complex {
    const bool s1 = in_box_half_open(p[1], -w, w) &&
                    in_box_half_open(p[2], -w, w);
    const bool s2 = in_box_half_open(p[0], -w, w) &&
                    in_box_half_open(p[2], -w, w);
    const bool s3 = in_box_half_open(p[0], -w, w) &&
                    in_box_half_open(p[1], -w, w);
    const bool o1 = s1 && in_box_half_open(p[0], a, b);  // bar along x1
    const bool o2 = s2 && in_box_half_open(p[1], a, b);  // bar along x2
    const bool o3 = s3 && in_box_half_open(p[2], a, b);  // bar along x3
    double v = 0.0;
    if (o1 && !o2) v += 8e-3;
    if (o2 && !o1) v += 6e-3;
    if (o3 && !(hollow && o1 && o2)) v += 1e-2;
    return {v, 0.0};
  };
  return ph;
}

ContrastPhantom smooth_3d(double scale) {
  ContrastPhantom ph;
  ph.dim = 3;
  ph.label = "smooth_3d";
  ph.notes =
      "polynomially modulated gaussians; linear term of the second real "
      "summand reads x1/5";
  ph.support_radius = 0.55;
  ph.support_box = {0.55, 0.55, 0.55};
  const double rr = ph.support_radius;
  ph.eval = [scale, rr](const Point& p) -> Complex {
    const double x1 = p[0], x2 = p[1], x3 = p[2];
    if (x1 * x1 + x2 * x2 + x3 * x3 > rr * rr) return {0.0, 0.0};
    const double re =
        3.0 * sq(1.0 - x1) *
            std::exp(-500.0 * x1 * x1 - 800.0 * sq(x2 - 0.1) -
                     600.0 * x3 * x3) -
        10.0 * (x1 / 5.0 - x1 * x1 * x1 - std::pow(x2, 5)) *
            std::exp(-400.0 * sq(x1 - 0.1) - 300.0 * x2 * x2 -
                     500.0 * x3 * x3) -
        (1.0 / 3.0) * std::exp(-450.0 * sq(x1 - 0.1) - 600.0 * x2 * x2 -
                               700.0 * x3 * x3);
    const double im =
        3.0 * std::exp(-300.0 * x1 * x1 - 200.0 * sq(x2 + 0.05) -
                       350.0 * x3 * x3) +
        5.0 * std::exp(-180.0 * sq(x1 - 0.1) - 350.0 * x2 * x2 -
                       250.0 * x3 * x3);
    return {scale * re, scale * im};
  };
  return ph;
}

ContrastPhantom shepp_logan_2d(double scale) {
  // Classic ten-ellipse intensity table: value, half-axes a/b, center,
  // rotation (degrees). Coordinates are divided by the stretch so the
  // phantom occupies the disk of radius 0.92 * stretch.
  struct Ellipse {
    double v, a, b, x0, y0, phi_deg;
  };
  static const Ellipse table[] = {
      {2.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.98, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
      {-0.02, 0.11, 0.31, 0.22, 0.0, -18.0},
      {-0.02, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.01, 0.21, 0.25, 0.0, 0.35, 0.0},
      {0.01, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.01, 0.046, 0.046, 0.0, -0.1, 0.0},
      {0.01, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.01, 0.023, 0.023, 0.0, -0.606, 0.0},
      {0.01, 0.023, 0.046, 0.06, -0.605, 0.0},
  };
  const double stretch = 0.7;
  ContrastPhantom ph;
  ph.dim = 2;
  ph.label = "shepp_logan_2d";
  ph.notes = "ten-ellipse head phantom, stretch 0.7";
  ph.support_radius = 0.92 * stretch;
  ph.support_box = {0.69 * stretch, 0.92 * stretch, 0.0};
  ph.eval = [scale, stretch](const Point& p) -> Complex {
    const double px = p[0] / stretch, py = p[1] / stretch;
    double v = 0.0;
    for (const auto& e : table) {
      const double ang = e.phi_deg * pi / 180.0;
      const double c = std::cos(ang), s = std::sin(ang);
      const double dx = px - e.x0, dy = py - e.y0;
      const double u = c * dx + s * dy;
      const double w = -s * dx + c * dy;
      if (sq(u / e.a) + sq(w / e.b) <= 1.0) v += e.v;
    }
    return {scale * v, 0.0};
  };
  return ph;
}

ContrastPhantom blocks_sparse_2d() {
  ContrastPhantom ph;
  ph.dim = 2;
  ph.label = "blocks_sparse_2d";
  ph.notes =
      "L-corner with linear ramp, disk, three squares, thin bar; half-open "
      "boxes";
  ph.support_radius = std::sqrt(2.0) * 0.55;
  ph.support_box = {0.7, 0.7, 0.0};
  ph.eval = [](const Point& p) -> Complex {
    const double x = p[0], y = p[1];
    double v = 0.0;
    const bool l_horiz = in_box_half_open(x, -0.55, -0.15) &&
                         in_box_half_open(y, -0.55, -0.45);
    const bool l_vert = in_box_half_open(x, -0.55, -0.45) &&
                        in_box_half_open(y, -0.45, -0.15);
    if (l_horiz || l_vert) v += 1e-2 * (0.5 + (x + y + 1.1) / 1.6);
    if (sq(x - 0.35) + sq(y - 0.35) <= sq(0.15)) v += 1e-2;
    const bool sq1 = in_box_half_open(x, 0.25, 0.35) &&
                     in_box_half_open(y, -0.55, -0.45);
    const bool sq2 = in_box_half_open(x, 0.45, 0.55) &&
                     in_box_half_open(y, -0.55, -0.45);
    const bool sq3 = in_box_half_open(x, 0.35, 0.45) &&
                     in_box_half_open(y, -0.35, -0.25);
    if (sq1 || sq2 || sq3) v += 8e-3;
    if (in_box_half_open(x, 0.25, 0.55) && in_box_half_open(y, -0.32, -0.29))
      v += 6e-3;
    return {v, 0.0};
  };
  return ph;
}

ComplexField rasterize(const ContrastPhantom& ph, const SamplingGrid& grid,
                       Exec exec) {
  if (ph.dim != grid.dim)
    throw std::invalid_argument("rasterize: phantom/grid dimension mismatch");
  ComplexField f(grid);
  const std::int64_t n = std::int64_t(grid.size());
  if (exec == Exec::Fast) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
      f.values[std::size_t(i)] = ph.eval(grid.point(std::size_t(i)));
  } else {
    for (std::int64_t i = 0; i < n; ++i)
      f.values[std::size_t(i)] = ph.eval(grid.point(std::size_t(i)));
  }
  return f;
}

}  // namespace qdsm
