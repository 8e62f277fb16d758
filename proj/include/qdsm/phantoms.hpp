#pragma once

#include <functional>
#include <string>

#include "qdsm/field.hpp"

namespace qdsm {

/// A synthetic complex contrast q with known support. eval returns exactly
/// zero outside the ball of radius support_radius about the origin, and
/// support_box gives per-axis half-extents of an axis-aligned bounding box
/// of the support (tighter than the ball for box-shaped scatterers).
/// Admissible contrasts satisfy Re(q) > -1 and Im(q) >= 0 everywhere.
struct ContrastPhantom {
  int dim = 2;
  std::string label;
  std::string notes;  // free-text record of the parameter choices
  double support_radius = 0.0;
  std::array<double, 3> support_box{};
  std::function<Complex(const Point&)> eval;
};

/// Gaussian bump amplitude * exp(-decay * |x - center|^2), clamped to zero
/// where the envelope drops below 1e-14.
ContrastPhantom gaussian_bump(int dim, Complex amplitude, const Point& center,
                              double decay);

/// Smooth 2D contrast: a two-peak real part (one bump plus a saddle-shaped
/// term) and an absorption made of four positive Gaussian humps.
ContrastPhantom complex_mountain_2d();

/// Three orthogonal square-section bars through the origin, each a half-open
/// box of section 0.125 x 0.125 and length 0.4375 (long axis spanning
/// [-0.1875, 0.25)). Bar values 8e-3 (x1 bar, minus the central cube),
/// 6e-3 (x2 bar, minus the central cube) and 1e-2 (x3 bar). With hollow set,
/// the central cube is removed from the x3 bar, leaving a void at the origin.
ContrastPhantom cross_3d(bool hollow);

/// Smooth 3D contrast built from polynomially modulated Gaussians, scaled by
/// the given factor.
ContrastPhantom smooth_3d(double scale);

/// Ten-ellipse head phantom (classic intensity table), coordinates divided
/// by 0.7 so the outer ellipse fits the unit disk scaled by 0.7, values
/// multiplied by scale.
ContrastPhantom shepp_logan_2d(double scale);

/// Piecewise-constant 2D scene: an L-shaped corner with a linear ramp,
/// a disk, three small squares, and a thin bar. All boxes half-open.
ContrastPhantom blocks_sparse_2d();

/// Pointwise samples of the phantom on the grid (no cell averaging).
/// Throws std::invalid_argument when the grid dimension does not match.
ComplexField rasterize(const ContrastPhantom& ph, const SamplingGrid& grid,
                       Exec exec = Exec::Fast);

}  // namespace qdsm
