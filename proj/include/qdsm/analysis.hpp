#pragma once

#include <optional>

#include "qdsm/forward.hpp"

namespace qdsm {

/// Relative errors of a reconstruction against ground truth on the same
/// grid layout (plain vector norms, no cell weights). When the truth is
/// identically zero, absolute is set and the fields carry absolute norms.
struct ErrorReport {
  double rel_l2 = 0.0;
  double rel_linf = 0.0;
  bool absolute = false;
  std::optional<double> truncation;  // a-priori band-limitation bound, if set
  std::string metadata;
};

ErrorReport rel_errors(const ComplexField& reconstruction,
                       const ComplexField& truth);

/// Real part only; the complex overload is the primary contract.
ErrorReport rel_errors_real(const ComplexField& reconstruction,
                            const ComplexField& truth);

struct H2Norm {
  double value = 0.0;
  /// Set when |f| on the grid boundary exceeds 1e-8 of max |f|: the
  /// compact-support assumption behind the padded DFT is then doubtful.
  bool boundary_warning = false;
};

/// Sobolev H^2 norm with the (2*pi)^{-n} Fourier-transform prefactor:
///   ||f|| = (2*pi)^{-n} ( int (1+|xi|^2)^2 |f_hat(xi)|^2 dxi )^{1/2},
/// computed from a zero-padded DFT of the raster (pad_factor >= 2 extends
/// each axis to pad_factor*(n-1)+1 points).
H2Norm h2_norm(const ComplexField& f, int pad_factor = 2);

/// Cell-volume-weighted L^2 norm of the raster.
double l2_norm(const ComplexField& f);

/// A-priori bound on the band-limitation error of the indicator:
///   dim 2:  sqrt(pi) (k_max^{-1}   * h2 + k_min           * l2)
///   dim 3:  2 sqrt(pi) (k_max^{-1/2} * h2 + (sqrt(3)/3) k_min^{3/2} * l2)
/// where h2 and l2 are the H^2 and L^2 norms of the contrast.
double truncation_bound(double h2, double l2, double k_min, double k_max,
                        int dim);

/// Mass and first moment of the contrast recovered from low-frequency
/// far-field backscattering data: for each direction the reduced data
/// u / (k^2 gamma_n(k)) is fitted linearly in k over the probe wavenumbers;
/// the intercepts average to the mass and the slopes solve a least-squares
/// system for the first moment (slope(theta) ~ 2i theta . M).
struct MomentEstimate {
  int dim = 2;
  Complex mass{};
  std::array<Complex, 3> first_moment{};
};

/// Throws std::invalid_argument with fewer than two probe wavenumbers or
/// fewer directions than the spatial dimension.
MomentEstimate low_freq_moments(
    const std::function<Complex(const Point&, double)>& farfield,
    const DirectionSet& dirs, const std::vector<double>& k_probe);

/// Quadrature check of the moment identities for the affine density
/// r(y) = alpha.y + c on the ball of radius R:
///   int_B r dy            = c |B|
///   int_B r (theta.y) dy  = (alpha.theta) * int_B y_1^2 dy
/// for a handful of seeded random directions theta. quad_grid must cover
/// the ball (std::invalid_argument otherwise); discrepancies are limited by
/// the staircase error of the ball indicator on that grid.
struct MomentCheckRow {
  Point theta{};
  double lhs = 0.0;
  double rhs = 0.0;
};

struct MomentCheck {
  double integral_r = 0.0;   // quadrature of r over the ball
  double predicted_r = 0.0;  // c * |B|
  double second_moment = 0.0;  // analytic int_B y_1^2 dy
  std::vector<MomentCheckRow> rows;
  double max_discrepancy = 0.0;  // max |lhs - rhs| over rows
};

MomentCheck uniqueness_moment_check(const Point& alpha, double c, double R,
                                    const SamplingGrid& quad_grid,
                                    std::uint64_t seed = 1);

}  // namespace qdsm
