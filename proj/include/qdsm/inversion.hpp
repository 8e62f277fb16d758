#pragma once

#include "qdsm/forward.hpp"

namespace qdsm {

/// Multi-frequency sampling indicator from far-field backscattering data,
/// evaluated on a grid of sampling points. For admissible data the result
/// approximates the contrast itself (up to band-limitation error):
///
///   dim 2:  I(z) = (2(1-i) dtheta dk / pi^{3/2})
///                  * sum_m k_m^{-1/2} sum_j u[j][m] exp(-2i k_m theta_j.z)
///   dim 3:  I(z) = (4 dtheta dk / pi^2)
///                  * sum_m       sum_j u[j][m] exp(-2i k_m theta_j.z)
///
/// Reference evaluates one exponential per term with the m-outer, j-inner
/// order; Fast runs the wavenumber progression as a phase recurrence per
/// direction and parallelizes over sampling points (agreement 1e-12).
/// Throws std::invalid_argument on geometry kind or dimension mismatch.
ComplexField indicator_far(const MeasurementSet& ms, const SamplingGrid& grid,
                           Exec exec = Exec::Fast);

/// Same role for near-field (coincident source/receiver on the circle or
/// sphere of radius R) data:
///
///   dim 2:  I(z) = (-8i R dtheta dk / pi)
///                  * sum_m sum_j u[j][m] exp(2i k_m (theta_j.z - R))
///   dim 3:  I(z) = (16 R^2 dtheta dk / pi)
///                  * sum_m sum_j u[j][m] exp(2i k_m (theta_j.z - R))
ComplexField indicator_near(const MeasurementSet& ms, const SamplingGrid& grid,
                            Exec exec = Exec::Fast);

/// Adaptive quadrature of the continuous band-limited indicator
///
///   dim 2:  (1/pi^2)  int_{k_min}^{k_max} gamma_2(k)^{-1} k^{-1}
///              int_{S^1} u(theta,k) exp(-2ik theta.z) ds(theta) dk
///   dim 3:  (1/pi^3)  int_{k_min}^{k_max} gamma_3^{-1}
///              int_{S^2} u(theta,k) exp(-2ik theta.z) ds(theta) dk
///
/// for a caller-supplied far-field closure u(theta, k). The sphere/circle
/// integral is refined by doubling until successive levels agree to 1e-10
/// relative; the k integral uses adaptive Simpson targeting 1e-8 relative
/// accuracy. Throws numeric_error when either refinement fails to converge.
Complex continuous_indicator_oracle(
    const std::function<Complex(const Point&, double)>& farfield,
    const Point& z, double k_min, double k_max, int dim);

}  // namespace qdsm
