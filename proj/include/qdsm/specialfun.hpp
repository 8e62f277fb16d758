#pragma once

#include "qdsm/core.hpp"

namespace qdsm {

/// Hankel function of the first kind H0^(1)(x) for real x > 0.
///
/// Ascending series (Kahan-compensated) up to x = 13, large-argument
/// asymptotic expansion truncated at its smallest term above. Relative
/// accuracy is 1e-10 or better on (0, 1e4]; the asymptotic branch keeps
/// improving beyond that. Throws std::invalid_argument for x <= 0.
Complex hankel0_h1(double x);

/// Same contract for H1^(1)(x).
Complex hankel1_h1(double x);

/// Outgoing free-space fundamental solution of the Helmholtz equation:
///   dim 2:  (i/4) H0^(1)(k|x-z|)
///   dim 3:  exp(ik|x-z|) / (4*pi*|x-z|)
/// Throws std::invalid_argument for coincident points, k <= 0, or dim
/// outside {2,3}.
Complex fundamental_solution(const Point& x, const Point& z, double k, int dim);

/// Far-field normalization constant gamma_n(k):
///   dim 2:  exp(i*pi/4) / sqrt(8*k*pi)
///   dim 3:  1 / (4*pi)
/// Throws std::invalid_argument for k <= 0 or dim outside {2,3}.
Complex gamma_n(int dim, double k);

}  // namespace qdsm
