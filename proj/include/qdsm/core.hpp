#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace qdsm {

using Complex = std::complex<double>;

/// Cartesian point. 2D data lives in the first two entries with p[2] == 0.
using Point = std::array<double, 3>;

inline constexpr double pi = 3.14159265358979323846;

/// Kernel execution policy.
///
/// Reference runs the plain direct sum in a fixed textbook order (outer sum
/// over wavenumbers, inner sum over directions, one complex exponential per
/// term). Fast replaces repeated exponentials of arithmetic phase sequences
/// by a two-factor recurrence and parallelizes the outer loop with OpenMP.
/// Fast must agree with Reference to a relative 1e-12 on every output; the
/// benchmark and the unit tests hold it to that.
enum class Exec { Reference, Fast };

/// Raised for invalid or inconsistent run configurations. Mapped to CLI
/// exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative solver or adaptive quadrature cannot reach its
/// accuracy target. Mapped to CLI exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot(const Point& a, const Point& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm2(const Point& a) { return std::sqrt(dot(a, a)); }

inline double dist(const Point& a, const Point& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// cos(t) + i sin(t) without going through exp().
inline Complex cis(double t) { return {std::cos(t), std::sin(t)}; }

}  // namespace qdsm
