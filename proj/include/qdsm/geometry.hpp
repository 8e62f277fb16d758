#pragma once

#include <cstddef>
#include <vector>

#include "qdsm/core.hpp"

namespace qdsm {

/// Uniform rectangular grid with both endpoints included on every axis.
/// Values attached to the grid are flattened row-major: axis 0 slowest,
/// last axis fastest.
struct SamplingGrid {
  int dim = 2;
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};
  std::array<int, 3> counts{};  // counts[d] >= 2 for d < dim, exactly 1 above

  std::size_t size() const {
    return std::size_t(counts[0]) * std::size_t(counts[1]) *
           std::size_t(counts[2]);
  }

  double spacing(int axis) const {
    return counts[axis] > 1 ? (hi[axis] - lo[axis]) / (counts[axis] - 1) : 0.0;
  }

  /// i-th coordinate along an axis. Endpoints are returned exactly as lo/hi;
  /// interior points use lo + (hi-lo)*(i/(n-1)), which is bit-reproducible.
  double coord(int axis, int i) const;

  Point point(std::size_t flat) const;

  /// Product of the axis spacings: the weight of the uniform-grid quadrature.
  double cell_volume() const;

  bool same_layout(const SamplingGrid& other) const;
};

/// Builds and validates a grid. Throws std::invalid_argument for dim outside
/// {2,3}, counts < 2 on an active axis, or hi <= lo.
SamplingGrid make_grid(int dim, const std::array<double, 3>& lo,
                       const std::array<double, 3>& hi,
                       const std::array<int, 3>& counts);

/// Directions on the unit circle or sphere, all sharing one quadrature
/// weight so that weight * dirs.size() equals the measure of the manifold.
struct DirectionSet {
  int dim = 2;
  std::vector<Point> dirs;
  double weight = 0.0;
};

/// theta_j = (cos t_j, sin t_j) with t_j = (j-1) * 2*pi/n, j = 1..n.
/// Weight 2*pi/n.
DirectionSet uniform_circle_directions(int n);

/// Fibonacci sphere lattice of L points: x3 = 1 - 2*l/L and golden-angle
/// azimuth (sqrt(5)-1)*pi*l for l = 1..L. Weight 4*pi/L. The weighted sum
/// of x3 over the lattice is exactly -4*pi/L, and the minimum pairwise
/// distance is 2/sqrt(L) (the pair adjacent to the south pole).
DirectionSet fibonacci_sphere_directions(int L);

/// Equally spaced wavenumbers k_m = k_min + (m-1)*dk, m = 1..n, with
/// dk = (k_max - k_min)/(n - 1). First and last values are exactly k_min
/// and k_max.
struct WavenumberSet {
  double k_min = 0.0;
  double k_max = 0.0;
  double dk = 0.0;
  std::vector<double> values;
};

WavenumberSet make_wavenumbers(double k_min, double k_max, int n_k);

/// Where the scattered field is observed: far-field backscattering
/// amplitudes, or the scattered field at coincident source/receiver points
/// on the circle/sphere of the given radius.
struct MeasurementGeometry {
  enum class Kind { Far, Near };
  Kind kind = Kind::Far;
  double radius = 0.0;  // used by Near only
};

}  // namespace qdsm
