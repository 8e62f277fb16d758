#include "qdsm/geometry.hpp"

#include <cmath>

namespace qdsm {

double SamplingGrid::coord(int axis, int i) const {
  const int n = counts[axis];
  if (n <= 1) return lo[axis];
  if (i == 0) return lo[axis];
  if (i == n - 1) return hi[axis];
  return lo[axis] + (hi[axis] - lo[axis]) * (double(i) / double(n - 1));
}

Point SamplingGrid::point(std::size_t flat) const {
  const std::size_t n1 = counts[1], n2 = counts[2];
  const std::size_t i2 = flat % n2;
  const std::size_t i1 = (flat / n2) % n1;
  const std::size_t i0 = flat / (n1 * n2);
  return {coord(0, int(i0)), coord(1, int(i1)), coord(2, int(i2))};
}

double SamplingGrid::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= spacing(d);
  return v;
}

bool SamplingGrid::same_layout(const SamplingGrid& other) const {
  if (dim != other.dim) return false;
  for (int d = 0; d < 3; ++d) {
    if (counts[d] != other.counts[d]) return false;
    if (lo[d] != other.lo[d] || hi[d] != other.hi[d]) return false;
  }
  return true;
}

SamplingGrid make_grid(int dim, const std::array<double, 3>& lo,
                       const std::array<double, 3>& hi,
                       const std::array<int, 3>& counts) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("make_grid: dim must be 2 or 3");
  SamplingGrid g;
  g.dim = dim;
  for (int d = 0; d < 3; ++d) {
    if (d < dim) {
      if (counts[d] < 2)
        throw std::invalid_argument(
            "make_grid: need at least 2 points per active axis");
      if (!(hi[d] > lo[d]))
        throw std::invalid_argument("make_grid: hi must exceed lo");
      g.lo[d] = lo[d];
      g.hi[d] = hi[d];
      g.counts[d] = counts[d];
    } else {
      g.lo[d] = 0.0;
      g.hi[d] = 0.0;
      g.counts[d] = 1;
    }
  }
  return g;
}

DirectionSet uniform_circle_directions(int n) {
  if (n < 1)
    throw std::invalid_argument("uniform_circle_directions: n must be >= 1");
  DirectionSet ds;
  ds.dim = 2;
  ds.weight = 2.0 * pi / n;
  ds.dirs.reserve(n);
  for (int j = 1; j <= n; ++j) {
    const double t = (j - 1) * 2.0 * pi / n;
    ds.dirs.push_back({std::cos(t), std::sin(t), 0.0});
  }
  return ds;
}

DirectionSet fibonacci_sphere_directions(int L) {
  if (L < 1)
    throw std::invalid_argument("fibonacci_sphere_directions: L must be >= 1");
  DirectionSet ds;
  ds.dim = 3;
  ds.weight = 4.0 * pi / L;
  ds.dirs.reserve(L);
  const double golden = (std::sqrt(5.0) - 1.0) * pi;
  for (int l = 1; l <= L; ++l) {
    const double x3 = 1.0 - 2.0 * double(l) / double(L);
    const double r = std::sqrt(std::max(0.0, 1.0 - x3 * x3));
    const double a = golden * l;
    ds.dirs.push_back({r * std::cos(a), r * std::sin(a), x3});
  }
  return ds;
}

WavenumberSet make_wavenumbers(double k_min, double k_max, int n_k) {
  if (!(k_min > 0.0))
    throw std::invalid_argument("make_wavenumbers: k_min must be positive");
  if (!(k_max > k_min))
    throw std::invalid_argument("make_wavenumbers: k_max must exceed k_min");
  if (n_k < 2)
    throw std::invalid_argument("make_wavenumbers: need at least 2 values");
  WavenumberSet ws;
  ws.k_min = k_min;
  ws.k_max = k_max;
  ws.dk = (k_max - k_min) / (n_k - 1);
  ws.values.resize(n_k);
  ws.values.front() = k_min;
  ws.values.back() = k_max;
  for (int m = 1; m < n_k - 1; ++m)
    ws.values[m] = k_min + ((k_max - k_min) * double(m)) / double(n_k - 1);
  return ws;
}

}  // namespace qdsm
