#pragma once

#include <cstdint>

#include "qdsm/phantoms.hpp"

namespace qdsm {

/// Backscattering measurements over a direction set and a wavenumber set.
/// data is row-major over (direction j, wavenumber m): data[j * n_k + m].
struct MeasurementSet {
  int dim = 2;
  MeasurementGeometry geometry;
  DirectionSet directions;
  WavenumberSet wavenumbers;
  std::vector<Complex> data;
  double noise_delta = 0.0;   // relative noise level applied to this set
  std::uint64_t seed = 0;     // seed used when noise_delta > 0

  std::size_t n_dirs() const { return directions.dirs.size(); }
  std::size_t n_k() const { return wavenumbers.values.size(); }
  std::size_t index(std::size_t j, std::size_t m) const {
    return j * n_k() + m;
  }
  Complex& at(std::size_t j, std::size_t m) { return data[index(j, m)]; }
  const Complex& at(std::size_t j, std::size_t m) const {
    return data[index(j, m)];
  }
};

enum class ForwardModel { Born, LippmannSchwinger };

/// Weak-scattering far-field backscattering amplitude at direction theta:
///   k^2 * gamma_n(k) * sum_i q_i exp(2ik theta.y_i) * cell_volume.
/// The contrast field doubles as the quadrature rule (uniform raster).
Complex born_far_backscatter(const ComplexField& contrast, const Point& theta,
                             double k);

/// Weak-scattering scattered field at coincident source/receiver x:
///   k^2 * sum_i q_i Phi(x, y_i, k)^2 * cell_volume.
/// Throws std::invalid_argument when x lies inside the ball bounding the
/// raster (the kernel is singular there).
Complex born_near_backscatter(const ComplexField& contrast, const Point& x,
                              double k);

/// Result of one volume-integral-equation solve.
struct LSSolution {
  ComplexField total;   // total field u on the contrast raster
  double residual = 0;  // final relative residual of the linear solve
  int iterations = 0;
};

/// Plane wave exp(ik theta.x) or point source Phi(src, x, k).
struct Incident {
  enum class Kind { PlaneWave, PointSource };
  Kind kind = Kind::PlaneWave;
  Point dir_or_src{};
};

/// Solves the Lippmann-Schwinger equation u = u_inc + k^2 T[q u] on the
/// contrast raster by GMRES. The singular diagonal integrates the kernel
/// analytically over the disk/ball of the cell's measure. Relative residual
/// target 1e-10, postcondition residual <= 1e-9 (numeric_error otherwise).
LSSolution ls_total_field(const ComplexField& contrast, const Incident& inc,
                          double k);

/// Backscattering datum under the full model: a plane-wave (far) or
/// point-source (near) solve followed by the weighted far-field/near-field
/// observation sum of q * u_total.
Complex ls_backscatter(const ComplexField& contrast,
                       const MeasurementGeometry& geom, const Point& theta,
                       double k);

/// Fills the full measurement matrix for a phantom rasterized on
/// forward_grid. Validates that the grid covers the phantom's support box
/// and, for near-field geometry, that the measurement radius exceeds the
/// support radius. The Fast path factorizes the far-field phases over the
/// wavenumber progression and parallelizes over directions.
MeasurementSet synthesize(const ContrastPhantom& ph,
                          const MeasurementGeometry& geom,
                          const DirectionSet& dirs, const WavenumberSet& ks,
                          const SamplingGrid& forward_grid,
                          ForwardModel model = ForwardModel::Born,
                          Exec exec = Exec::Fast);

/// Additive noise calibrated in the Frobenius norm:
///   data' = data + delta * ||data||_F * G / ||G||_F
/// with G i.i.d. standard Gaussian in real and imaginary parts, drawn from
/// a seeded 64-bit Mersenne Twister through a fixed Box-Muller transform.
/// delta = 0 returns a bit-identical copy. Throws std::invalid_argument for
/// delta < 0.
MeasurementSet add_noise(const MeasurementSet& ms, double delta,
                         std::uint64_t seed);

}  // namespace qdsm
