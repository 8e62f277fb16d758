#include "qdsm/inversion.hpp"

#include <cmath>

#include "qdsm/specialfun.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qdsm {

namespace {

void check_inputs(const MeasurementSet& ms, const SamplingGrid& grid,
                  MeasurementGeometry::Kind expected, const char* who) {
  if (ms.geometry.kind != expected)
    throw std::invalid_argument(std::string(who) +
                                ": measurement geometry kind mismatch");
  if (ms.dim != grid.dim)
    throw std::invalid_argument(std::string(who) +
                                ": data/grid dimension mismatch");
  if (ms.dim != ms.directions.dim)
    throw std::invalid_argument(std::string(who) +
                                ": data/direction dimension mismatch");
  if (ms.data.size() != ms.n_dirs() * ms.n_k())
    throw std::invalid_argument(std::string(who) +
                                ": data size does not match dirs x wavenumbers");
  if (ms.wavenumbers.values.size() < 2)
    throw std::invalid_argument(std::string(who) +
                                ": need at least two wavenumbers");
}

// Shared driver for both indicator kernels. The per-wavenumber weight wk
// and the overall complex prefactor differ between the four cases; `shift`
// is 0 for far data and -R for near data, and `sgn` the sign of the phase
// 2 k (theta.z + shift).
struct IndicatorSpec {
  Complex prefactor;
  std::vector<double> wk;
  double shift = 0.0;
  double sgn = 1.0;
};

IndicatorSpec make_spec(const MeasurementSet& ms) {
  IndicatorSpec sp;
  const double dtheta = ms.directions.weight;
  const double dk = ms.wavenumbers.dk;
  const std::size_t nm = ms.n_k();
  sp.wk.assign(nm, 1.0);
  if (ms.geometry.kind == MeasurementGeometry::Kind::Far) {
    sp.shift = 0.0;
    sp.sgn = -1.0;
    if (ms.dim == 2) {
      sp.prefactor = 2.0 * Complex(1.0, -1.0) * dtheta * dk /
                     std::sqrt(pi * pi * pi);
      for (std::size_t m = 0; m < nm; ++m)
        sp.wk[m] = 1.0 / std::sqrt(ms.wavenumbers.values[m]);
    } else {
      sp.prefactor = 4.0 * dtheta * dk / (pi * pi);
    }
  } else {
    const double R = ms.geometry.radius;
    sp.shift = -R;
    sp.sgn = 1.0;
    if (ms.dim == 2) {
      sp.prefactor = Complex(0.0, -8.0) * R * dtheta * dk / pi;
    } else {
      sp.prefactor = 16.0 * R * R * dtheta * dk / pi;
    }
  }
  return sp;
}

ComplexField indicator_common(const MeasurementSet& ms,
                              const SamplingGrid& grid, Exec exec,
                              const IndicatorSpec& sp) {
  ComplexField out(grid);
  const std::size_t nz = grid.size();
  const std::size_t nj = ms.n_dirs();
  const std::size_t nm = ms.n_k();
  const auto& kv = ms.wavenumbers.values;

  if (exec == Exec::Reference) {
    // plain direct sum: wavenumbers outer, directions inner, one
    // exponential per term
    for (std::size_t z = 0; z < nz; ++z) {
      const Point p = grid.point(z);
      Complex acc(0.0, 0.0);
      for (std::size_t m = 0; m < nm; ++m) {
        Complex inner(0.0, 0.0);
        for (std::size_t j = 0; j < nj; ++j) {
          const double phase =
              2.0 * sp.sgn * kv[m] * (dot(ms.directions.dirs[j], p) + sp.shift);
          inner += ms.data[j * nm + m] * cis(phase);
        }
        acc += sp.wk[m] * inner;
      }
      out.values[z] = sp.prefactor * acc;
    }
    return out;
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t zz = 0; zz < std::int64_t(nz); ++zz) {
    const std::size_t z = std::size_t(zz);
    const Point p = grid.point(z);
    Complex acc(0.0, 0.0);
    for (std::size_t j = 0; j < nj; ++j) {
      const double t = sp.sgn * 2.0 * (dot(ms.directions.dirs[j], p) + sp.shift);
      Complex w = cis(kv.front() * t);
      const Complex step = cis(ms.wavenumbers.dk * t);
      const Complex* row = &ms.data[j * nm];
      Complex inner(0.0, 0.0);
      for (std::size_t m = 0; m < nm; ++m) {
        inner += sp.wk[m] * row[m] * w;
        w *= step;
      }
      acc += inner;
    }
    out.values[z] = sp.prefactor * acc;
  }
  return out;
}

}  // namespace

ComplexField indicator_far(const MeasurementSet& ms, const SamplingGrid& grid,
                           Exec exec) {
  check_inputs(ms, grid, MeasurementGeometry::Kind::Far, "indicator_far");
  return indicator_common(ms, grid, exec, make_spec(ms));
}

ComplexField indicator_near(const MeasurementSet& ms, const SamplingGrid& grid,
                            Exec exec) {
  check_inputs(ms, grid, MeasurementGeometry::Kind::Near, "indicator_near");
  if (!(ms.geometry.radius > 0.0))
    throw std::invalid_argument("indicator_near: radius must be positive");
  return indicator_common(ms, grid, exec, make_spec(ms));
}

namespace {

// Trapezoid rule over the unit circle, doubled until two successive levels
// agree; the rule is spectrally accurate for periodic integrands.
Complex circle_integral(const std::function<Complex(const Point&)>& f,
                        double rel_tol, const char* who) {
  Complex prev(0.0, 0.0);
  for (int n = 32; n <= 16384; n *= 2) {
    Complex sum(0.0, 0.0);
    for (int j = 0; j < n; ++j) {
      const double t = 2.0 * pi * j / n;
      sum += f({std::cos(t), std::sin(t), 0.0});
    }
    sum *= 2.0 * pi / n;
    if (n > 32 && std::abs(sum - prev) <= rel_tol * std::abs(sum) + 1e-280)
      return sum;
    prev = sum;
  }
  throw numeric_error(std::string(who) +
                      ": circle quadrature did not converge");
}

// Fibonacci-lattice quadrature on the sphere, doubled until stable.
Complex sphere_integral(const std::function<Complex(const Point&)>& f,
                        double rel_tol, const char* who) {
  Complex prev(0.0, 0.0);
  for (int L = 128; L <= 131072; L *= 2) {
    const DirectionSet ds = fibonacci_sphere_directions(L);
    Complex sum(0.0, 0.0);
    for (const auto& d : ds.dirs) sum += f(d);
    sum *= ds.weight;
    if (L > 128 && std::abs(sum - prev) <= rel_tol * std::abs(sum) + 1e-280)
      return sum;
    prev = sum;
  }
  throw numeric_error(std::string(who) +
                      ": sphere quadrature did not converge");
}

Complex adaptive_simpson(const std::function<Complex(double)>& f, double a,
                         double b, Complex fa, Complex fm, Complex fb,
                         double abs_tol, int depth, const char* who) {
  const double m = 0.5 * (a + b);
  const double h = b - a;
  const Complex flm = f(0.5 * (a + m));
  const Complex frm = f(0.5 * (m + b));
  const Complex s1 = (h / 6.0) * (fa + 4.0 * fm + fb);
  const Complex s2 =
      (h / 12.0) * (fa + 4.0 * flm + 2.0 * fm + 4.0 * frm + fb);
  if (depth > 0 && std::abs(s2 - s1) <= 15.0 * abs_tol)
    return s2 + (s2 - s1) / 15.0;
  if (depth >= 30)
    throw numeric_error(std::string(who) +
                        ": adaptive wavenumber quadrature did not converge");
  return adaptive_simpson(f, a, m, fa, flm, fm, 0.5 * abs_tol, depth + 1,
                          who) +
         adaptive_simpson(f, m, b, fm, frm, fb, 0.5 * abs_tol, depth + 1,
                          who);
}

}  // namespace

Complex continuous_indicator_oracle(
    const std::function<Complex(const Point&, double)>& farfield,
    const Point& z, double k_min, double k_max, int dim) {
  if (dim != 2 && dim != 3)
    throw std::invalid_argument("continuous_indicator_oracle: dim not in {2,3}");
  if (!(k_min > 0.0) || !(k_max > k_min))
    throw std::invalid_argument(
        "continuous_indicator_oracle: need 0 < k_min < k_max");
  const char* who = "continuous_indicator_oracle";

  std::function<Complex(double)> integrand;
  if (dim == 2) {
    integrand = [&](double k) -> Complex {
      const Complex inner = circle_integral(
          [&](const Point& th) {
            return farfield(th, k) * cis(-2.0 * k * dot(th, z));
          },
          1e-10, who);
      return inner / (gamma_n(2, k) * k);
    };
  } else {
    integrand = [&](double k) -> Complex {
      const Complex inner = sphere_integral(
          [&](const Point& th) {
            return farfield(th, k) * cis(-2.0 * k * dot(th, z));
          },
          1e-10, who);
      return inner / gamma_n(3, k);
    };
  }

  // rough scale for the absolute tolerance of the adaptive pass
  const int n0 = 33;
  Complex rough(0.0, 0.0);
  std::vector<Complex> cache(n0);
  for (int i = 0; i < n0; ++i) {
    const double k = k_min + (k_max - k_min) * double(i) / double(n0 - 1);
    cache[std::size_t(i)] = integrand(k);
    rough += cache[std::size_t(i)] * ((i == 0 || i == n0 - 1) ? 0.5 : 1.0);
  }
  rough *= (k_max - k_min) / double(n0 - 1);
  const double scale =
      std::max(std::abs(rough), 1e-12 * (std::abs(cache[0]) + 1.0));
  const double abs_tol = 1e-9 * scale;

  const Complex integral =
      adaptive_simpson(integrand, k_min, k_max, cache[0],
                       cache[std::size_t((n0 - 1) / 2)],
                       cache[std::size_t(n0 - 1)], abs_tol, 0, who);

  const double pref = dim == 2 ? 1.0 / (pi * pi) : 1.0 / (pi * pi * pi);
  return pref * integral;
}

}  // namespace qdsm
