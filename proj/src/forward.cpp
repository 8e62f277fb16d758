#include "qdsm/forward.hpp"

#include <cmath>
#include <random>

#include "qdsm/specialfun.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qdsm {

namespace {

void check_unit_direction(const Point& theta, int dim) {
  if (std::abs(norm2(theta) - 1.0) > 1e-9)
    throw std::invalid_argument("direction must be a unit vector");
  if (dim == 2 && theta[2] != 0.0)
    throw std::invalid_argument("2D direction must have zero third component");
}

double bounding_radius(const SamplingGrid& g) {
  double r2 = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double v = (corner >> d) & 1 ? g.hi[d] : g.lo[d];
      s += v * v;
    }
    r2 = std::max(r2, s);
  }
  return std::sqrt(r2);
}

// Analytic integral of the fundamental solution over the disk/ball of the
// same measure as one raster cell, used for the singular diagonal of the
// discretized volume potential.
Complex singular_cell_integral(double k, double cell_volume, int dim) {
  if (dim == 2) {
    const double re = std::sqrt(cell_volume / pi);  // equal-area disk
    const double X = k * re;
    return Complex(0.0, 0.25) * (2.0 * pi / (k * k)) *
           (X * hankel1_h1(X) + Complex(0.0, 2.0 / pi));
  }
  const double re = std::cbrt(cell_volume * 3.0 / (4.0 * pi));
  return (cis(k * re) * Complex(1.0, -k * re) - 1.0) / (k * k);
}

Complex incident_value(const Incident& inc, const Point& y, double k,
                       int dim) {
  if (inc.kind == Incident::Kind::PlaneWave)
    return cis(k * dot(inc.dir_or_src, y));
  return fundamental_solution(inc.dir_or_src, y, k, dim);
}

// GMRES with modified Gram-Schmidt Arnoldi and complex Givens rotations,
// no restarts. Returns the iteration count; x holds the solution.
//
// Rotation convention: given (a, b), pick real c >= 0 and complex s with
// c^2 + |s|^2 = 1 such that [c s; -conj(s) c] (a, b) = (r, 0).
int gmres(const std::function<void(const std::vector<Complex>&,
                                   std::vector<Complex>&)>& matvec,
          const std::vector<Complex>& b, std::vector<Complex>& x, double tol,
          int max_iter) {
  const std::size_t n = b.size();
  auto nrm = [](const std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return std::sqrt(s);
  };
  const double bnorm = nrm(b);
  x.assign(n, Complex(0.0, 0.0));
  if (bnorm == 0.0) return 0;

  std::vector<std::vector<Complex>> V;
  V.push_back(b);
  for (auto& c : V[0]) c /= bnorm;
  std::vector<std::vector<Complex>> H;  // H[j] = rotated column j
  std::vector<double> cs;
  std::vector<Complex> sn;
  std::vector<Complex> g{Complex(bnorm, 0.0)};

  int it = 0;
  std::vector<Complex> w(n);
  for (; it < max_iter; ++it) {
    const std::size_t col = std::size_t(it);
    matvec(V[col], w);
    std::vector<Complex> h(col + 2, Complex(0.0, 0.0));
    for (std::size_t i = 0; i <= col; ++i) {
      Complex hij(0.0, 0.0);
      const auto& vi = V[i];
      for (std::size_t r = 0; r < n; ++r) hij += std::conj(vi[r]) * w[r];
      h[i] = hij;
      for (std::size_t r = 0; r < n; ++r) w[r] -= hij * vi[r];
    }
    const double wn = nrm(w);
    h[col + 1] = Complex(wn, 0.0);

    for (std::size_t i = 0; i < col; ++i) {
      const Complex t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -std::conj(sn[i]) * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double denom = std::sqrt(std::norm(h[col]) + std::norm(h[col + 1]));
    double c = 1.0;
    Complex s(0.0, 0.0);
    if (denom > 0.0) {
      const double ha = std::abs(h[col]);
      if (ha == 0.0) {
        c = 0.0;
        s = std::conj(h[col + 1]) / std::abs(h[col + 1]);
      } else {
        c = ha / denom;
        s = (h[col] / ha) * std::conj(h[col + 1]) / denom;
      }
    }
    h[col] = c * h[col] + s * h[col + 1];
    h[col + 1] = Complex(0.0, 0.0);
    cs.push_back(c);
    sn.push_back(s);
    g.push_back(-std::conj(s) * g[col]);
    g[col] *= c;
    H.push_back(std::move(h));

    const double res = std::abs(g[col + 1]) / bnorm;
    if (res <= tol || wn == 0.0) {
      ++it;
      break;
    }
    V.push_back(w);
    for (auto& cc : V.back()) cc /= wn;
  }

  // back substitution on the triangular system
  std::vector<Complex> yv(std::size_t(it), Complex(0.0, 0.0));
  for (int i = it - 1; i >= 0; --i) {
    Complex acc = g[std::size_t(i)];
    for (int j = i + 1; j < it; ++j)
      acc -= H[std::size_t(j)][std::size_t(i)] * yv[std::size_t(j)];
    yv[std::size_t(i)] = acc / H[std::size_t(i)][std::size_t(i)];
  }
  for (int j = 0; j < it; ++j)
    for (std::size_t r = 0; r < n; ++r)
      x[r] += yv[std::size_t(j)] * V[std::size_t(j)][r];
  return it;
}

}  // namespace

Complex born_far_backscatter(const ComplexField& contrast, const Point& theta,
                             double k) {
  if (!(k > 0.0)) throw std::invalid_argument("born_far_backscatter: k <= 0");
  const int dim = contrast.grid.dim;
  check_unit_direction(theta, dim);
  Complex sum(0.0, 0.0);
  const std::size_t n = contrast.grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex q = contrast.values[i];
    if (q == Complex(0.0, 0.0)) continue;
    const Point y = contrast.grid.point(i);
    sum += q * cis(2.0 * k * dot(theta, y));
  }
  return k * k * gamma_n(dim, k) * sum * contrast.grid.cell_volume();
}

Complex born_near_backscatter(const ComplexField& contrast, const Point& x,
                              double k) {
  if (!(k > 0.0)) throw std::invalid_argument("born_near_backscatter: k <= 0");
  const int dim = contrast.grid.dim;
  if (norm2(x) <= bounding_radius(contrast.grid))
    throw std::invalid_argument(
        "born_near_backscatter: receiver lies inside the raster bounding "
        "ball");
  Complex sum(0.0, 0.0);
  const std::size_t n = contrast.grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex q = contrast.values[i];
    if (q == Complex(0.0, 0.0)) continue;
    const Point y = contrast.grid.point(i);
    const Complex phi = fundamental_solution(x, y, k, dim);
    sum += q * phi * phi;
  }
  return k * k * sum * contrast.grid.cell_volume();
}

LSSolution ls_total_field(const ComplexField& contrast, const Incident& inc,
                          double k) {
  if (!(k > 0.0)) throw std::invalid_argument("ls_total_field: k <= 0");
  const SamplingGrid& g = contrast.grid;
  const int dim = g.dim;
  const std::size_t n = g.size();
  const double vol = g.cell_volume();
  const Complex diag = singular_cell_integral(k, vol, dim);
  const double k2 = k * k;

  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) pts[i] = g.point(i);

  std::vector<Complex> b(n);
  for (std::size_t i = 0; i < n; ++i)
    b[i] = incident_value(inc, pts[i], k, dim);

  // Dense system matrix when it fits in ~512 MB; otherwise the matvec
  // recomputes the kernel on the fly (same arithmetic, same results).
  const std::size_t dense_cap = 5792;
  std::vector<Complex> A;
  std::function<void(const std::vector<Complex>&, std::vector<Complex>&)>
      matvec;
  if (n <= dense_cap) {
    A.assign(n * n, Complex(0.0, 0.0));
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
      const std::size_t i = std::size_t(ii);
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) {
          A[i * n + j] = 1.0 - k2 * contrast.values[j] * diag;
        } else {
          A[i * n + j] = -k2 * vol * contrast.values[j] *
                         fundamental_solution(pts[i], pts[j], k, dim);
        }
      }
    }
    matvec = [&A, n](const std::vector<Complex>& xv,
                     std::vector<Complex>& yv) {
      yv.assign(n, Complex(0.0, 0.0));
#pragma omp parallel for schedule(static)
      for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
        const std::size_t i = std::size_t(ii);
        Complex acc(0.0, 0.0);
        const Complex* row = &A[i * n];
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * xv[j];
        yv[i] = acc;
      }
    };
  } else {
    matvec = [&contrast, &pts, n, k, k2, vol, diag, dim](
                 const std::vector<Complex>& xv, std::vector<Complex>& yv) {
      yv.assign(n, Complex(0.0, 0.0));
#pragma omp parallel for schedule(static)
      for (std::int64_t ii = 0; ii < std::int64_t(n); ++ii) {
        const std::size_t i = std::size_t(ii);
        Complex acc(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
          const Complex qj = contrast.values[j];
          if (qj == Complex(0.0, 0.0)) continue;
          const Complex kij =
              i == j ? diag : vol * fundamental_solution(pts[i], pts[j], k, dim);
          acc += kij * qj * xv[j];
        }
        yv[i] = xv[i] - k2 * acc;
      }
    };
  }

  std::vector<Complex> u;
  const int max_iter = int(std::min<std::size_t>(n, 300));
  const int iters = gmres(matvec, b, u, 1e-10, max_iter);

  // explicit postcondition: the true relative residual must be small
  std::vector<Complex> au(n);
  matvec(u, au);
  double rnum = 0.0, rden = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rnum += std::norm(b[i] - au[i]);
    rden += std::norm(b[i]);
  }
  const double residual = rden > 0.0 ? std::sqrt(rnum / rden) : 0.0;
  if (!(residual <= 1e-9))
    throw numeric_error(
        "ls_total_field: linear solve stalled, relative residual " +
        std::to_string(residual));

  LSSolution sol;
  sol.total = ComplexField(g);
  sol.total.values = std::move(u);
  sol.residual = residual;
  sol.iterations = iters;
  return sol;
}

Complex ls_backscatter(const ComplexField& contrast,
                       const MeasurementGeometry& geom, const Point& theta,
                       double k) {
  const int dim = contrast.grid.dim;
  check_unit_direction(theta, dim);
  const double vol = contrast.grid.cell_volume();
  const std::size_t n = contrast.grid.size();
  if (geom.kind == MeasurementGeometry::Kind::Far) {
    Incident inc{Incident::Kind::PlaneWave, theta};
    const LSSolution sol = ls_total_field(contrast, inc, k);
    Complex sum(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex q = contrast.values[i];
      if (q == Complex(0.0, 0.0)) continue;
      sum += q * sol.total.values[i] *
             cis(k * dot(theta, contrast.grid.point(i)));
    }
    return k * k * gamma_n(dim, k) * sum * vol;
  }
  const Point x{geom.radius * theta[0], geom.radius * theta[1],
                geom.radius * theta[2]};
  if (norm2(x) <= bounding_radius(contrast.grid))
    throw std::invalid_argument(
        "ls_backscatter: receiver lies inside the raster bounding ball");
  Incident inc{Incident::Kind::PointSource, x};
  const LSSolution sol = ls_total_field(contrast, inc, k);
  Complex sum(0.0, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex q = contrast.values[i];
    if (q == Complex(0.0, 0.0)) continue;
    sum += q * sol.total.values[i] *
           fundamental_solution(x, contrast.grid.point(i), k, dim);
  }
  return k * k * sum * vol;
}

MeasurementSet synthesize(const ContrastPhantom& ph,
                          const MeasurementGeometry& geom,
                          const DirectionSet& dirs, const WavenumberSet& ks,
                          const SamplingGrid& forward_grid, ForwardModel model,
                          Exec exec) {
  if (ph.dim != forward_grid.dim || ph.dim != dirs.dim)
    throw std::invalid_argument("synthesize: dimension mismatch");
  for (int d = 0; d < ph.dim; ++d) {
    if (forward_grid.lo[d] > -ph.support_box[d] + 1e-12 ||
        forward_grid.hi[d] < ph.support_box[d] - 1e-12)
      throw std::invalid_argument(
          "synthesize: forward grid does not cover the phantom support");
  }
  if (geom.kind == MeasurementGeometry::Kind::Near &&
      !(geom.radius > ph.support_radius))
    throw std::invalid_argument(
        "synthesize: measurement radius must exceed the support radius");

  const ComplexField raster = rasterize(ph, forward_grid, exec);
  const std::size_t nj = dirs.dirs.size();
  const std::size_t nm = ks.values.size();

  MeasurementSet ms;
  ms.dim = ph.dim;
  ms.geometry = geom;
  ms.directions = dirs;
  ms.wavenumbers = ks;
  ms.data.assign(nj * nm, Complex(0.0, 0.0));

  if (model == ForwardModel::LippmannSchwinger) {
    for (std::size_t j = 0; j < nj; ++j)
      for (std::size_t m = 0; m < nm; ++m)
        ms.data[j * nm + m] =
            ls_backscatter(raster, geom, dirs.dirs[j], ks.values[m]);
    return ms;
  }

  if (geom.kind == MeasurementGeometry::Kind::Far) {
    if (exec == Exec::Reference) {
      for (std::size_t j = 0; j < nj; ++j)
        for (std::size_t m = 0; m < nm; ++m)
          ms.data[j * nm + m] =
              born_far_backscatter(raster, dirs.dirs[j], ks.values[m]);
    } else {
      const std::size_t np = raster.grid.size();
      const double vol = raster.grid.cell_volume();
#pragma omp parallel for schedule(static)
      for (std::int64_t jj = 0; jj < std::int64_t(nj); ++jj) {
        const std::size_t j = std::size_t(jj);
        const Point& th = dirs.dirs[j];
        std::vector<Complex> acc(nm, Complex(0.0, 0.0));
        for (std::size_t i = 0; i < np; ++i) {
          const Complex q = raster.values[i];
          if (q == Complex(0.0, 0.0)) continue;
          const double p = dot(th, raster.grid.point(i));
          Complex w = cis(2.0 * ks.values.front() * p);
          const Complex step = cis(2.0 * ks.dk * p);
          for (std::size_t m = 0; m < nm; ++m) {
            acc[m] += q * w;
            w *= step;
          }
        }
        for (std::size_t m = 0; m < nm; ++m) {
          const double k = ks.values[m];
          ms.data[j * nm + m] = k * k * gamma_n(ms.dim, k) * acc[m] * vol;
        }
      }
    }
    return ms;
  }

  // near field: one singular-free kernel evaluation per term either way;
  // Fast only parallelizes over receivers
  if (exec == Exec::Reference) {
    for (std::size_t j = 0; j < nj; ++j) {
      const Point x{geom.radius * dirs.dirs[j][0],
                    geom.radius * dirs.dirs[j][1],
                    geom.radius * dirs.dirs[j][2]};
      for (std::size_t m = 0; m < nm; ++m)
        ms.data[j * nm + m] = born_near_backscatter(raster, x, ks.values[m]);
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t jj = 0; jj < std::int64_t(nj); ++jj) {
      const std::size_t j = std::size_t(jj);
      const Point x{geom.radius * dirs.dirs[j][0],
                    geom.radius * dirs.dirs[j][1],
                    geom.radius * dirs.dirs[j][2]};
      for (std::size_t m = 0; m < nm; ++m)
        ms.data[j * nm + m] = born_near_backscatter(raster, x, ks.values[m]);
    }
  }
  return ms;
}

MeasurementSet add_noise(const MeasurementSet& ms, double delta,
                         std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("add_noise: delta < 0");
  MeasurementSet out = ms;
  out.noise_delta = delta;
  out.seed = seed;
  if (delta == 0.0) return out;

  // Fixed Box-Muller on top of mt19937_64 so the stream is reproducible
  // across standard library implementations.
  std::mt19937_64 rng(seed);
  bool have_cached = false;
  double cached = 0.0;
  auto next_gaussian = [&]() {
    if (have_cached) {
      have_cached = false;
      return cached;
    }
    const double u1 =
        1.0 - double(rng() >> 11) * 0x1.0p-53;  // in (0, 1], log-safe
    const double u2 = double(rng() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * pi * u2;
    cached = r * std::sin(a);
    have_cached = true;
    return r * std::cos(a);
  };

  const std::size_t n = ms.data.size();
  std::vector<Complex> g(n);
  double gnorm2 = 0.0, dnorm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double re = next_gaussian();
    const double im = next_gaussian();
    g[i] = Complex(re, im);
    gnorm2 += std::norm(g[i]);
    dnorm2 += std::norm(ms.data[i]);
  }
  if (gnorm2 == 0.0 || dnorm2 == 0.0) return out;
  const double scale = delta * std::sqrt(dnorm2) / std::sqrt(gnorm2);
  for (std::size_t i = 0; i < n; ++i) out.data[i] += scale * g[i];
  return out;
}

}  // namespace qdsm
