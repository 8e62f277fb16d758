#include "qdsm/analysis.hpp"

#include <cmath>
#include <random>

#include <fftw3.h>

#include "qdsm/specialfun.hpp"

namespace qdsm {

namespace {

ErrorReport rel_errors_impl(const std::vector<Complex>& diff,
                            const std::vector<Complex>& truth) {
  double d2 = 0.0, dinf = 0.0, t2 = 0.0, tinf = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const double ad = std::abs(diff[i]);
    d2 += ad * ad;
    dinf = std::max(dinf, ad);
    const double at = std::abs(truth[i]);
    t2 += at * at;
    tinf = std::max(tinf, at);
  }
  ErrorReport rep;
  if (t2 == 0.0) {
    rep.absolute = true;
    rep.rel_l2 = std::sqrt(d2);
    rep.rel_linf = dinf;
    rep.metadata = "truth is identically zero; absolute norms reported";
  } else {
    rep.rel_l2 = std::sqrt(d2 / t2);
    rep.rel_linf = dinf / tinf;
  }
  return rep;
}

}  // namespace

ErrorReport rel_errors(const ComplexField& reconstruction,
                       const ComplexField& truth) {
  if (!reconstruction.grid.same_layout(truth.grid))
    throw std::invalid_argument("rel_errors: grids differ in layout");
  std::vector<Complex> diff(truth.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i)
    diff[i] = reconstruction.values[i] - truth.values[i];
  return rel_errors_impl(diff, truth.values);
}

ErrorReport rel_errors_real(const ComplexField& reconstruction,
                            const ComplexField& truth) {
  if (!reconstruction.grid.same_layout(truth.grid))
    throw std::invalid_argument("rel_errors_real: grids differ in layout");
  std::vector<Complex> diff(truth.values.size()), tr(truth.values.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = Complex(
        reconstruction.values[i].real() - truth.values[i].real(), 0.0);
    tr[i] = Complex(truth.values[i].real(), 0.0);
  }
  return rel_errors_impl(diff, tr);
}

H2Norm h2_norm(const ComplexField& f, int pad_factor) {
  if (pad_factor < 1)
    throw std::invalid_argument("h2_norm: pad_factor must be >= 1");
  const SamplingGrid& g = f.grid;
  const int dim = g.dim;

  // boundary check: the padded DFT treats the raster as compactly
  // supported, which is doubtful when the field is still large at the rim
  double vmax = 0.0, bmax = 0.0;
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    const double a = std::abs(f.values[i]);
    vmax = std::max(vmax, a);
    const Point p = g.point(i);
    bool on_boundary = false;
    for (int d = 0; d < dim; ++d) {
      // flattened index decomposition would be cheaper; clarity wins here
      if (p[d] == g.lo[d] || p[d] == g.hi[d]) on_boundary = true;
    }
    if (on_boundary) bmax = std::max(bmax, a);
  }

  std::array<int, 3> np{1, 1, 1};
  for (int d = 0; d < dim; ++d) np[d] = pad_factor * (g.counts[d] - 1) + 1;
  const std::size_t ntot = std::size_t(np[0]) * np[1] * (dim == 3 ? np[2] : 1);

  std::vector<Complex> in(ntot, Complex(0.0, 0.0));
  std::vector<Complex> out(ntot);
  // embed the raster at the low corner of the padded box (a shift only
  // changes phases, not |f_hat|)
  if (dim == 2) {
    for (int i0 = 0; i0 < g.counts[0]; ++i0)
      for (int i1 = 0; i1 < g.counts[1]; ++i1)
        in[std::size_t(i0) * np[1] + i1] =
            f.values[std::size_t(i0) * g.counts[1] + i1];
  } else {
    for (int i0 = 0; i0 < g.counts[0]; ++i0)
      for (int i1 = 0; i1 < g.counts[1]; ++i1)
        for (int i2 = 0; i2 < g.counts[2]; ++i2)
          in[(std::size_t(i0) * np[1] + i1) * np[2] + i2] =
              f.values[(std::size_t(i0) * g.counts[1] + i1) * g.counts[2] +
                       i2];
  }

  fftw_plan plan =
      dim == 2
          ? fftw_plan_dft_2d(np[0], np[1],
                             reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()),
                             FFTW_FORWARD, FFTW_ESTIMATE)
          : fftw_plan_dft_3d(np[0], np[1], np[2],
                             reinterpret_cast<fftw_complex*>(in.data()),
                             reinterpret_cast<fftw_complex*>(out.data()),
                             FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);

  // f_hat(xi_t) ~ h^dim * DFT; sum (1+|xi|^2)^2 |f_hat|^2 dxi over the
  // centered frequency box xi_d = 2*pi*t_d/(np_d*h_d), t_d in [-np/2, np/2)
  std::array<double, 3> h{}, dxi{};
  double hprod = 1.0, dxiprod = 1.0;
  for (int d = 0; d < dim; ++d) {
    h[d] = g.spacing(d);
    dxi[d] = 2.0 * pi / (np[d] * h[d]);
    hprod *= h[d];
    dxiprod *= dxi[d];
  }
  auto freq = [&](int t, int d) {
    const int f2 = t <= np[d] / 2 ? t : t - np[d];
    return dxi[d] * f2;
  };
  double sum = 0.0;
  if (dim == 2) {
    for (int t0 = 0; t0 < np[0]; ++t0) {
      const double x0 = freq(t0, 0);
      for (int t1 = 0; t1 < np[1]; ++t1) {
        const double x1 = freq(t1, 1);
        const double xi2 = x0 * x0 + x1 * x1;
        const double w = (1.0 + xi2) * (1.0 + xi2);
        sum += w * std::norm(out[std::size_t(t0) * np[1] + t1]);
      }
    }
  } else {
    for (int t0 = 0; t0 < np[0]; ++t0) {
      const double x0 = freq(t0, 0);
      for (int t1 = 0; t1 < np[1]; ++t1) {
        const double x1 = freq(t1, 1);
        for (int t2 = 0; t2 < np[2]; ++t2) {
          const double x2 = freq(t2, 2);
          const double xi2 = x0 * x0 + x1 * x1 + x2 * x2;
          const double w = (1.0 + xi2) * (1.0 + xi2);
          sum += w *
                 std::norm(out[(std::size_t(t0) * np[1] + t1) * np[2] + t2]);
        }
      }
    }
  }
  sum *= hprod * hprod * dxiprod;

  H2Norm result;
  result.value = std::pow(2.0 * pi, -dim) * std::sqrt(sum);
  result.boundary_warning = bmax > 1e-8 * vmax && vmax > 0.0;
  return result;
}

double l2_norm(const ComplexField& f) {
  double s = 0.0;
  for (const auto& v : f.values) s += std::norm(v);
  return std::sqrt(s * f.grid.cell_volume());
}

double truncation_bound(double h2, double l2, double k_min, double k_max,
                        int dim) {
  if (!(h2 >= 0.0) || !(l2 >= 0.0))
    throw std::invalid_argument("truncation_bound: norms must be >= 0");
  if (!(k_min > 0.0) || !(k_max > k_min))
    throw std::invalid_argument("truncation_bound: need 0 < k_min < k_max");
  if (dim == 2) return std::sqrt(pi) * (h2 / k_max + k_min * l2);
  if (dim == 3)
    return 2.0 * std::sqrt(pi) *
           (h2 / std::sqrt(k_max) +
            (std::sqrt(3.0) / 3.0) * std::pow(k_min, 1.5) * l2);
  throw std::invalid_argument("truncation_bound: dim must be 2 or 3");
}

MomentEstimate low_freq_moments(
    const std::function<Complex(const Point&, double)>& farfield,
    const DirectionSet& dirs, const std::vector<double>& k_probe) {
  const int dim = dirs.dim;
  if (k_probe.size() < 2)
    throw std::invalid_argument(
        "low_freq_moments: need at least two probe wavenumbers");
  if (int(dirs.dirs.size()) < dim)
    throw std::invalid_argument(
        "low_freq_moments: need at least dim directions");
  for (double k : k_probe)
    if (!(k > 0.0))
      throw std::invalid_argument("low_freq_moments: probes must be positive");

  // per direction: fit u/(k^2 gamma_n) ~ c0 + c1 k by least squares in k
  const std::size_t nj = dirs.dirs.size();
  std::vector<Complex> c0(nj), c1(nj);
  double s1 = 0.0, sk = 0.0, skk = 0.0;
  for (double k : k_probe) {
    s1 += 1.0;
    sk += k;
    skk += k * k;
  }
  const double det = s1 * skk - sk * sk;
  if (det <= 0.0)
    throw std::invalid_argument(
        "low_freq_moments: probe wavenumbers must be distinct");
  for (std::size_t j = 0; j < nj; ++j) {
    Complex sd(0.0, 0.0), skd(0.0, 0.0);
    for (double k : k_probe) {
      const Complex d = farfield(dirs.dirs[j], k) / (k * k * gamma_n(dim, k));
      sd += d;
      skd += k * d;
    }
    c0[j] = (skk * sd - sk * skd) / det;
    c1[j] = (s1 * skd - sk * sd) / det;
  }

  MomentEstimate est;
  est.dim = dim;
  Complex mass(0.0, 0.0);
  for (const auto& c : c0) mass += c;
  est.mass = mass / double(nj);

  // slopes: c1(theta) ~ 2i theta . M -> least squares for M over directions
  // (real dim x dim normal equations, complex right-hand side)
  double ata[3][3] = {{0.0}};
  Complex atb[3] = {Complex(0.0, 0.0), Complex(0.0, 0.0), Complex(0.0, 0.0)};
  for (std::size_t j = 0; j < nj; ++j) {
    const Complex rhs = c1[j] / Complex(0.0, 2.0);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b)
        ata[a][b] += dirs.dirs[j][a] * dirs.dirs[j][b];
      atb[a] += dirs.dirs[j][a] * rhs;
    }
  }
  // Gaussian elimination with partial pivoting on the small real system
  int idx[3] = {0, 1, 2};
  for (int col = 0; col < dim; ++col) {
    int piv = col;
    for (int r = col + 1; r < dim; ++r)
      if (std::abs(ata[idx[r]][col]) > std::abs(ata[idx[piv]][col])) piv = r;
    std::swap(idx[col], idx[piv]);
    const double d = ata[idx[col]][col];
    if (std::abs(d) < 1e-14)
      throw std::invalid_argument(
          "low_freq_moments: directions do not span the space");
    for (int r = col + 1; r < dim; ++r) {
      const double fko = ata[idx[r]][col] / d;
      for (int cc = col; cc < dim; ++cc) ata[idx[r]][cc] -= fko * ata[idx[col]][cc];
      atb[idx[r]] -= fko * atb[idx[col]];
    }
  }
  for (int r = dim - 1; r >= 0; --r) {
    Complex acc = atb[idx[r]];
    for (int cc = r + 1; cc < dim; ++cc)
      acc -= ata[idx[r]][cc] * est.first_moment[std::size_t(cc)];
    est.first_moment[std::size_t(r)] = acc / ata[idx[r]][r];
  }
  return est;
}

MomentCheck uniqueness_moment_check(const Point& alpha, double c, double R,
                                    const SamplingGrid& quad_grid,
                                    std::uint64_t seed) {
  if (!(R > 0.0))
    throw std::invalid_argument("uniqueness_moment_check: R must be positive");
  const int dim = quad_grid.dim;
  for (int d = 0; d < dim; ++d)
    if (quad_grid.lo[d] > -R || quad_grid.hi[d] < R)
      throw std::invalid_argument(
          "uniqueness_moment_check: quadrature grid does not cover the ball");

  const double vol = quad_grid.cell_volume();
  const std::size_t n = quad_grid.size();

  MomentCheck chk;
  chk.predicted_r = dim == 2 ? c * pi * R * R : c * (4.0 / 3.0) * pi * R * R * R;
  chk.second_moment =
      dim == 2 ? pi * std::pow(R, 4) / 4.0 : (4.0 / 15.0) * pi * std::pow(R, 5);

  // seeded random unit directions
  std::mt19937_64 rng(seed);
  auto unit = [&]() {
    Point p{};
    if (dim == 2) {
      const double t = 2.0 * pi * (double(rng() >> 11) * 0x1.0p-53);
      p = {std::cos(t), std::sin(t), 0.0};
    } else {
      double nrm = 0.0;
      do {
        for (int d = 0; d < 3; ++d)
          p[d] = 2.0 * (double(rng() >> 11) * 0x1.0p-53) - 1.0;
        nrm = norm2(p);
      } while (nrm < 1e-3 || nrm > 1.0);
      for (int d = 0; d < 3; ++d) p[d] /= nrm;
    }
    return p;
  };
  std::vector<Point> thetas;
  for (int t = 0; t < 8; ++t) thetas.push_back(unit());

  double int_r = 0.0;
  std::vector<double> lhs(thetas.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point y = quad_grid.point(i);
    if (dot(y, y) > R * R) continue;
    const double r = dot(alpha, y) + c;
    int_r += r;
    for (std::size_t t = 0; t < thetas.size(); ++t)
      lhs[t] += r * dot(thetas[t], y);
  }
  chk.integral_r = int_r * vol;
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    MomentCheckRow row;
    row.theta = thetas[t];
    row.lhs = lhs[t] * vol;
    row.rhs = dot(alpha, thetas[t]) * chk.second_moment;
    chk.rows.push_back(row);
    chk.max_discrepancy =
        std::max(chk.max_discrepancy, std::abs(row.lhs - row.rhs));
  }
  return chk;
}

}  // namespace qdsm
