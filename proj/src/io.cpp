#include "qdsm/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdsm/specialfun.hpp"

namespace qdsm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char field_magic[8] = {'Q', 'D', 'S', 'M', 'F', 'L', 'D', '1'};
constexpr char meas_magic[8] = {'Q', 'D', 'S', 'M', 'M', 'E', 'A', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad_file(const std::string& path, const std::string& why) {
  throw config_error("cannot read '" + path + "': " + why);
}

}  // namespace

void export_field(const ComplexField& f, const std::string& base) {
  const SamplingGrid& g = f.grid;
  {
    std::ofstream os(base + ".txt");
    if (!os) throw config_error("cannot write '" + base + ".txt'");
    os << "# field\n# dim " << g.dim << "\n# counts";
    for (int d = 0; d < g.dim; ++d) os << ' ' << g.counts[d];
    os << "\n# lo";
    for (int d = 0; d < g.dim; ++d) os << ' ' << fmt17(g.lo[d]);
    os << "\n# hi";
    for (int d = 0; d < g.dim; ++d) os << ' ' << fmt17(g.hi[d]);
    os << "\n# columns:";
    for (int d = 0; d < g.dim; ++d) os << " x" << d + 1;
    os << " re im\n";
    for (std::size_t i = 0; i < f.values.size(); ++i) {
      const Point p = g.point(i);
      for (int d = 0; d < g.dim; ++d) os << fmt17(p[d]) << ' ';
      os << fmt17(f.values[i].real()) << ' ' << fmt17(f.values[i].imag())
         << '\n';
    }
  }
  {
    std::ofstream os(base + ".bin", std::ios::binary);
    if (!os) throw config_error("cannot write '" + base + ".bin'");
    os.write(field_magic, 8);
    write_u64(os, std::uint64_t(g.dim));
    for (int d = 0; d < g.dim; ++d) write_u64(os, std::uint64_t(g.counts[d]));
    for (int d = 0; d < g.dim; ++d) write_f64(os, g.lo[d]);
    for (int d = 0; d < g.dim; ++d) write_f64(os, g.hi[d]);
    for (const auto& v : f.values) {
      write_f64(os, v.real());
      write_f64(os, v.imag());
    }
  }
}

ComplexField import_field(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".txt") {
    std::ifstream is(path);
    if (!is) bad_file(path, "open failed");
    int dim = 0;
    std::array<int, 3> counts{1, 1, 1};
    std::array<double, 3> lo{}, hi{};
    std::string line;
    std::vector<Complex> values;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      if (line[0] == '#') {
        std::istringstream ls(line.substr(1));
        std::string tag;
        ls >> tag;
        if (tag == "dim") ls >> dim;
        else if (tag == "counts")
          for (int d = 0; d < dim; ++d) ls >> counts[d];
        else if (tag == "lo")
          for (int d = 0; d < dim; ++d) ls >> lo[d];
        else if (tag == "hi")
          for (int d = 0; d < dim; ++d) ls >> hi[d];
        continue;
      }
      std::istringstream ls(line);
      double c, re, im;
      for (int d = 0; d < dim; ++d) ls >> c;
      ls >> re >> im;
      if (!ls) bad_file(path, "malformed data row");
      values.emplace_back(re, im);
    }
    if (dim != 2 && dim != 3) bad_file(path, "missing or bad dim header");
    ComplexField f(make_grid(dim, lo, hi, counts));
    if (values.size() != f.grid.size())
      bad_file(path, "row count does not match counts header");
    f.values = std::move(values);
    return f;
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) bad_file(path, "open failed");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, field_magic, 8) != 0)
    bad_file(path, "bad magic (expected field container)");
  const int dim = int(read_u64(is));
  if (dim != 2 && dim != 3) bad_file(path, "bad dimension");
  std::array<int, 3> counts{1, 1, 1};
  std::array<double, 3> lo{}, hi{};
  for (int d = 0; d < dim; ++d) counts[d] = int(read_u64(is));
  for (int d = 0; d < dim; ++d) lo[d] = read_f64(is);
  for (int d = 0; d < dim; ++d) hi[d] = read_f64(is);
  if (!is) bad_file(path, "truncated header");
  ComplexField f(make_grid(dim, lo, hi, counts));
  for (auto& v : f.values) {
    const double re = read_f64(is);
    const double im = read_f64(is);
    v = Complex(re, im);
  }
  if (!is) bad_file(path, "truncated data");
  return f;
}

void export_measurements(const MeasurementSet& ms, const std::string& base) {
  const bool near = ms.geometry.kind == MeasurementGeometry::Kind::Near;
  {
    std::ofstream os(base + ".txt");
    if (!os) throw config_error("cannot write '" + base + ".txt'");
    os << "# measurements\n# dim " << ms.dim << "\n# kind "
       << (near ? "near" : "far") << "\n# radius "
       << fmt17(ms.geometry.radius) << "\n# n_dirs " << ms.n_dirs()
       << "\n# k_min " << fmt17(ms.wavenumbers.k_min) << " k_max "
       << fmt17(ms.wavenumbers.k_max) << " n_k " << ms.n_k() << "\n# delta "
       << fmt17(ms.noise_delta) << " seed " << ms.seed << "\n# columns: j m k";
    for (int d = 0; d < ms.dim; ++d) os << " theta" << d + 1;
    os << " re im\n";
    for (std::size_t j = 0; j < ms.n_dirs(); ++j)
      for (std::size_t m = 0; m < ms.n_k(); ++m) {
        os << j << ' ' << m << ' ' << fmt17(ms.wavenumbers.values[m]);
        for (int d = 0; d < ms.dim; ++d)
          os << ' ' << fmt17(ms.directions.dirs[j][d]);
        const Complex v = ms.at(j, m);
        os << ' ' << fmt17(v.real()) << ' ' << fmt17(v.imag()) << '\n';
      }
  }
  {
    std::ofstream os(base + ".bin", std::ios::binary);
    if (!os) throw config_error("cannot write '" + base + ".bin'");
    os.write(meas_magic, 8);
    write_u64(os, std::uint64_t(ms.dim));
    write_u64(os, near ? 1 : 0);
    write_u64(os, ms.n_dirs());
    write_u64(os, ms.n_k());
    write_u64(os, ms.seed);
    write_f64(os, ms.geometry.radius);
    write_f64(os, ms.wavenumbers.k_min);
    write_f64(os, ms.wavenumbers.k_max);
    write_f64(os, ms.noise_delta);
    for (const auto& d : ms.directions.dirs)
      for (int c = 0; c < ms.dim; ++c) write_f64(os, d[c]);
    for (const auto& v : ms.data) {
      write_f64(os, v.real());
      write_f64(os, v.imag());
    }
  }
}

MeasurementSet import_measurements(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) bad_file(path, "open failed");
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, meas_magic, 8) != 0)
    bad_file(path, "bad magic (expected measurement container)");
  MeasurementSet ms;
  ms.dim = int(read_u64(is));
  if (ms.dim != 2 && ms.dim != 3) bad_file(path, "bad dimension");
  const std::uint64_t kind = read_u64(is);
  if (kind > 1) bad_file(path, "bad geometry kind");
  ms.geometry.kind = kind == 1 ? MeasurementGeometry::Kind::Near
                               : MeasurementGeometry::Kind::Far;
  const std::size_t nj = read_u64(is);
  const std::size_t nm = read_u64(is);
  ms.seed = read_u64(is);
  ms.geometry.radius = read_f64(is);
  const double k_min = read_f64(is);
  const double k_max = read_f64(is);
  ms.noise_delta = read_f64(is);
  if (!is || nj == 0 || nm < 2 || nj > (1u << 24) || nm > (1u << 24))
    bad_file(path, "implausible header");
  ms.wavenumbers = make_wavenumbers(k_min, k_max, int(nm));
  ms.directions.dim = ms.dim;
  ms.directions.weight = (ms.dim == 2 ? 2.0 : 4.0) * pi / double(nj);
  ms.directions.dirs.resize(nj);
  for (auto& d : ms.directions.dirs) {
    d = {0.0, 0.0, 0.0};
    for (int c = 0; c < ms.dim; ++c) d[c] = read_f64(is);
  }
  ms.data.resize(nj * nm);
  for (auto& v : ms.data) {
    const double re = read_f64(is);
    const double im = read_f64(is);
    v = Complex(re, im);
  }
  if (!is) bad_file(path, "truncated data");
  return ms;
}

namespace {

struct Rgb {
  double r, g, b;
};

// symmetric diverging colormap: blue -> grey -> red
constexpr Rgb cmap_low{0.231, 0.298, 0.752};
constexpr Rgb cmap_mid{0.866, 0.866, 0.866};
constexpr Rgb cmap_high{0.752, 0.298, 0.231};

Rgb colormap(double t) {
  const auto lerp = [](const Rgb& a, const Rgb& b, double u) {
    return Rgb{a.r + (b.r - a.r) * u, a.g + (b.g - a.g) * u,
               a.b + (b.b - a.b) * u};
  };
  if (t <= 0.5) return lerp(cmap_low, cmap_mid, 2.0 * t);
  return lerp(cmap_mid, cmap_high, 2.0 * (t - 0.5));
}

double field_part(const Complex& v, const std::string& part) {
  if (part == "re") return v.real();
  if (part == "im") return v.imag();
  if (part == "abs") return std::abs(v);
  throw std::invalid_argument("render_slice: part must be re, im or abs");
}

}  // namespace

void render_slice(const ComplexField& f, const SliceSpec& slice,
                  const std::string& base) {
  const SamplingGrid& g = f.grid;
  int ah, av;          // horizontal/vertical image axes
  int fixed_idx = 0;   // grid index along the sliced axis (3D)
  if (g.dim == 2) {
    ah = 0;
    av = 1;
  } else {
    const int axis = slice.axis;
    if (axis < 0 || axis > 2)
      throw std::invalid_argument("render_slice: axis must be 0, 1 or 2");
    const double h = g.spacing(axis);
    const double pos = (slice.coordinate - g.lo[axis]) / h;
    const int near_i =
        std::max(0, std::min(g.counts[axis] - 1, int(std::lround(pos))));
    if (std::abs(g.coord(axis, near_i) - slice.coordinate) >
        1e-9 * std::max(1.0, std::abs(slice.coordinate))) {
      const int lo_i = std::max(0, std::min(g.counts[axis] - 2, int(pos)));
      throw std::invalid_argument(
          "render_slice: coordinate " + fmt17(slice.coordinate) +
          " is not a grid plane; nearest planes are " +
          fmt17(g.coord(axis, lo_i)) + " and " +
          fmt17(g.coord(axis, lo_i + 1)));
    }
    fixed_idx = near_i;
    ah = slice.axis == 0 ? 1 : 0;
    av = slice.axis == 2 ? 1 : 2;
  }

  const int w = g.counts[ah], hgt = g.counts[av];
  std::vector<double> vals(std::size_t(w) * hgt);
  double vmin = 0.0, vmax = 0.0;
  bool first = true;
  for (int iv = 0; iv < hgt; ++iv)
    for (int ih = 0; ih < w; ++ih) {
      std::array<int, 3> idx{0, 0, 0};
      idx[ah] = ih;
      idx[av] = iv;
      if (g.dim == 3) idx[slice.axis] = fixed_idx;
      const std::size_t flat =
          (std::size_t(idx[0]) * g.counts[1] + idx[1]) * g.counts[2] + idx[2];
      const double v = field_part(f.values[flat], slice.part);
      vals[std::size_t(iv) * w + ih] = v;
      if (first || v < vmin) vmin = v;
      if (first || v > vmax) vmax = v;
      first = false;
    }

  std::ofstream os(base + ".ppm");
  if (!os) throw config_error("cannot write '" + base + ".ppm'");
  os << "P3\n" << w << ' ' << hgt << "\n255\n";
  const double span = vmax - vmin;
  for (int iv = hgt - 1; iv >= 0; --iv) {  // top row = largest coordinate
    for (int ih = 0; ih < w; ++ih) {
      const double v = vals[std::size_t(iv) * w + ih];
      const double t = span > 0.0 ? (v - vmin) / span : 0.5;
      const Rgb c = colormap(t);
      os << int(std::lround(255.0 * c.r)) << ' '
         << int(std::lround(255.0 * c.g)) << ' '
         << int(std::lround(255.0 * c.b));
      os << (ih + 1 == w ? '\n' : ' ');
    }
  }
  os.close();

  std::ofstream sc(base + ".range.txt");
  if (!sc) throw config_error("cannot write '" + base + ".range.txt'");
  sc << "part " << slice.part << "\nmin " << fmt17(vmin) << "\nmax "
     << fmt17(vmax) << "\nanchor_low 0.231 0.298 0.752\nanchor_mid 0.866 "
        "0.866 0.866\nanchor_high 0.752 0.298 0.231\n";
}

std::string fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) bad_file(path, "open failed");
  std::uint64_t h = 14695981039346656037ULL;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= std::uint64_t(static_cast<unsigned char>(buf[i]));
      h *= 1099511628211ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016" PRIx64, h);
  return out;
}

ContrastPhantom make_phantom(const PhantomSpec& spec, int dim) {
  if (spec.name == "gaussian_bump")
    return gaussian_bump(dim, spec.amplitude, spec.center, spec.decay);
  if (spec.name == "complex_mountain_2d") {
    if (dim != 2) throw config_error("complex_mountain_2d is 2D only");
    return complex_mountain_2d();
  }
  if (spec.name == "cross_3d") {
    if (dim != 3) throw config_error("cross_3d is 3D only");
    return cross_3d(spec.hollow);
  }
  if (spec.name == "smooth_3d") {
    if (dim != 3) throw config_error("smooth_3d is 3D only");
    return smooth_3d(spec.scale);
  }
  if (spec.name == "shepp_logan_2d") {
    if (dim != 2) throw config_error("shepp_logan_2d is 2D only");
    return shepp_logan_2d(spec.scale);
  }
  if (spec.name == "blocks_sparse_2d") {
    if (dim != 2) throw config_error("blocks_sparse_2d is 2D only");
    return blocks_sparse_2d();
  }
  throw config_error("unknown phantom '" + spec.name + "'");
}

namespace {

const json& need(const json& j, const std::string& key,
                 const std::string& where) {
  if (!j.contains(key))
    throw config_error("config: missing key '" + where + key + "'");
  return j.at(key);
}

double need_num(const json& j, const std::string& key,
                const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number())
    throw config_error("config: '" + where + key + "' must be a number");
  return v.get<double>();
}

int need_int(const json& j, const std::string& key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer())
    throw config_error("config: '" + where + key + "' must be an integer");
  return v.get<int>();
}

std::string need_str(const json& j, const std::string& key,
                     const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string())
    throw config_error("config: '" + where + key + "' must be a string");
  return v.get<std::string>();
}

SamplingGrid parse_grid(const json& j, int dim, const std::string& where) {
  if (!j.is_object())
    throw config_error("config: '" + where + "' must be an object");
  const json& lo = need(j, "lo", where + ".");
  const json& hi = need(j, "hi", where + ".");
  const json& counts = need(j, "counts", where + ".");
  if (!lo.is_array() || int(lo.size()) != dim || !hi.is_array() ||
      int(hi.size()) != dim || !counts.is_array() ||
      int(counts.size()) != dim)
    throw config_error("config: '" + where +
                       "' lo/hi/counts must be arrays of length dim");
  std::array<double, 3> alo{}, ahi{};
  std::array<int, 3> ac{1, 1, 1};
  for (int d = 0; d < dim; ++d) {
    if (!lo[d].is_number() || !hi[d].is_number() ||
        !counts[d].is_number_integer())
      throw config_error("config: '" + where + "' entries have wrong types");
    alo[std::size_t(d)] = lo[d].get<double>();
    ahi[std::size_t(d)] = hi[d].get<double>();
    ac[std::size_t(d)] = counts[d].get<int>();
  }
  try {
    return make_grid(dim, alo, ahi, ac);
  } catch (const std::invalid_argument& e) {
    throw config_error("config: '" + where + "': " + e.what());
  }
}

Point parse_point(const json& j, int dim, const std::string& where) {
  if (!j.is_array() || int(j.size()) != dim)
    throw config_error("config: '" + where + "' must be an array of length " +
                       std::to_string(dim));
  Point p{0.0, 0.0, 0.0};
  for (int d = 0; d < dim; ++d) {
    if (!j[d].is_number())
      throw config_error("config: '" + where + "' entries must be numbers");
    p[std::size_t(d)] = j[d].get<double>();
  }
  return p;
}

}  // namespace

RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides) {
  json j;
  {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file '" + path + "'");
    try {
      is >> j;
    } catch (const json::parse_error& e) {
      throw config_error("config '" + path + "' is not valid JSON: " +
                         e.what());
    }
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw config_error("--set expects key.path=value, got '" + ov + "'");
    const std::string keypath = ov.substr(0, eq);
    const std::string valstr = ov.substr(eq + 1);
    json val;
    try {
      val = json::parse(valstr);
    } catch (const json::parse_error&) {
      val = valstr;  // bare strings are allowed unquoted
    }
    json* cur = &j;
    std::size_t pos = 0;
    while (true) {
      const auto dot = keypath.find('.', pos);
      const std::string part = keypath.substr(
          pos, dot == std::string::npos ? std::string::npos : dot - pos);
      if (part.empty())
        throw config_error("--set: empty path component in '" + keypath + "'");
      if (dot == std::string::npos) {
        (*cur)[part] = val;
        break;
      }
      cur = &(*cur)[part];
      pos = dot + 1;
    }
  }

  RunConfig cfg;
  cfg.raw = j;
  cfg.dim = need_int(j, "dim", "");
  if (cfg.dim != 2 && cfg.dim != 3)
    throw config_error("config: 'dim' must be 2 or 3");

  const json& ph = need(j, "phantom", "");
  cfg.phantom.name = need_str(ph, "name", "phantom.");
  if (ph.contains("amplitude")) {
    const json& a = ph.at("amplitude");
    if (a.is_number()) {
      cfg.phantom.amplitude = Complex(a.get<double>(), 0.0);
    } else if (a.is_array() && a.size() == 2 && a[0].is_number() &&
               a[1].is_number()) {
      cfg.phantom.amplitude = Complex(a[0].get<double>(), a[1].get<double>());
    } else {
      throw config_error(
          "config: 'phantom.amplitude' must be a number or [re, im]");
    }
  }
  if (ph.contains("center"))
    cfg.phantom.center = parse_point(ph.at("center"), cfg.dim,
                                     "phantom.center");
  if (ph.contains("decay")) cfg.phantom.decay = need_num(ph, "decay", "phantom.");
  if (ph.contains("scale")) cfg.phantom.scale = need_num(ph, "scale", "phantom.");
  if (ph.contains("hollow")) {
    if (!ph.at("hollow").is_boolean())
      throw config_error("config: 'phantom.hollow' must be a boolean");
    cfg.phantom.hollow = ph.at("hollow").get<bool>();
  }
  try {
    make_phantom(cfg.phantom, cfg.dim);  // reject unknown names/params early
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: phantom: ") + e.what());
  }

  const json& ge = need(j, "geometry", "");
  const std::string kind = need_str(ge, "kind", "geometry.");
  if (kind == "far") {
    cfg.geometry.kind = MeasurementGeometry::Kind::Far;
  } else if (kind == "near") {
    cfg.geometry.kind = MeasurementGeometry::Kind::Near;
    cfg.geometry.radius = need_num(ge, "radius", "geometry.");
    if (!(cfg.geometry.radius > 0.0))
      throw config_error("config: 'geometry.radius' must be positive");
  } else {
    throw config_error("config: 'geometry.kind' must be \"far\" or \"near\"");
  }

  cfg.n_directions = need_int(j, "directions", "");
  if (cfg.n_directions < 1)
    throw config_error("config: 'directions' must be >= 1");

  const json& wn = need(j, "wavenumbers", "");
  cfg.k_min = need_num(wn, "k_min", "wavenumbers.");
  cfg.k_max = need_num(wn, "k_max", "wavenumbers.");
  cfg.n_k = need_int(wn, "count", "wavenumbers.");
  try {
    make_wavenumbers(cfg.k_min, cfg.k_max, cfg.n_k);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: 'wavenumbers': ") + e.what());
  }

  if (j.contains("model")) {
    const std::string m = need_str(j, "model", "");
    if (m == "born") cfg.model = ForwardModel::Born;
    else if (m == "lippmann_schwinger")
      cfg.model = ForwardModel::LippmannSchwinger;
    else
      throw config_error(
          "config: 'model' must be \"born\" or \"lippmann_schwinger\"");
  }

  cfg.forward_grid = parse_grid(need(j, "forward_grid", ""), cfg.dim,
                                "forward_grid");
  cfg.sampling = parse_grid(need(j, "sampling_grid", ""), cfg.dim,
                            "sampling_grid");

  if (j.contains("noise")) {
    const json& no = j.at("noise");
    cfg.delta = need_num(no, "delta", "noise.");
    if (cfg.delta < 0.0)
      throw config_error("config: 'noise.delta' must be >= 0");
    if (no.contains("seed")) {
      if (!no.at("seed").is_number_unsigned() &&
          !no.at("seed").is_number_integer())
        throw config_error("config: 'noise.seed' must be an integer");
      cfg.seed = no.at("seed").get<std::uint64_t>();
    }
  }

  if (j.contains("output_dir")) cfg.output_dir = need_str(j, "output_dir", "");
  if (j.contains("input_measurements"))
    cfg.input_measurements = need_str(j, "input_measurements", "");

  if (j.contains("slices")) {
    const json& sl = j.at("slices");
    if (!sl.is_array())
      throw config_error("config: 'slices' must be an array");
    for (const auto& s : sl) {
      SliceSpec sp;
      sp.part = need_str(s, "part", "slices[].");
      if (sp.part != "re" && sp.part != "im" && sp.part != "abs")
        throw config_error("config: slice part must be re, im or abs");
      if (cfg.dim == 3) {
        sp.axis = need_int(s, "axis", "slices[].");
        if (sp.axis < 0 || sp.axis > 2)
          throw config_error("config: slice axis must be 0, 1 or 2");
        sp.coordinate = need_num(s, "coordinate", "slices[].");
      }
      cfg.slices.push_back(sp);
    }
  } else {
    SliceSpec re, im;
    re.part = "re";
    im.part = "im";
    if (cfg.dim == 3) re.axis = im.axis = 2, re.coordinate = im.coordinate = 0.0;
    cfg.slices = {re, im};
  }
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  ContrastPhantom ph;
  try {
    ph = make_phantom(cfg.phantom, cfg.dim);
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("config: phantom: ") + e.what());
  }
  for (int d = 0; d < cfg.dim; ++d) {
    if (cfg.forward_grid.lo[d] > -ph.support_box[d] + 1e-12 ||
        cfg.forward_grid.hi[d] < ph.support_box[d] - 1e-12)
      throw config_error(
          "config: forward_grid does not cover the phantom support");
  }
  if (cfg.geometry.kind == MeasurementGeometry::Kind::Near &&
      !(cfg.geometry.radius > ph.support_radius))
    throw config_error(
        "config: geometry.radius must exceed the phantom support radius (" +
        fmt17(ph.support_radius) + ")");
  if (cfg.model == ForwardModel::LippmannSchwinger) {
    const int cap = cfg.dim == 2 ? 64 : 24;
    for (int d = 0; d < cfg.dim; ++d)
      if (cfg.forward_grid.counts[d] > cap)
        throw config_error(
            "config: full-model forward grid is capped at " +
            std::to_string(cap) + " points per axis (dense solver size)");
  }
}

namespace {

// Wraps a pipeline stage so failures carry the stage name while keeping
// their type (and thus the CLI exit code).
template <class F>
auto run_stage(const char* stage, F&& fn) {
  try {
    return fn();
  } catch (const config_error& e) {
    throw config_error(std::string("stage ") + stage + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error(std::string("stage ") + stage + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw config_error(std::string("stage ") + stage + ": " + e.what());
  }
}

json artifact_entry(const fs::path& file) {
  json a;
  a["file"] = file.filename().string();
  a["bytes"] = fs::file_size(file);
  a["fnv1a64"] = fnv1a64_file(file.string());
  return a;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream os(dir / "run_manifest.json");
  if (!os)
    throw config_error("cannot write '" + (dir / "run_manifest.json").string() +
                       "'");
  os << manifest.dump(2) << '\n';
}

std::string slice_suffix(const RunConfig& cfg, const SliceSpec& s) {
  std::string name = "_" + s.part;
  if (cfg.dim == 3) {
    name += "_x" + std::to_string(s.axis + 1);
    std::ostringstream c;
    c << s.coordinate;
    name += "_" + c.str();
  }
  return name;
}

void render_all_slices(const RunConfig& cfg, const ComplexField& f,
                       const fs::path& dir, const std::string& stem,
                       json& artifacts) {
  for (const auto& s : cfg.slices) {
    const std::string base = (dir / (stem + slice_suffix(cfg, s))).string();
    render_slice(f, s, base);
    artifacts.push_back(artifact_entry(base + ".ppm"));
    artifacts.push_back(artifact_entry(base + ".range.txt"));
  }
}

MeasurementSet synthesize_from_config(const RunConfig& cfg,
                                      const ContrastPhantom& ph) {
  const DirectionSet dirs = cfg.dim == 2
                                ? uniform_circle_directions(cfg.n_directions)
                                : fibonacci_sphere_directions(cfg.n_directions);
  const WavenumberSet ks = make_wavenumbers(cfg.k_min, cfg.k_max, cfg.n_k);
  return synthesize(ph, cfg.geometry, dirs, ks, cfg.forward_grid, cfg.model,
                    Exec::Fast);
}

json error_report_json(const ErrorReport& rep, const H2Norm& h2, double l2,
                       const RunConfig& cfg) {
  json e;
  e["rel_l2"] = rep.rel_l2;
  e["rel_linf"] = rep.rel_linf;
  e["absolute"] = rep.absolute;
  if (rep.truncation) e["truncation_bound"] = *rep.truncation;
  e["h2_norm"] = h2.value;
  e["h2_boundary_warning"] = h2.boundary_warning;
  e["l2_norm"] = l2;
  e["noise_delta"] = cfg.delta;
  e["seed"] = cfg.seed;
  if (!rep.metadata.empty()) e["note"] = rep.metadata;
  return e;
}

}  // namespace

json run_phantom_stage(const RunConfig& cfg) {
  validate_config(cfg);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  json artifacts = json::array();

  const ContrastPhantom ph =
      run_stage("phantom", [&] { return make_phantom(cfg.phantom, cfg.dim); });
  const ComplexField truth =
      run_stage("rasterize", [&] { return rasterize(ph, cfg.sampling); });
  run_stage("export", [&] {
    export_field(truth, (dir / "truth").string());
    artifacts.push_back(artifact_entry(dir / "truth.txt"));
    artifacts.push_back(artifact_entry(dir / "truth.bin"));
    render_all_slices(cfg, truth, dir, "truth", artifacts);
    return 0;
  });

  json manifest;
  manifest["command"] = "phantom";
  manifest["config"] = cfg.raw;
  manifest["phantom_label"] = ph.label;
  manifest["phantom_notes"] = ph.notes;
  manifest["support_radius"] = ph.support_radius;
  manifest["artifacts"] = artifacts;
  write_manifest(dir, manifest);
  return manifest;
}

json run_synthesize_stage(const RunConfig& cfg) {
  validate_config(cfg);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  json artifacts = json::array();

  const ContrastPhantom ph =
      run_stage("phantom", [&] { return make_phantom(cfg.phantom, cfg.dim); });
  MeasurementSet ms = run_stage(
      "synthesize", [&] { return synthesize_from_config(cfg, ph); });
  ms = run_stage("add_noise",
                 [&] { return add_noise(ms, cfg.delta, cfg.seed); });
  run_stage("export", [&] {
    export_measurements(ms, (dir / "measurements").string());
    artifacts.push_back(artifact_entry(dir / "measurements.txt"));
    artifacts.push_back(artifact_entry(dir / "measurements.bin"));
    return 0;
  });

  json manifest;
  manifest["command"] = "synthesize";
  manifest["config"] = cfg.raw;
  manifest["n_data"] = ms.data.size();
  manifest["artifacts"] = artifacts;
  write_manifest(dir, manifest);
  return manifest;
}

json run_invert_stage(const RunConfig& cfg) {
  if (cfg.input_measurements.empty())
    throw config_error("config: 'input_measurements' is required to invert");
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  json artifacts = json::array();

  const MeasurementSet ms = run_stage(
      "import", [&] { return import_measurements(cfg.input_measurements); });
  const ComplexField rec = run_stage("indicator", [&] {
    return ms.geometry.kind == MeasurementGeometry::Kind::Far
               ? indicator_far(ms, cfg.sampling)
               : indicator_near(ms, cfg.sampling);
  });
  run_stage("export", [&] {
    export_field(rec, (dir / "reconstruction").string());
    artifacts.push_back(artifact_entry(dir / "reconstruction.txt"));
    artifacts.push_back(artifact_entry(dir / "reconstruction.bin"));
    render_all_slices(cfg, rec, dir, "reconstruction", artifacts);
    return 0;
  });

  json manifest;
  manifest["command"] = "invert";
  manifest["config"] = cfg.raw;
  manifest["artifacts"] = artifacts;
  write_manifest(dir, manifest);
  return manifest;
}

json run_pipeline(const RunConfig& cfg) {
  validate_config(cfg);
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  json artifacts = json::array();

  const ContrastPhantom ph =
      run_stage("phantom", [&] { return make_phantom(cfg.phantom, cfg.dim); });
  const ComplexField truth =
      run_stage("rasterize", [&] { return rasterize(ph, cfg.sampling); });
  MeasurementSet ms = run_stage(
      "synthesize", [&] { return synthesize_from_config(cfg, ph); });
  ms = run_stage("add_noise",
                 [&] { return add_noise(ms, cfg.delta, cfg.seed); });
  const ComplexField rec = run_stage("indicator", [&] {
    return ms.geometry.kind == MeasurementGeometry::Kind::Far
               ? indicator_far(ms, cfg.sampling)
               : indicator_near(ms, cfg.sampling);
  });

  // error report with the a-priori band-limitation bound; the contrast
  // norms are computed on the forward raster, whose box extends past the
  // support and keeps the padded transform honest
  ErrorReport rep;
  H2Norm h2;
  double l2 = 0.0;
  run_stage("errors", [&] {
    rep = rel_errors(rec, truth);
    const ComplexField wide = rasterize(ph, cfg.forward_grid);
    h2 = h2_norm(wide);
    l2 = l2_norm(wide);
    if (!rep.absolute)
      rep.truncation = truncation_bound(h2.value, l2, cfg.k_min, cfg.k_max,
                                        cfg.dim);
    return 0;
  });

  run_stage("export", [&] {
    export_measurements(ms, (dir / "measurements").string());
    artifacts.push_back(artifact_entry(dir / "measurements.txt"));
    artifacts.push_back(artifact_entry(dir / "measurements.bin"));
    export_field(truth, (dir / "truth").string());
    artifacts.push_back(artifact_entry(dir / "truth.txt"));
    artifacts.push_back(artifact_entry(dir / "truth.bin"));
    export_field(rec, (dir / "reconstruction").string());
    artifacts.push_back(artifact_entry(dir / "reconstruction.txt"));
    artifacts.push_back(artifact_entry(dir / "reconstruction.bin"));
    render_all_slices(cfg, truth, dir, "truth", artifacts);
    render_all_slices(cfg, rec, dir, "reconstruction", artifacts);
    json e = error_report_json(rep, h2, l2, cfg);
    {
      std::ofstream os(dir / "error_report.json");
      if (!os) throw config_error("cannot write error_report.json");
      os << e.dump(2) << '\n';
    }
    artifacts.push_back(artifact_entry(dir / "error_report.json"));
    return 0;
  });

  json manifest;
  manifest["command"] = "pipeline";
  manifest["config"] = cfg.raw;
  manifest["phantom_label"] = ph.label;
  manifest["support_radius"] = ph.support_radius;
  manifest["summary"] = error_report_json(rep, h2, l2, cfg);
  manifest["artifacts"] = artifacts;
  write_manifest(dir, manifest);
  return manifest;
}

int run_validate() {
  int failures = 0;
  auto check = [&](const char* name, bool ok, const std::string& detail) {
    std::printf("%s %s (%s)\n", ok ? "[PASS]" : "[FAIL]", name,
                detail.c_str());
    if (!ok) ++failures;
  };

  {
    const DirectionSet ds = uniform_circle_directions(64);
    double werr = std::abs(ds.weight * double(ds.dirs.size()) - 2.0 * pi);
    check("circle_weights", werr < 1e-12,
          "weight*n - 2pi = " + fmt17(werr));
  }
  {
    const DirectionSet ds = fibonacci_sphere_directions(256);
    double s3 = 0.0;
    double nerr = 0.0;
    for (const auto& d : ds.dirs) {
      s3 += ds.weight * d[2];
      nerr = std::max(nerr, std::abs(norm2(d) - 1.0));
    }
    check("sphere_lattice",
          nerr < 1e-12 && std::abs(s3 + 4.0 * pi / 256.0) < 1e-12,
          "max |1-|d|| = " + fmt17(nerr));
  }
  {
    const Complex g = gamma_n(2, 1.0);
    const double err = std::abs(
        g - Complex(0.1410473958869391, 0.1410473958869391));
    check("gamma_2", err < 1e-14, "err = " + fmt17(err));
  }
  {
    double worst = 0.0;
    for (double x : {0.5, 5.0, 50.0}) {
      const Complex h0 = hankel0_h1(x);
      const Complex h1 = hankel1_h1(x);
      // J1 Y0 - J0 Y1 = 2/(pi x)
      const double w =
          h1.real() * h0.imag() - h0.real() * h1.imag() - 2.0 / (pi * x);
      worst = std::max(worst, std::abs(w) * pi * x / 2.0);
    }
    check("hankel_wronskian", worst < 1e-10, "rel err = " + fmt17(worst));
  }
  {
    const ContrastPhantom ph =
        gaussian_bump(2, Complex(0.01, 0.0), {0.0, 0.0, 0.0}, 100.0);
    const SamplingGrid g =
        make_grid(2, {-0.7, -0.7, 0.0}, {0.7, 0.7, 0.0}, {161, 161, 1});
    const ComplexField raster = rasterize(ph, g);
    const double k = 5.0;
    const Complex got = born_far_backscatter(raster, {1.0, 0.0, 0.0}, k);
    const Complex want =
        k * k * gamma_n(2, k) * 0.01 * (pi / 100.0) * std::exp(-k * k / 100.0);
    const double err = std::abs(got - want) / std::abs(want);
    check("born_far_gaussian", err < 1e-6, "rel err = " + fmt17(err));
  }
  {
    bool ok = true;
    std::string detail;
    try {
      const ContrastPhantom ph =
          gaussian_bump(2, Complex(0.04, 0.0), {0.0, 0.0, 0.0}, 100.0);
      const SamplingGrid g = make_grid(2, {-0.35, -0.35, 0.0},
                                       {0.35, 0.35, 0.0}, {24, 24, 1});
      const ComplexField raster = rasterize(ph, g);
      Incident inc{Incident::Kind::PlaneWave, {1.0, 0.0, 0.0}};
      const LSSolution sol = ls_total_field(raster, inc, 3.0);
      detail = "residual = " + fmt17(sol.residual);
      ok = sol.residual <= 1e-9;
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    check("ls_solver", ok, detail);
  }
  {
    const ContrastPhantom ph =
        gaussian_bump(2, Complex(0.01, 0.0), {0.0, 0.0, 0.0}, 100.0);
    const SamplingGrid g =
        make_grid(2, {-0.7, -0.7, 0.0}, {0.7, 0.7, 0.0}, {257, 257, 1});
    const H2Norm h = h2_norm(rasterize(ph, g));
    const double want = 0.056560181619960084;
    const double err = std::abs(h.value - want) / want;
    check("h2_norm_gaussian", err < 0.01 && !h.boundary_warning,
          "rel err = " + fmt17(err));
  }
  {
    MeasurementSet ms;
    ms.dim = 2;
    ms.directions = uniform_circle_directions(8);
    ms.wavenumbers = make_wavenumbers(1.0, 5.0, 5);
    ms.data.assign(ms.n_dirs() * ms.n_k(), Complex(1.0, -0.5));
    const MeasurementSet noisy = add_noise(ms, 0.05, 7);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ms.data.size(); ++i) {
      num += std::norm(noisy.data[i] - ms.data[i]);
      den += std::norm(ms.data[i]);
    }
    const double realized = std::sqrt(num / den);
    check("noise_calibration", std::abs(realized - 0.05) < 1e-12,
          "realized delta = " + fmt17(realized));
  }
  return failures;
}

}  // namespace qdsm
