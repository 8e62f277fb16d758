#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qdsm/analysis.hpp"
#include "qdsm/inversion.hpp"

namespace qdsm {

/// Which phantom to build and with which free parameters. Only the fields
/// relevant to the named phantom are read.
struct PhantomSpec {
  std::string name = "gaussian_bump";
  Complex amplitude{1e-2, 0.0};  // gaussian_bump
  Point center{};                // gaussian_bump
  double decay = 100.0;          // gaussian_bump
  double scale = 1e-2;           // shepp_logan_2d, smooth_3d
  bool hollow = false;           // cross_3d
};

/// One image to render from a field: which complex part, and (for 3D
/// fields) which axis-aligned plane.
struct SliceSpec {
  std::string part = "re";  // "re", "im" or "abs"
  int axis = 2;             // 3D only: axis normal to the slice
  double coordinate = 0.0;  // 3D only: must hit a grid plane
};

/// Full description of a pipeline run, loaded from JSON.
struct RunConfig {
  int dim = 2;
  PhantomSpec phantom;
  MeasurementGeometry geometry;
  int n_directions = 64;
  double k_min = 1.0, k_max = 41.0;
  int n_k = 41;
  ForwardModel model = ForwardModel::Born;
  SamplingGrid forward_grid;
  SamplingGrid sampling;
  double delta = 0.0;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string input_measurements;  // invert subcommand only
  std::vector<SliceSpec> slices;
  nlohmann::json raw;  // parsed config, echoed into the manifest
};

/// Parses a JSON config file and applies --set overrides (dotted paths,
/// values parsed as JSON with string fallback). Throws config_error for
/// unreadable files, malformed JSON, wrong types, or invalid values.
RunConfig load_config(const std::string& path,
                      const std::vector<std::string>& overrides);

/// Consistency checks that need more than one field (grid coverage of the
/// phantom support, near radius vs support radius, solver size caps...).
/// Throws config_error.
void validate_config(const RunConfig& cfg);

ContrastPhantom make_phantom(const PhantomSpec& spec, int dim);

/// --- field and measurement serialization (dual text + binary format) ---

/// Writes base + ".txt" (commented header, one "coords re im" row per grid
/// point, 17 significant digits) and base + ".bin" (magic "QDSMFLD1",
/// little-endian u64 dim/counts, f64 extents, interleaved re/im f64).
void export_field(const ComplexField& f, const std::string& base);
ComplexField import_field(const std::string& path);

/// Same convention for measurements: base + ".txt" / ".bin" with magic
/// "QDSMMEA1" carrying geometry, directions, wavenumbers, noise level and
/// seed alongside the data matrix.
void export_measurements(const MeasurementSet& ms, const std::string& base);
MeasurementSet import_measurements(const std::string& path);

/// Renders one slice of the field as a plain-text PPM (P3), one pixel per
/// grid point, top row = largest vertical coordinate. A symmetric diverging
/// colormap maps [min, max] of the rendered part through blue-grey-red; a
/// sidecar base + ".range.txt" records the value range and color anchors.
/// For 3D fields the slice coordinate must match a grid plane to 1e-9;
/// otherwise std::invalid_argument names the two nearest planes.
void render_slice(const ComplexField& f, const SliceSpec& slice,
                  const std::string& base);

/// FNV-1a 64-bit content hash, as 16 hex digits.
std::string fnv1a64_file(const std::string& path);

/// Runs phantom -> synthesize -> add_noise -> indicator -> rel_errors and
/// writes every artifact (measurements, truth and reconstruction fields,
/// error report, slice images, manifest with a content hash per artifact)
/// under cfg.output_dir. Returns the manifest.
nlohmann::json run_pipeline(const RunConfig& cfg);

/// Sub-steps used by the CLI subcommands.
nlohmann::json run_phantom_stage(const RunConfig& cfg);
nlohmann::json run_synthesize_stage(const RunConfig& cfg);
nlohmann::json run_invert_stage(const RunConfig& cfg);

/// Built-in self checks (quadrature identities, solver postconditions,
/// transform sanity). Returns the number of failed checks and prints one
/// line per check.
int run_validate();

}  // namespace qdsm
