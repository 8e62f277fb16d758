#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdsm/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

// exit codes: 0 success, 2 configuration error, 3 numerical failure
constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numeric = 3;

void apply_thread_env() {
#ifdef _OPENMP
  if (const char* env = std::getenv("QDSM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
  // absent: OpenMP default, all cores
#endif
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration")
      ->required();
  cmd->add_option("--set", opts.overrides,
                  "override a config entry: dotted.path=json_value");
}

int dispatch(const std::string& name, const CommonOpts& opts) {
  const qdsm::RunConfig cfg =
      qdsm::load_config(opts.config_path, opts.overrides);
  nlohmann::json manifest;
  if (name == "phantom") manifest = qdsm::run_phantom_stage(cfg);
  else if (name == "synthesize") manifest = qdsm::run_synthesize_stage(cfg);
  else if (name == "invert") manifest = qdsm::run_invert_stage(cfg);
  else manifest = qdsm::run_pipeline(cfg);
  std::printf("%s: wrote %zu artifacts to %s\n", name.c_str(),
              manifest.at("artifacts").size(), cfg.output_dir.c_str());
  if (manifest.contains("summary")) {
    const auto& s = manifest.at("summary");
    std::printf("  rel_l2 = %.6g  rel_linf = %.6g%s\n",
                s.at("rel_l2").get<double>(), s.at("rel_linf").get<double>(),
                s.at("absolute").get<bool>() ? " (absolute: zero truth)" : "");
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_env();

  CLI::App app{
      "qdsm: quantitative sampling reconstruction from multi-frequency "
      "backscattering data"};
  app.require_subcommand(1);

  CommonOpts phantom_opts, synth_opts, invert_opts, pipe_opts;
  CLI::App* cmd_phantom = app.add_subcommand(
      "phantom", "rasterize the configured contrast and render it");
  add_common(cmd_phantom, phantom_opts);
  CLI::App* cmd_synth = app.add_subcommand(
      "synthesize", "simulate backscattering measurements (plus noise)");
  add_common(cmd_synth, synth_opts);
  CLI::App* cmd_invert = app.add_subcommand(
      "invert", "reconstruct a contrast from stored measurements");
  add_common(cmd_invert, invert_opts);
  CLI::App* cmd_pipe = app.add_subcommand(
      "pipeline", "phantom, synthesis, noise, inversion and error report");
  add_common(cmd_pipe, pipe_opts);
  CLI::App* cmd_validate = app.add_subcommand(
      "validate", "run built-in numerical self checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    if (cmd_validate->parsed()) {
      const int failures = qdsm::run_validate();
      if (failures > 0) {
        std::fprintf(stderr, "validate: %d check(s) failed\n", failures);
        return exit_numeric;
      }
      std::printf("validate: all checks passed\n");
      return exit_ok;
    }
    if (cmd_phantom->parsed()) return dispatch("phantom", phantom_opts);
    if (cmd_synth->parsed()) return dispatch("synthesize", synth_opts);
    if (cmd_invert->parsed()) return dispatch("invert", invert_opts);
    return dispatch("pipeline", pipe_opts);
  } catch (const qdsm::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const qdsm::numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return exit_numeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return exit_numeric;
  }
}
