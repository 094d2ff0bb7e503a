// Experiment runner. Exit codes: 0 ok, 1 config error, 2 component error, 3 failed checks.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "scalebridge.hpp"

namespace sb = scalebridge;

int main(int argc, char** argv) {
  CLI::App app{"scalebridge experiment runner"};
  std::string config_path, out_dir, experiment;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  bool print_config = false;
  app.add_option("-c,--config", config_path, "JSON run config or a manifest.json from an earlier run")
      ->check(CLI::ExistingFile);
  app.add_option("-e,--experiment", experiment, "sample|committee|validity|abtest|mix|upscale|mdcheck");
  app.add_option("-s,--seed", seed, "master seed");
  app.add_option("-o,--out", out_dir, "output directory (overrides SCALEBRIDGE_OUTPUT_DIR and the config)");
  app.add_option("-w,--workers", workers, "truth-model worker pool size")->check(CLI::PositiveNumber);
  app.add_flag("--print-config", print_config, "print the resolved config and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  sb::RunConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = sb::load_run_config(config_path);
    } else if (!experiment.empty()) {
      cfg = sb::run_config_from_json(sb::json{{"experiment", experiment}});
    } else {
      std::cerr << "error: either --config or --experiment is required\n";
      return 1;
    }
    if (!experiment.empty()) cfg.experiment = sb::experiment_from_string(experiment);
    if (const char* env = std::getenv("SCALEBRIDGE_OUTPUT_DIR"); env && *env) cfg.output_dir = env;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = *workers;
  } catch (const sb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  if (print_config) {
    std::cout << sb::to_json(cfg).dump(2) << '\n';
    return 0;
  }

  try {
    const auto outcome = sb::run_experiment(cfg, cfg.output_dir);
    for (const auto& [name, ok] : outcome.checks) std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    std::cout << "outputs written to " << cfg.output_dir << '\n';
    return outcome.passed() ? 0 : 3;
  } catch (const sb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
