#include "charflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"charflow: first-order PDEs by characteristics on the 1-jet space"};
  std::string config_path;
  charflow::cli::RunOptions options;
  app.add_option("--config", config_path, "run configuration (YAML)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", options.out_prefix, "output path prefix for CSVs and the report");
  app.add_option("--seed", options.seed, "seed for randomized invariant sampling");
  app.add_option("--tol-scale", options.tol_scale, "multiplier applied to every tolerance")
      ->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = charflow::cli::load_config(config_path);
    const auto result = charflow::cli::run(config, options);
    std::cout << result.report;
    if (result.status != 0) std::cerr << "charflow: " << result.failures << " check(s) failed\n";
    return result.status;
  } catch (const std::exception& e) {
    std::cerr << "charflow: " << e.what() << '\n';
    return 2;
  }
}
