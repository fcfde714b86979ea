#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "btainla/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal latent Gaussian model fitting with block-tridiagonal-arrowhead solvers"};
  app.require_subcommand(1);

  std::string config, out_dir, data_dir, out_file;
  std::size_t workers = 0;

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset and truth record");
  simulate->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory")->required();

  auto* fit = app.add_subcommand("fit", "Fit the model to a dataset");
  fit->add_option("--config", config, "Run configuration")->required()->check(CLI::ExistingFile);
  fit->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--out", out_dir, "Report directory")->required();
  auto* workers_opt = fit->add_option("--workers", workers, "Worker threads (default: BTA_INLA_WORKERS)")
                          ->check(CLI::PositiveNumber);

  auto* benchmark = app.add_subcommand("benchmark", "Time factorization and selected inversion");
  benchmark->add_option("--config", config, "Benchmark ladder")->required()->check(CLI::ExistingFile);
  benchmark->add_option("--out", out_file, "CSV output file")->required();

  auto* selftest = app.add_subcommand("selftest", "Run the bundled oracle comparisons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : btainla::cli::exit_code::error;
  }

  if (simulate->parsed()) return btainla::cli::cmd_simulate(config, out_dir, std::cout, std::cerr);
  if (fit->parsed()) {
    std::optional<std::size_t> flag;
    if (workers_opt->count() > 0) flag = workers;
    return btainla::cli::cmd_fit(config, data_dir, out_dir, flag, std::cout, std::cerr);
  }
  if (benchmark->parsed()) return btainla::cli::cmd_benchmark(config, out_file, std::cout, std::cerr);
  if (selftest->parsed()) return btainla::cli::cmd_selftest(std::cout);
  return btainla::cli::exit_code::error;
}
