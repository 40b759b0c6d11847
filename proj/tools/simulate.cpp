#include <CLI11.hpp>

#include <iostream>

#include "hymech/scenario.hpp"

int main(int argc, char** argv) {
  using namespace hymech;
  CLI::App app{"Simulate a hybrid forced mechanical system from a scenario file"};
  std::string config;
  std::optional<std::string> mode, prefix;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  app.add_option("config", config, "Scenario file")->required();
  app.add_option("--mode", mode, "full | reduced | both | classify | symcheck");
  app.add_option("--out", prefix, "Output path prefix");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--tol", tol, "Relative integration tolerance (abs_tol = tol / 100)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kValidation;
  }

  try {
    cli::Scenario sc = cli::load_scenario(config);
    if (mode) sc.mode = cli::parse_mode(*mode);
    if (prefix) sc.prefix = *prefix;
    if (seed) sc.numerics.seed = *seed;
    if (tol) {
      sc.numerics.rel_tol = *tol;
      sc.numerics.abs_tol = *tol * 1e-2;
    }
    const cli::RunOutcome out = cli::run_scenario(sc);
    for (const auto& [k, v] : out.report) std::cout << k << ": " << v << '\n';
    return out.exit_code;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return cli::kValidation;
  } catch (const std::exception& e) {
    std::cerr << "simulation failure: " << e.what() << '\n';
    return cli::kSimulationFailure;
  }
}
