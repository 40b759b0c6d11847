#pragma once

// Scenario files and their execution.
//
// A scenario is flat "key = value" text; '#' starts a comment. Vectors are
// comma- or space-separated. Keys:
//   model.name                disk_fixed | disk_moving | billiard | bouncing_particle
//   model.<param>             model parameters (see registered_parameters)
//   init.t                    initial time (default 0)
//   init.q, init.v            initial state in simulation coordinates
//   init.polar.q, init.polar.v  initial state in the polar chart (planar models)
//   t_end                     required
//   mode                      full | reduced | both | classify | symcheck
//   numerics.<field>          NumericsConfig overrides
//   output.prefix, output.samples, seed

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hymech/models.hpp"

namespace hymech::cli {

enum class Mode { full, reduced, both, classify, symcheck };
const char* to_string(Mode m);
Mode parse_mode(std::string_view s);

struct ParseError : ValidationError {
  ParseError(const std::string& source, int line, const std::string& what);
  int line;
};

struct Scenario {
  std::string model;
  std::map<std::string, double> params;
  double t0 = 0.0;
  std::optional<Vector> q, v, polar_q, polar_v;
  std::optional<double> t_end;
  Mode mode = Mode::full;
  NumericsConfig numerics;
  std::string prefix = "out/run";
  int samples = 2000;

  void validate() const;
};

std::vector<std::string> registered_models();
/// Parameter names accepted under model.* for a model, with defaults.
std::map<std::string, double> registered_parameters(const std::string& model);

Scenario parse_scenario(std::string_view text, const std::string& source = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

models::Model build_model(const Scenario& sc);
/// Initial state in simulation coordinates.
TangentState initial_state(const Scenario& sc, const models::Model& model);

enum ExitCode { kSuccess = 0, kValidation = 2, kSimulationFailure = 3, kZeno = 4 };

struct RunOutcome {
  int exit_code = kSuccess;
  std::vector<std::filesystem::path> files;
  /// Report lines as written to <prefix>_report.txt.
  std::vector<std::pair<std::string, std::string>> report;

  std::string value(const std::string& key) const;
};

/// Runs the scenario and writes its artifacts under the output prefix.
/// Validation problems throw ValidationError; simulation failures and Zeno
/// termination are reported through the exit code after writing partial outputs.
RunOutcome run_scenario(const Scenario& sc);

}  // namespace hymech::cli
