#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/error.hpp"
#include "core/linalg.hpp"
#include "lp/linear_program.hpp"

namespace caus::io {

/// A command's JSON artifact plus any side files (suffix, content), e.g.
/// plot-ready CSVs.
struct CommandOutput {
  nlohmann::json artifact;
  std::vector<std::pair<std::string, std::string>> extras;
};

/// {path, sha256} of a file's current content.
nlohmann::json file_ref(const std::string& path);

/// Experiment description for cmd_compare. Relative paths resolve against
/// the directory of the config file.
struct RunConfig {
  std::string instance;
  std::string history;
  int k = 2;
  double epsilon = 0.05;
  int n_samples = 10000;
  int j = 8;
  std::string set = "caus";  // set type used by the epsilon sweep
  std::vector<Vector> covariates;  // one per period
  std::uint64_t fit_seed = 0;
  std::uint64_t calibration_seed = 1;
  std::uint64_t direction_seed = 0;
  std::uint64_t evaluation_seed = 2;
  std::uint64_t so_seed = 3;
  int so_scenarios = 50;
  int reliability_samples = 10000;
  std::vector<double> sweep_epsilons = {0.2, 0.1, 0.05, 0.01};
  double uos_lambda = 0.0;  // 0 picks the chi-square default
  double uos_phi = 0.0;     // 0 picks m
  double ccg_tolerance = 1e-4;
  int ccg_max_iterations = 30;
  lp::Backend backend = lp::default_backend();
};

RunConfig run_config_from_json(const nlohmann::json& doc, const std::string& base_dir = ".");

// Each command takes its options as a JSON object (field names match the
// CLI flags) and returns a self-describing artifact that records the
// content hashes of every input file.
CommandOutput cmd_fit(const nlohmann::json& options);
CommandOutput cmd_calibrate(const nlohmann::json& options);
CommandOutput cmd_build_set(const nlohmann::json& options);
CommandOutput cmd_solve(const nlohmann::json& options);
CommandOutput cmd_evaluate(const nlohmann::json& options);
CommandOutput cmd_compare(const nlohmann::json& options);
CommandOutput cmd_synth(const nlohmann::json& options);

/// Copy of an artifact without its "timing" members, for comparing runs.
nlohmann::json strip_timing(nlohmann::json artifact);

/// Process exit code for an error: 3 parse, 4 missing input, 5 I/O,
/// 6 iteration limit, 10 + code for everything else.
int exit_code(ErrorCode code);

}  // namespace caus::io
