// Command-line front end. Every verb builds a JSON options object, hands it
// to caus_command() and writes the returned artifact plus side files.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "caus/caus.h"

namespace {

using nlohmann::json;

struct Common {
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string backend;
  bool quiet = false;
};

// <dir>/<stem>.<suffix> next to the artifact, or in the working directory
// when the artifact goes to stdout.
std::string extra_path(const std::string& out, const std::string& verb, const std::string& suffix) {
  if (out.empty() || out == "-") return verb + "." + suffix;
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + "." + suffix)).string();
}

// --covariates accepts inline JSON ("[[40,35],[55,50]]") or a file holding it.
json covariates_value(const std::string& arg) {
  std::string text = arg;
  if (arg.find('[') == std::string::npos) {
    std::ifstream f(arg);
    if (!f) throw CLI::ValidationError("--covariates", "cannot read " + arg);
    text.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
  }
  const json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) throw CLI::ValidationError("--covariates", "not valid JSON");
  return v.is_object() && v.contains("covariates") ? v.at("covariates") : v;
}

bool write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  return static_cast<bool>(f);
}

int run(const std::string& verb, json options, const Common& common) {
  if (common.seed) options["seed"] = *common.seed;
  if (!common.backend.empty()) options["backend"] = common.backend;
  char* raw = nullptr;
  const caus_status st = caus_command(verb.c_str(), options.dump().c_str(), &raw);
  if (st != CAUS_OK) {
    std::cerr << "caus " << verb << ": " << caus_status_name(st) << ": " << caus_last_error()
              << "\n";
    return caus_exit_code(st);
  }
  const json result = json::parse(raw);
  caus_string_free(raw);

  const std::string text = result.at("artifact").dump(2) + "\n";
  if (common.out.empty() || common.out == "-") {
    std::cout << text;
  } else if (!write_text(common.out, text)) {
    std::cerr << "caus " << verb << ": cannot write " << common.out << "\n";
    return caus_exit_code(CAUS_IO_ERROR);
  }
  for (const auto& [suffix, content] : result.at("extras").items()) {
    const auto path = extra_path(common.out, verb, suffix);
    if (!write_text(path, content.get<std::string>())) {
      std::cerr << "caus " << verb << ": cannot write " << path << "\n";
      return caus_exit_code(CAUS_IO_ERROR);
    }
    if (!common.quiet) std::cerr << "wrote " << path << "\n";
  }
  const auto& artifact = result.at("artifact");
  if (artifact.contains("status") && artifact["status"] == "iteration_limit") {
    std::cerr << "caus " << verb << ": gap tolerance not reached within the iteration cap\n";
    return caus_exit_code(CAUS_ITERATION_LIMIT);
  }
  return 0;
}

void add_common(CLI::App* cmd, Common& common, bool with_seed = true) {
  cmd->add_option("--out,-o", common.out, "Artifact path (default: stdout)");
  if (with_seed) cmd->add_option("--seed", common.seed, "Random seed");
  cmd->add_option("--backend", common.backend, "LP backend: highs or exact")
      ->check(CLI::IsMember({"highs", "exact"}));
  cmd->add_flag("--quiet,-q", common.quiet, "Do not report side files");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contextual uncertainty sets for robust unit commitment"};
  const auto positive = CLI::Range(1, std::numeric_limits<int>::max());
  app.set_version_flag("--version", std::string(caus_version()));
  app.require_subcommand(1);

  Common common;
  json options = json::object();
  std::string verb;

  // fit
  std::string history;
  int k = 2;
  auto* fit = app.add_subcommand("fit", "Fit a joint Gaussian mixture to a history CSV");
  fit->add_option("history", history, "History CSV")->required();
  fit->add_option("--k", k, "Number of mixture components")->check(positive);
  add_common(fit, common);
  fit->callback([&] {
    verb = "fit";
    options = {{"history", history}, {"k", k}};
  });

  // calibrate
  std::string model, covariates;
  double epsilon = 0.05;
  int ns = 10000;
  bool share_max = false;
  auto* cal = app.add_subcommand("calibrate", "Calibrate per-period radii by sampling");
  cal->add_option("model", model, "Model artifact")->required();
  cal->add_option("--covariates", covariates, "One covariate vector per period: inline JSON or a file")
      ->required();
  cal->add_option("--epsilon", epsilon, "Miscoverage level")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--ns", ns, "Calibration samples per period")->check(positive);
  cal->add_flag("--share-max", share_max, "Use the largest radius in every period");
  add_common(cal, common);
  cal->callback([&] {
    verb = "calibrate";
    options = {{"model", model},
               {"covariates", covariates_value(covariates)},
               {"epsilon", epsilon},
               {"n_samples", ns},
               {"share_max", share_max}};
  });

  // build-set
  std::string radius, set_kind = "caus";
  int j = 0;
  double uos_lambda = 0.0, uos_phi = 0.0;
  auto* build = app.add_subcommand("build-set", "Build the per-period uncertainty set");
  build->add_option("model", model, "Model artifact")->required();
  build->add_option("radius", radius, "Radius artifact")->required();
  build->add_option("--set", set_kind, "caus, box or uos")
      ->check(CLI::IsMember({"caus", "box", "uos"}));
  build->add_option("--j", j, "Number of polytope directions (0: default)");
  build->add_option("--uos-lambda", uos_lambda, "Ellipsoid scale for uos (0: default)");
  build->add_option("--uos-phi", uos_phi, "Budget for uos (0: m)");
  add_common(build, common);
  build->callback([&] {
    verb = "build-set";
    options = {{"model", model}, {"radius", radius},         {"set", set_kind},
               {"j", j},         {"uos_lambda", uos_lambda}, {"uos_phi", uos_phi}};
    if (common.seed) options["direction_seed"] = *common.seed;
  });

  // solve
  std::string instance, set_path, subproblem = "milp";
  double tolerance = 1e-4;
  int max_iterations = 30;
  auto* solve = app.add_subcommand("solve", "Solve the two-stage robust unit commitment");
  solve->add_option("instance", instance, "Instance JSON")->required();
  solve->add_option("set", set_path, "Set artifact")->required();
  solve->add_option("--tolerance", tolerance, "Relative gap tolerance");
  solve->add_option("--max-iterations", max_iterations, "Column-generation iteration cap")
      ->check(positive);
  solve->add_option("--subproblem", subproblem, "milp or enumerate")
      ->check(CLI::IsMember({"milp", "enumerate"}));
  add_common(solve, common, false);
  solve->callback([&] {
    verb = "solve";
    options = {{"instance", instance},
               {"set", set_path},
               {"tolerance", tolerance},
               {"max_iterations", max_iterations},
               {"subproblem", subproblem}};
  });

  // evaluate
  std::string solution;
  int n_eval = 10000;
  auto* eval = app.add_subcommand("evaluate", "Out-of-sample reliability of a commitment");
  eval->add_option("instance", instance, "Instance JSON")->required();
  eval->add_option("solution", solution, "Solution artifact")->required();
  eval->add_option("model", model, "Model artifact")->required();
  auto* cov_opt = eval->add_option("--covariates", covariates, "Covariate JSON file");
  eval->add_option("--radius", radius, "Radius artifact (supplies covariates)")
      ->excludes(cov_opt);
  eval->add_option("--n", n_eval, "Trajectories to sample")->check(positive);
  add_common(eval, common);
  eval->callback([&] {
    verb = "evaluate";
    options = {{"instance", instance}, {"solution", solution}, {"model", model}, {"n", n_eval}};
    if (!covariates.empty()) options["covariates"] = covariates_value(covariates);
    if (!radius.empty()) options["radius"] = radius;
  });

  // compare
  std::string config;
  auto* cmp = app.add_subcommand("compare", "Run DO, SO and the robust variants side by side");
  cmp->add_option("config", config, "Experiment config JSON")->required();
  add_common(cmp, common, false);
  cmp->callback([&] {
    verb = "compare";
    options = {{"config", config}};
  });

  // synth
  int periods = 4, rows = 500;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic two-farm wind history");
  synth->add_option("--periods", periods, "Periods")->check(positive);
  synth->add_option("--rows", rows, "Rows per period")->check(positive);
  add_common(synth, common);
  synth->callback([&] {
    verb = "synth";
    options = {{"periods", periods}, {"rows_per_period", rows}};
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return run(verb, options, common);
}
