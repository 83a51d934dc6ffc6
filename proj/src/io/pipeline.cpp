#include "io/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "calibration/calibration.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/uc_model.hpp"
#include "gmm/gmm.hpp"
#include "io/history.hpp"
#include "sets/uncertainty_sets.hpp"

namespace caus::io {
namespace {

using nlohmann::json;

const json& need(const json& opts, const char* key) {
  if (!opts.contains(key)) fail(ErrorCode::InvalidArgument, std::string("missing option '") + key + "'");
  return opts.at(key);
}

template <typename T>
T option(const json& opts, const char* key, T fallback) {
  if (!opts.contains(key) || opts.at(key).is_null()) return fallback;
  try {
    return opts.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("option '") + key + "': " + e.what());
  }
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i < std::min(e.byte, text.size() + 1) - 1 && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    fail(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                    ": " + e.what());
  }
}

json load_json(const std::string& path) { return parse_json(read_file(path), path); }

// Artifacts wrap their payload under `key`; bare payload files are accepted too.
json payload(const json& doc, const char* key) {
  return doc.contains("artifact") ? doc.at(key) : doc;
}

std::vector<Vector> covariates_from(const json& value) {
  std::vector<Vector> out;
  try {
    for (const auto& row : value) {
      const auto v = row.get<std::vector<double>>();
      out.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("covariates: ") + e.what());
  }
  require(!out.empty(), ErrorCode::InvalidArgument, "covariates need at least one period");
  return out;
}

json covariates_json(const std::vector<Vector>& covs) {
  json out = json::array();
  for (const auto& c : covs) out.push_back(std::vector<double>(c.begin(), c.end()));
  return out;
}

lp::SolveOptions solver_options(const json& opts) {
  lp::SolveOptions s;
  if (opts.contains("backend") && !opts.at("backend").is_null())
    s.backend = lp::parse_backend(opts.at("backend").get<std::string>());
  return s;
}

std::vector<gmm::ConditionalGmm> condition_all(const gmm::JointGmm& model,
                                               const std::vector<Vector>& covariates) {
  std::vector<gmm::ConditionalGmm> out;
  for (const auto& x : covariates) {
    require(x.size() == model.n(), ErrorCode::DimensionMismatch,
            "covariate length must equal the model's covariate dimension");
    out.push_back(gmm::condition(model, x));
  }
  return out;
}

std::vector<calibration::Calibration> calibrate_all(const std::vector<gmm::ConditionalGmm>& conds,
                                                    int n_samples, double epsilon,
                                                    std::uint64_t seed) {
  std::vector<calibration::Calibration> out;
  for (std::size_t t = 0; t < conds.size(); ++t) {
    out.push_back(calibration::calibrate_full(conds[t], n_samples, epsilon,
                                              seed + static_cast<std::uint64_t>(t),
                                              static_cast<int>(t) + 1));
  }
  return out;
}

sets::UnionSet box_from(const std::vector<calibration::Calibration>& cal) {
  std::vector<SampleMatrix> samples;
  for (const auto& c : cal) samples.push_back(c.samples);
  return sets::to_union(sets::build_box(samples));
}

sets::UnionSet uos_from(const gmm::JointGmm& model, int periods, double lambda, double phi) {
  const auto marginal = gmm::marginal_uncertainty(model);
  if (lambda <= 0.0) lambda = sets::default_uos_lambda(marginal.m());
  std::vector<double> budgets;
  if (phi > 0.0) budgets.push_back(phi);
  return sets::to_union(sets::build_uos_baseline(marginal, periods, lambda, budgets));
}

sets::UnionSet caus_from(const std::vector<gmm::ConditionalGmm>& conds,
                         const std::vector<calibration::CalibratedRadius>& radii, int j,
                         std::uint64_t direction_seed) {
  const int m = conds.front().m();
  if (j <= 0) j = sets::default_direction_count(m);
  return sets::build_caus(conds, radii, sets::make_directions(m, j, direction_seed));
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string dir_of(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  return parent.empty() ? std::string(".") : parent.string();
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

}  // namespace

json file_ref(const std::string& path) {
  return {{"path", path}, {"sha256", sha256_hex(read_file(path))}};
}

RunConfig run_config_from_json(const json& doc, const std::string& base_dir) {
  RunConfig c;
  c.instance = resolve(base_dir, need(doc, "instance").get<std::string>());
  c.history = resolve(base_dir, need(doc, "history").get<std::string>());
  c.k = option(doc, "k", c.k);
  c.epsilon = option(doc, "epsilon", c.epsilon);
  c.n_samples = option(doc, "n_samples", c.n_samples);
  c.j = option(doc, "j", c.j);
  c.set = option(doc, "set", c.set);
  c.covariates = covariates_from(need(doc, "covariates"));
  if (doc.contains("seeds")) {
    const auto& s = doc.at("seeds");
    c.fit_seed = option(s, "fit", c.fit_seed);
    c.calibration_seed = option(s, "calibrate", c.calibration_seed);
    c.direction_seed = option(s, "directions", c.direction_seed);
    c.evaluation_seed = option(s, "evaluate", c.evaluation_seed);
    c.so_seed = option(s, "so", c.so_seed);
  }
  c.so_scenarios = option(doc, "so_scenarios", c.so_scenarios);
  c.reliability_samples = option(doc, "reliability_samples", c.reliability_samples);
  c.sweep_epsilons = option(doc, "sweep_epsilons", c.sweep_epsilons);
  c.uos_lambda = option(doc, "uos_lambda", c.uos_lambda);
  c.uos_phi = option(doc, "uos_phi", c.uos_phi);
  c.ccg_tolerance = option(doc, "ccg_tolerance", c.ccg_tolerance);
  c.ccg_max_iterations = option(doc, "ccg_max_iterations", c.ccg_max_iterations);
  if (doc.contains("backend")) c.backend = lp::parse_backend(doc.at("backend").get<std::string>());

  require(c.k >= 1, ErrorCode::InvalidArgument, "k must be at least 1");
  require(c.epsilon > 0.0 && c.epsilon < 1.0, ErrorCode::InvalidArgument, "epsilon must lie in (0, 1)");
  require(c.n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be at least 1");
  require(c.so_scenarios >= 1 && c.reliability_samples >= 1, ErrorCode::InvalidArgument,
          "scenario and sample counts must be positive");
  for (double e : c.sweep_epsilons)
    require(e > 0.0 && e < 1.0, ErrorCode::InvalidArgument, "sweep epsilons must lie in (0, 1)");
  sets::parse_set_kind(c.set);
  return c;
}

CommandOutput cmd_fit(const json& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::string path = need(opts, "history").get<std::string>();
  const auto history = read_history(path);
  gmm::EmConfig em;
  em.seed = option<std::uint64_t>(opts, "seed", 0);
  em.max_iterations = option(opts, "max_iterations", em.max_iterations);
  em.tolerance = option(opts, "tolerance", em.tolerance);
  em.jitter = option(opts, "jitter", em.jitter);
  const int k = option(opts, "k", 2);
  const auto fit = gmm::fit_gmm(history.samples, k, em);
  CommandOutput out;
  out.artifact = {{"artifact", "model"},
                  {"inputs", {{"history", file_ref(path)}}},
                  {"k", k},
                  {"seed", em.seed},
                  {"rows", history.samples.size()},
                  {"iterations", fit.iterations},
                  {"converged", fit.converged},
                  {"log_likelihood", fit.log_likelihood.empty() ? 0.0 : fit.log_likelihood.back()},
                  {"model", gmm::to_json(fit.model)},
                  {"timing", {{"wall_seconds", seconds_since(start)}}}};
  return out;
}

CommandOutput cmd_calibrate(const json& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::string model_path = need(opts, "model").get<std::string>();
  const auto model = gmm::joint_from_json(payload(load_json(model_path), "model"));
  const auto covs = covariates_from(need(opts, "covariates"));
  const double epsilon = option(opts, "epsilon", 0.05);
  const int n_samples = option(opts, "n_samples", 10000);
  const auto seed = option<std::uint64_t>(opts, "seed", 0);
  const auto conds = condition_all(model, covs);
  const auto cal = calibrate_all(conds, n_samples, epsilon, seed);
  std::vector<calibration::CalibratedRadius> radii;
  for (const auto& c : cal) radii.push_back(c.radius);
  const bool share = option(opts, "share_max", false);
  if (share) radii = calibration::share_max_radius(radii);

  CommandOutput out;
  json radii_json = json::array();
  json conds_json = json::array();
  for (std::size_t t = 0; t < radii.size(); ++t) {
    radii_json.push_back(calibration::to_json(radii[t]));
    conds_json.push_back(gmm::to_json(conds[t]));
    out.extras.emplace_back("scores_p" + std::to_string(t + 1) + ".csv",
                            calibration::histogram_csv(cal[t].scores.scores));
  }
  out.artifact = {{"artifact", "radius"},
                  {"inputs", {{"model", file_ref(model_path)}}},
                  {"epsilon", epsilon},
                  {"n_samples", n_samples},
                  {"kappa", calibration::order_statistic_rank(epsilon, n_samples)},
                  {"seed", seed},
                  {"share_max", share},
                  {"covariates", covariates_json(covs)},
                  {"radii", radii_json},
                  {"conditionals", conds_json},
                  {"timing", {{"wall_seconds", seconds_since(start)}}}};
  return out;
}

CommandOutput cmd_build_set(const json& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::string model_path = need(opts, "model").get<std::string>();
  const std::string radius_path = need(opts, "radius").get<std::string>();
  const auto model = gmm::joint_from_json(payload(load_json(model_path), "model"));
  const auto radius_doc = load_json(radius_path);
  const auto covs = covariates_from(need(radius_doc, "covariates"));
  std::vector<calibration::CalibratedRadius> radii;
  for (const auto& r : need(radius_doc, "radii")) radii.push_back(calibration::radius_from_json(r));
  require(radii.size() == covs.size(), ErrorCode::DimensionMismatch,
          "radius file has one radius per covariate period");
  const auto kind = sets::parse_set_kind(option<std::string>(opts, "set", "caus"));
  const int j = option(opts, "j", 0);
  const auto direction_seed = option<std::uint64_t>(opts, "direction_seed", 0);
  const auto conds = condition_all(model, covs);

  json extra = json::object();
  auto built = [&]() -> sets::UnionSet {
    switch (kind) {
      case sets::SetKind::Caus:
        extra["j"] = j > 0 ? j : sets::default_direction_count(model.m());
        extra["direction_seed"] = direction_seed;
        return caus_from(conds, radii, j, direction_seed);
      case sets::SetKind::Box: {
        // The calibration draws, regenerated from the recorded seeds.
        std::vector<calibration::Calibration> cal;
        for (std::size_t t = 0; t < conds.size(); ++t)
          cal.push_back(calibration::calibrate_full(conds[t], radii[t].n_samples, radii[t].epsilon,
                                                    radii[t].seed, radii[t].period));
        return box_from(cal);
      }
      case sets::SetKind::Uos: {
        const double lambda = option(opts, "uos_lambda", 0.0);
        const double phi = option(opts, "uos_phi", 0.0);
        extra["uos_lambda"] = lambda > 0.0 ? lambda : sets::default_uos_lambda(model.m());
        extra["uos_phi"] = phi > 0.0 ? phi : static_cast<double>(model.m());
        return uos_from(model, static_cast<int>(covs.size()), lambda, phi);
      }
    }
    fail(ErrorCode::InvalidArgument, "unknown set kind");
  }();

  CommandOutput out;
  out.artifact = {{"artifact", "set"},
                  {"inputs", {{"model", file_ref(model_path)}, {"radius", file_ref(radius_path)}}},
                  {"set_type", sets::to_string(kind)},
                  {"parameters", extra},
                  {"set", sets::to_json(built)},
                  {"timing", {{"wall_seconds", seconds_since(start)}}}};
  out.extras.emplace_back("encoding.lp", lp::to_text(sets::encode_milp(built).block));
  return out;
}

CommandOutput cmd_solve(const json& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::string instance_path = need(opts, "instance").get<std::string>();
  const std::string set_path = need(opts, "set").get<std::string>();
  const auto instance = dispatch::instance_from_json(load_json(instance_path));
  const auto form = dispatch::assemble(instance);
  const auto set = sets::union_set_from_json(payload(load_json(set_path), "set"));
  dispatch::CcgConfig cfg;
  cfg.tolerance = option(opts, "tolerance", cfg.tolerance);
  cfg.max_iterations = option(opts, "max_iterations", cfg.max_iterations);
  const auto method = option<std::string>(opts, "subproblem", "milp");
  require(method == "milp" || method == "enumerate", ErrorCode::InvalidArgument,
          "subproblem must be 'milp' or 'enumerate'");
  cfg.method = method == "milp" ? dispatch::SubproblemMethod::Milp
                                : dispatch::SubproblemMethod::Enumerate;
  cfg.subproblem.solver = solver_options(opts);
  const auto sol = dispatch::solve_ccg(form, set, cfg);
  bool members = true;
  for (const auto& w : sol.worst_scenarios) members = members && sets::membership(set, w);

  CommandOutput out;
  out.artifact = {{"artifact", "solution"},
                  {"inputs", {{"instance", file_ref(instance_path)}, {"set", file_ref(set_path)}}},
                  {"status", sol.converged ? "converged" : "iteration_limit"},
                  {"subproblem", method},
                  {"dimensions", dispatch::to_json(dispatch::dimensions(form))},
                  {"solution", dispatch::to_json(sol, form)},
                  {"x", std::vector<double>(sol.x.begin(), sol.x.end())},
                  {"scenarios_are_members", members},
                  {"timing", {{"wall_seconds", seconds_since(start)}}}};
  return out;
}

CommandOutput cmd_evaluate(const json& opts) {
  const auto start = std::chrono::steady_clock::now();
  const std::string instance_path = need(opts, "instance").get<std::string>();
  const std::string solution_path = need(opts, "solution").get<std::string>();
  const std::string model_path = need(opts, "model").get<std::string>();
  const auto form = dispatch::assemble(dispatch::instance_from_json(load_json(instance_path)));
  const auto sol_doc = load_json(solution_path);
  const auto xs = need(sol_doc, "x").get<std::vector<double>>();
  require(static_cast<int>(xs.size()) == form.nx, ErrorCode::DimensionMismatch,
          "solution does not match the instance");
  const Vector x = Eigen::Map<const Vector>(xs.data(), form.nx);
  const auto model = gmm::joint_from_json(payload(load_json(model_path), "model"));

  json inputs = {{"instance", file_ref(instance_path)},
                 {"solution", file_ref(solution_path)},
                 {"model", file_ref(model_path)}};
  std::vector<Vector> covs;
  if (opts.contains("covariates")) {
    covs = covariates_from(opts.at("covariates"));
  } else {
    const std::string radius_path = need(opts, "radius").get<std::string>();
    covs = covariates_from(need(load_json(radius_path), "covariates"));
    inputs["radius"] = file_ref(radius_path);
  }
  const auto conds = condition_all(model, covs);
  const int n = option(opts, "n", 10000);
  const auto seed = option<std::uint64_t>(opts, "seed", 0);
  const auto report = dispatch::evaluate_reliability(form, x, conds, n, seed, solver_options(opts));

  CommandOutput out;
  out.artifact = {{"artifact", "reliability"},
                  {"inputs", inputs},
                  {"seed", seed},
                  {"covariates", covariates_json(covs)},
                  {"report", dispatch::to_json(report)},
                  {"timing", {{"wall_seconds", seconds_since(start)}}}};
  out.extras.emplace_back("costs.csv", dispatch::reliability_histogram_csv(report));
  return out;
}

CommandOutput cmd_compare(const json& opts) {
  const std::string config_path = need(opts, "config").get<std::string>();
  const auto cfg = run_config_from_json(load_json(config_path), dir_of(config_path));
  const auto total_start = std::chrono::steady_clock::now();

  lp::SolveOptions solver;
  solver.backend = cfg.backend;
  const auto history = read_history(cfg.history);
  const auto form = dispatch::assemble(dispatch::instance_from_json(load_json(cfg.instance)));
  require(static_cast<int>(cfg.covariates.size()) == form.periods, ErrorCode::DimensionMismatch,
          "config needs one covariate vector per instance period");
  gmm::EmConfig em;
  em.seed = cfg.fit_seed;
  const auto model = gmm::fit_gmm(history.samples, cfg.k, em).model;
  require(model.m() == form.farms, ErrorCode::DimensionMismatch,
          "history uncertainty dimension must equal the farm count");
  const auto conds = condition_all(model, cfg.covariates);

  dispatch::CcgConfig ccg;
  ccg.tolerance = cfg.ccg_tolerance;
  ccg.max_iterations = cfg.ccg_max_iterations;
  ccg.subproblem.solver = solver;

  json methods = json::array();
  json timing = json::object();
  std::string table = "method,cost,reliability,mean_oos_cost,wall_time_s\n";
  auto record = [&](const std::string& name, double cost, const Vector& x, json detail,
                    double seconds) {
    const auto rep = dispatch::evaluate_reliability(form, x, conds, cfg.reliability_samples,
                                                    cfg.evaluation_seed, solver);
    detail["method"] = name;
    detail["cost"] = cost;
    detail["reliability"] = rep.reliability;
    detail["mean_oos_cost"] = rep.mean_cost;
    const Matrix u = dispatch::commitment_matrix(form, x);
    json commit = json::array();
    for (int g = 0; g < form.units; ++g) {
      std::vector<int> row(form.periods);
      for (int t = 0; t < form.periods; ++t) row[t] = static_cast<int>(u(g, t));
      commit.push_back(row);
    }
    detail["commitment"] = commit;
    methods.push_back(detail);
    timing[name] = seconds;
    table += name + "," + format_number(cost) + "," + format_number(rep.reliability) + "," +
             format_number(rep.mean_cost) + "," + format_number(seconds) + "\n";
    return rep.reliability;
  };

  auto clock = std::chrono::steady_clock::now();
  Matrix mean(form.periods, form.farms);
  for (int t = 0; t < form.periods; ++t) mean.row(t) = conds[t].mixture_mean().transpose();
  const auto det = dispatch::solve_deterministic(form, dispatch::stack(mean), solver);
  record("DO", det.cost, det.x, json::object(), seconds_since(clock));

  clock = std::chrono::steady_clock::now();
  const auto scenarios = dispatch::sample_trajectories(conds, cfg.so_scenarios, cfg.so_seed);
  const auto so = dispatch::solve_stochastic(form, scenarios, solver);
  record("SO", so.cost, so.x, {{"scenarios", cfg.so_scenarios}}, seconds_since(clock));

  const auto cal = calibrate_all(conds, cfg.n_samples, cfg.epsilon, cfg.calibration_seed);
  std::vector<calibration::CalibratedRadius> radii;
  for (const auto& c : cal) radii.push_back(c.radius);

  double costs[3] = {0.0, 0.0, 0.0};
  const std::pair<const char*, sets::SetKind> robust[] = {
      {"RO-box", sets::SetKind::Box}, {"RO-uos", sets::SetKind::Uos}, {"RO-caus", sets::SetKind::Caus}};
  bool all_members = true;
  for (int r = 0; r < 3; ++r) {
    clock = std::chrono::steady_clock::now();
    const auto set = robust[r].second == sets::SetKind::Box ? box_from(cal)
                     : robust[r].second == sets::SetKind::Uos
                         ? uos_from(model, form.periods, cfg.uos_lambda, cfg.uos_phi)
                         : caus_from(conds, radii, cfg.j, cfg.direction_seed);
    const auto sol = dispatch::solve_ccg(form, set, ccg);
    for (const auto& w : sol.worst_scenarios) all_members = all_members && sets::membership(set, w);
    costs[r] = sol.total_cost;
    record(robust[r].first, sol.total_cost, sol.x,
           {{"iterations", sol.iterations}, {"gap", sol.gap}, {"converged", sol.converged}},
           seconds_since(clock));
  }

  json sweep = json::array();
  std::string sweep_csv = "epsilon,cost,reliability,gamma_max\n";
  const auto sweep_kind = sets::parse_set_kind(cfg.set);
  for (double eps : cfg.sweep_epsilons) {
    clock = std::chrono::steady_clock::now();
    const auto cal_e = calibrate_all(conds, cfg.n_samples, eps, cfg.calibration_seed);
    std::vector<calibration::CalibratedRadius> radii_e;
    double gamma_max = 0.0;
    for (const auto& c : cal_e) {
      radii_e.push_back(c.radius);
      gamma_max = std::max(gamma_max, c.radius.gamma);
    }
    const auto set = sweep_kind == sets::SetKind::Caus ? caus_from(conds, radii_e, cfg.j, cfg.direction_seed)
                     : sweep_kind == sets::SetKind::Box
                         ? box_from(cal_e)
                         : uos_from(model, form.periods, cfg.uos_lambda, cfg.uos_phi);
    const auto sol = dispatch::solve_ccg(form, set, ccg);
    for (const auto& w : sol.worst_scenarios) all_members = all_members && sets::membership(set, w);
    const auto rep = dispatch::evaluate_reliability(form, sol.x, conds, cfg.reliability_samples,
                                                    cfg.evaluation_seed, solver);
    sweep.push_back({{"epsilon", eps}, {"cost", sol.total_cost}, {"reliability", rep.reliability},
                     {"gamma_max", gamma_max}, {"iterations", sol.iterations}, {"gap", sol.gap}});
    timing["sweep_" + format_number(eps)] = seconds_since(clock);
    sweep_csv += format_number(eps) + "," + format_number(sol.total_cost) + "," +
                 format_number(rep.reliability) + "," + format_number(gamma_max) + "\n";
  }
  timing["total"] = seconds_since(total_start);

  CommandOutput out;
  out.artifact = {
      {"artifact", "comparison"},
      {"inputs",
       {{"config", file_ref(config_path)},
        {"instance", file_ref(cfg.instance)},
        {"history", file_ref(cfg.history)}}},
      {"epsilon", cfg.epsilon},
      {"n_samples", cfg.n_samples},
      {"kappa", calibration::order_statistic_rank(cfg.epsilon, cfg.n_samples)},
      {"methods", methods},
      {"sweep", sweep},
      {"checks",
       {{"do_le_caus", det.cost <= costs[2] + 1e-6 * std::max(1.0, std::abs(costs[2]))},
        {"caus_le_box", costs[2] <= costs[0] + 1e-6 * std::max(1.0, std::abs(costs[0]))},
        {"caus_reduction_vs_box", costs[0] > 0.0 ? (costs[0] - costs[2]) / costs[0] : 0.0},
        {"scenarios_are_members", all_members}}},
      {"timing", timing}};
  out.extras.emplace_back("table.csv", table);
  out.extras.emplace_back("sweep.csv", sweep_csv);
  return out;
}

CommandOutput cmd_synth(const json& opts) {
  const int periods = option(opts, "periods", 4);
  const int rows = option(opts, "rows_per_period", 500);
  const auto seed = option<std::uint64_t>(opts, "seed", 0);
  const auto model = synthetic_wind_model();
  CommandOutput out;
  out.artifact = {{"artifact", "synthetic"},
                  {"periods", periods},
                  {"rows_per_period", rows},
                  {"seed", seed},
                  {"model", gmm::to_json(model)}};
  out.extras.emplace_back("history.csv", to_csv(synthetic_history(model, periods, rows, seed)));
  return out;
}

json strip_timing(json artifact) {
  if (artifact.is_object()) {
    artifact.erase("timing");
    for (auto& [key, value] : artifact.items()) value = strip_timing(value);
  } else if (artifact.is_array()) {
    for (auto& value : artifact) value = strip_timing(value);
  }
  return artifact;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError: return 3;
    case ErrorCode::MissingInput: return 4;
    case ErrorCode::IoError: return 5;
    case ErrorCode::IterationLimit: return 6;
    default: return 10 + static_cast<int>(code);
  }
}

}  // namespace caus::io
