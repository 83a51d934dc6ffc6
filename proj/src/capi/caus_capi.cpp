#include "caus/caus.h"

#include <cstring>
#include <new>
#include <string>

#include "calibration/calibration.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/uc_model.hpp"
#include "gmm/gmm.hpp"
#include "io/history.hpp"
#include "io/pipeline.hpp"
#include "sets/uncertainty_sets.hpp"

struct caus_model {
  caus::gmm::JointGmm value;
};
struct caus_conditional {
  caus::gmm::ConditionalGmm value;
};
struct caus_set {
  caus::sets::UnionSet value;
};
struct caus_instance {
  caus::dispatch::UcInstance instance;
  caus::dispatch::MatrixForm form;
};

namespace {

thread_local std::string last_error;

template <typename F>
caus_status guard(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const caus::Error& e) {
    last_error = e.what();
    return static_cast<caus_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return CAUS_INTERNAL_ERROR;
}

void need(const void* p, const char* what) {
  caus::require(p != nullptr, caus::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse(const char* text, const char* what) {
  need(text, what);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    caus::fail(caus::ErrorCode::ParseError, std::string(what) + ": " + e.what());
  }
}

}  // namespace

extern "C" {

const char* caus_version(void) { return "0.1.0"; }

const char* caus_status_name(caus_status status) {
  if (status == CAUS_OK) return "ok";
  if (status == CAUS_INTERNAL_ERROR) return "internal_error";
  if (status >= CAUS_INVALID_ARGUMENT && status <= CAUS_IO_ERROR)
    return caus::to_string(static_cast<caus::ErrorCode>(status));
  return "unknown";
}

const char* caus_last_error(void) { return last_error.c_str(); }

void caus_string_free(char* s) { delete[] s; }

int caus_exit_code(caus_status status) {
  if (status == CAUS_OK) return 0;
  if (status == CAUS_INTERNAL_ERROR) return 1;
  return caus::io::exit_code(static_cast<caus::ErrorCode>(status));
}

caus_status caus_model_fit_csv(const char* history_path, int k, uint64_t seed, caus_model** out) {
  return guard([&] {
    need(history_path, "history_path");
    need(out, "out");
    caus::gmm::EmConfig em;
    em.seed = seed;
    const auto history = caus::io::read_history(history_path);
    *out = new caus_model{caus::gmm::fit_gmm(history.samples, k, em).model};
    return CAUS_OK;
  });
}

caus_status caus_model_from_json(const char* json, caus_model** out) {
  return guard([&] {
    need(out, "out");
    auto doc = parse(json, "model JSON");
    if (doc.contains("artifact")) doc = doc.at("model");
    *out = new caus_model{caus::gmm::joint_from_json(doc)};
    return CAUS_OK;
  });
}

caus_status caus_model_to_json(const caus_model* model, char** json_out) {
  return guard([&] {
    need(model, "model");
    need(json_out, "json_out");
    *json_out = copy_string(caus::gmm::to_json(model->value).dump());
    return CAUS_OK;
  });
}

caus_status caus_model_dims(const caus_model* model, int* n, int* m, int* k) {
  return guard([&] {
    need(model, "model");
    if (n) *n = model->value.n();
    if (m) *m = model->value.m();
    if (k) *k = model->value.k();
    return CAUS_OK;
  });
}

void caus_model_free(caus_model* model) { delete model; }

caus_status caus_model_condition(const caus_model* model, const double* x, size_t n,
                                 caus_conditional** out) {
  return guard([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    const caus::Vector cov = Eigen::Map<const caus::Vector>(x, static_cast<Eigen::Index>(n));
    *out = new caus_conditional{caus::gmm::condition(model->value, cov)};
    return CAUS_OK;
  });
}

caus_status caus_model_marginal(const caus_model* model, caus_conditional** out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    *out = new caus_conditional{caus::gmm::marginal_uncertainty(model->value)};
    return CAUS_OK;
  });
}

caus_status caus_conditional_dims(const caus_conditional* model, int* m, int* k) {
  return guard([&] {
    need(model, "model");
    if (m) *m = model->value.m();
    if (k) *k = model->value.k();
    return CAUS_OK;
  });
}

caus_status caus_conditional_mean(const caus_conditional* model, double* out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    const caus::Vector mean = model->value.mixture_mean();
    std::memcpy(out, mean.data(), sizeof(double) * mean.size());
    return CAUS_OK;
  });
}

caus_status caus_conditional_score(const caus_conditional* model, const double* xi, size_t m,
                                   double* score) {
  return guard([&] {
    need(model, "model");
    need(xi, "xi");
    need(score, "score");
    const caus::Vector p = Eigen::Map<const caus::Vector>(xi, static_cast<Eigen::Index>(m));
    *score = caus::calibration::union_score(model->value, p);
    return CAUS_OK;
  });
}

caus_status caus_conditional_sample(const caus_conditional* model, int count, uint64_t seed,
                                    double* out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    caus::require(count >= 0, caus::ErrorCode::InvalidArgument, "count must be nonnegative");
    if (count == 0) return CAUS_OK;
    const auto draws = caus::gmm::sample_conditional(model->value, count, seed);
    std::memcpy(out, draws.data(), sizeof(double) * draws.size());
    return CAUS_OK;
  });
}

void caus_conditional_free(caus_conditional* model) { delete model; }

caus_status caus_order_statistic_rank(double epsilon, int n_samples, int* kappa) {
  return guard([&] {
    need(kappa, "kappa");
    *kappa = caus::calibration::order_statistic_rank(epsilon, n_samples);
    return CAUS_OK;
  });
}

caus_status caus_calibrate(const caus_conditional* model, int n_samples, double epsilon,
                           uint64_t seed, caus_radius* out) {
  return guard([&] {
    need(model, "model");
    need(out, "out");
    const auto r = caus::calibration::calibrate(model->value, n_samples, epsilon, seed);
    *out = {r.gamma, r.epsilon, r.kappa, r.n_samples, r.seed, r.period};
    return CAUS_OK;
  });
}

caus_status caus_set_build_caus(const caus_conditional* const* models, const caus_radius* radii,
                                int periods, int j, uint64_t direction_seed, caus_set** out) {
  return guard([&] {
    need(models, "models");
    need(radii, "radii");
    need(out, "out");
    caus::require(periods >= 1, caus::ErrorCode::InvalidArgument, "periods must be positive");
    std::vector<caus::gmm::ConditionalGmm> conds;
    std::vector<caus::calibration::CalibratedRadius> rs;
    for (int t = 0; t < periods; ++t) {
      need(models[t], "models[t]");
      conds.push_back(models[t]->value);
      caus::calibration::CalibratedRadius r;
      r.gamma = radii[t].gamma;
      r.epsilon = radii[t].epsilon;
      r.kappa = radii[t].kappa;
      r.n_samples = radii[t].n_samples;
      r.seed = radii[t].seed;
      r.period = radii[t].period;
      rs.push_back(r);
    }
    const int m = conds.front().m();
    const auto dirs = caus::sets::make_directions(
        m, j > 0 ? j : caus::sets::default_direction_count(m), direction_seed);
    *out = new caus_set{caus::sets::build_caus(conds, rs, dirs)};
    return CAUS_OK;
  });
}

caus_status caus_set_build_box(const double* lower, const double* upper, int periods, int m,
                               caus_set** out) {
  return guard([&] {
    need(lower, "lower");
    need(upper, "upper");
    need(out, "out");
    caus::require(periods >= 1 && m >= 1, caus::ErrorCode::InvalidArgument,
                  "periods and m must be positive");
    std::vector<caus::Vector> lo, hi;
    for (int t = 0; t < periods; ++t) {
      lo.push_back(Eigen::Map<const caus::Vector>(lower + t * m, m));
      hi.push_back(Eigen::Map<const caus::Vector>(upper + t * m, m));
    }
    *out = new caus_set{caus::sets::to_union(caus::sets::build_box(lo, hi))};
    return CAUS_OK;
  });
}

caus_status caus_set_from_json(const char* json, caus_set** out) {
  return guard([&] {
    need(out, "out");
    auto doc = parse(json, "set JSON");
    if (doc.contains("artifact")) doc = doc.at("set");
    *out = new caus_set{caus::sets::union_set_from_json(doc)};
    return CAUS_OK;
  });
}

caus_status caus_set_to_json(const caus_set* set, char** json_out) {
  return guard([&] {
    need(set, "set");
    need(json_out, "json_out");
    *json_out = copy_string(caus::sets::to_json(set->value).dump());
    return CAUS_OK;
  });
}

caus_status caus_set_contains(const caus_set* set, const double* trajectory, int periods, int m,
                              int* member) {
  return guard([&] {
    need(set, "set");
    need(trajectory, "trajectory");
    need(member, "member");
    caus::Matrix traj(periods, m);
    for (int t = 0; t < periods; ++t)
      for (int i = 0; i < m; ++i) traj(t, i) = trajectory[t * m + i];
    *member = caus::sets::membership(set->value, traj) ? 1 : 0;
    return CAUS_OK;
  });
}

caus_status caus_set_encoding_size(const caus_set* set, int* binaries, int* auxiliaries) {
  return guard([&] {
    need(set, "set");
    const auto enc = caus::sets::encode_milp(set->value);
    if (binaries) *binaries = enc.binary_count();
    if (auxiliaries) *auxiliaries = enc.auxiliary_count();
    return CAUS_OK;
  });
}

caus_status caus_set_encoding_text(const caus_set* set, char** text_out) {
  return guard([&] {
    need(set, "set");
    need(text_out, "text_out");
    *text_out = copy_string(caus::lp::to_text(caus::sets::encode_milp(set->value).block));
    return CAUS_OK;
  });
}

void caus_set_free(caus_set* set) { delete set; }

caus_status caus_instance_from_json(const char* json, caus_instance** out) {
  return guard([&] {
    need(out, "out");
    auto inst = caus::dispatch::instance_from_json(parse(json, "instance JSON"));
    auto form = caus::dispatch::assemble(inst);
    *out = new caus_instance{std::move(inst), std::move(form)};
    return CAUS_OK;
  });
}

caus_status caus_instance_dimensions(const caus_instance* instance, char** json_out) {
  return guard([&] {
    need(instance, "instance");
    need(json_out, "json_out");
    const auto dims = caus::dispatch::dimensions(instance->form);
    *json_out = copy_string(caus::dispatch::to_json(dims).dump());
    return CAUS_OK;
  });
}

caus_status caus_instance_solve_deterministic(const caus_instance* instance, const double* xi,
                                              size_t length, double* cost) {
  return guard([&] {
    need(instance, "instance");
    need(cost, "cost");
    caus::require(length == static_cast<size_t>(instance->form.nxi),
                  caus::ErrorCode::DimensionMismatch, "xi must hold periods * farms values");
    caus::Vector v = caus::Vector::Zero(instance->form.nxi);
    if (length > 0) {
      need(xi, "xi");
      v = Eigen::Map<const caus::Vector>(xi, static_cast<Eigen::Index>(length));
    }
    *cost = caus::dispatch::solve_deterministic(instance->form, v).cost;
    return CAUS_OK;
  });
}

caus_status caus_instance_solve_robust(const caus_instance* instance, const caus_set* set,
                                       double tolerance, int max_iterations, int use_enumeration,
                                       char** solution_json) {
  return guard([&] {
    need(instance, "instance");
    need(set, "set");
    need(solution_json, "solution_json");
    caus::dispatch::CcgConfig cfg;
    if (tolerance > 0.0) cfg.tolerance = tolerance;
    if (max_iterations > 0) cfg.max_iterations = max_iterations;
    cfg.method = use_enumeration ? caus::dispatch::SubproblemMethod::Enumerate
                                 : caus::dispatch::SubproblemMethod::Milp;
    const auto sol = caus::dispatch::solve_ccg(instance->form, set->value, cfg);
    auto doc = caus::dispatch::to_json(sol, instance->form);
    doc["x"] = std::vector<double>(sol.x.begin(), sol.x.end());
    *solution_json = copy_string(doc.dump());
    if (!sol.converged) {
      last_error = "gap tolerance not reached within the iteration cap";
      return CAUS_ITERATION_LIMIT;
    }
    return CAUS_OK;
  });
}

void caus_instance_free(caus_instance* instance) { delete instance; }

caus_status caus_command(const char* name, const char* options_json, char** result_json) {
  return guard([&] {
    need(name, "name");
    need(result_json, "result_json");
    const auto opts = parse(options_json, "command options");
    const std::string verb = name;
    caus::io::CommandOutput out;
    if (verb == "fit") out = caus::io::cmd_fit(opts);
    else if (verb == "calibrate") out = caus::io::cmd_calibrate(opts);
    else if (verb == "build-set") out = caus::io::cmd_build_set(opts);
    else if (verb == "solve") out = caus::io::cmd_solve(opts);
    else if (verb == "evaluate") out = caus::io::cmd_evaluate(opts);
    else if (verb == "compare") out = caus::io::cmd_compare(opts);
    else if (verb == "synth") out = caus::io::cmd_synth(opts);
    else caus::fail(caus::ErrorCode::InvalidArgument, "unknown command '" + verb + "'");
    nlohmann::json extras = nlohmann::json::object();
    for (const auto& [suffix, content] : out.extras) extras[suffix] = content;
    *result_json = copy_string(nlohmann::json{{"artifact", out.artifact}, {"extras", extras}}.dump());
    return CAUS_OK;
  });
}

}  // extern "C"
