#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "dispatch/uc_model.hpp"
#include "gmm/gmm.hpp"
#include "lp/linear_program.hpp"
#include "sets/uncertainty_sets.hpp"

namespace caus::dispatch {

/// Recourse LP min b^T Y s.t. G Y (<= | =) l - E X - U xi for fixed X and xi.
lp::LinearProgram recourse_lp(const MatrixForm& form, const Vector& x, const Vector& xi);

struct RecourseResult {
  double cost = 0.0;
  Vector y;
  double shed = 0.0;  // total MW
  double spill = 0.0;
};

RecourseResult solve_recourse(const MatrixForm& form, const Vector& x, const Vector& xi,
                              const lp::SolveOptions& options = {});

struct DeterministicResult {
  double cost = 0.0;
  double first_stage_cost = 0.0;
  Vector x;
  Vector y;
};

/// One MILP with xi fixed (the DO baseline when xi is the forecast mean).
DeterministicResult solve_deterministic(const MatrixForm& form, const Vector& xi,
                                        const lp::SolveOptions& options = {});

/// Sample-average problem over equally weighted scenarios (the SO baseline).
DeterministicResult solve_stochastic(const MatrixForm& form, std::span<const Vector> scenarios,
                                     const lp::SolveOptions& options = {});

struct SubproblemResult {
  double value = 0.0;       // recourse cost re-evaluated by LP at the trajectory
  double milp_value = 0.0;  // optimum of the bilevel reformulation
  Matrix trajectory;        // T x m, member of the set
  std::vector<int> subsets;
  int binaries = 0;         // subset binaries of the set encoding
  int vertex_binaries = 0;  // vertex choices, largest over the problems solved
};

struct SubproblemOptions {
  lp::SolveOptions solver;
  long long enumeration_cap = 1'000'000;
};

/// max over the set of min_Y b^T Y for fixed X: the set's Big-M encoding,
/// a binary vertex choice per period and the dual of the recourse LP, with
/// dual-times-xi products linearized exactly.
SubproblemResult solve_subproblem_milp(const MatrixForm& form, const Vector& x,
                                       const sets::UnionSet& set,
                                       const SubproblemOptions& options = {});

/// Same maximum, one dualized problem per subset combination with xi_t
/// restricted to the chosen polytope. Ties keep the lexicographically smallest choice.
SubproblemResult solve_subproblem_enum(const MatrixForm& form, const Vector& x,
                                       const sets::UnionSet& set,
                                       const SubproblemOptions& options = {});

enum class SubproblemMethod { Milp, Enumerate };

struct CcgConfig {
  double tolerance = 1e-4;  // relative gap
  int max_iterations = 30;
  SubproblemMethod method = SubproblemMethod::Milp;
  SubproblemOptions subproblem;
};

struct RobustSolution {
  Vector x;
  Matrix commitment;  // units x periods
  std::vector<Matrix> worst_scenarios;
  std::vector<std::vector<int>> scenario_subsets;
  double total_cost = 0.0;  // first stage + worst-case recourse
  double first_stage_cost = 0.0;
  double worst_recourse_cost = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;  // (upper - lower) / max(1, |upper|)
  int iterations = 0;
  bool converged = false;
  std::vector<double> lower_trace;
  std::vector<double> upper_trace;
};

/// Column-and-constraint generation. Stops at the gap tolerance, when a
/// subproblem repeats a known scenario, or at the iteration cap (converged
/// stays false and the best incumbent is returned).
RobustSolution solve_ccg(const MatrixForm& form, const sets::UnionSet& set,
                         const CcgConfig& config = {});

struct ReliabilityReport {
  int samples = 0;
  double reliability = 0.0;  // fraction with no shed/spill above the threshold
  double mean_cost = 0.0;
  double std_cost = 0.0;
  double p50_cost = 0.0;
  double p95_cost = 0.0;
  double max_cost = 0.0;
  std::vector<int> period_violations;
  std::vector<double> costs;  // recourse cost per sample, in sampling order
};

/// Samples n trajectories (period t from models[t]) and classifies each as
/// reliable when its recourse needs no shed or spill above 1e-6 MW.
ReliabilityReport evaluate_reliability(const MatrixForm& form, const Vector& x,
                                       std::span<const gmm::ConditionalGmm> models, int n,
                                       std::uint64_t seed, const lp::SolveOptions& options = {});

/// Period-t draws use this seed so that every caller samples the same
/// trajectories.
std::uint64_t period_seed(std::uint64_t seed, int t);
std::vector<Vector> sample_trajectories(std::span<const gmm::ConditionalGmm> models, int n,
                                        std::uint64_t seed);

nlohmann::json to_json(const RobustSolution& solution, const MatrixForm& form);
nlohmann::json to_json(const ReliabilityReport& report);
std::string reliability_histogram_csv(const ReliabilityReport& report, int bins = 50);

}  // namespace caus::dispatch
