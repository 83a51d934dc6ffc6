#include "dispatch/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "core/error.hpp"

namespace caus::dispatch {
namespace {

lp::RowSense sense_of(bool equal) {
  return equal ? lp::RowSense::Equal : lp::RowSense::LessEqual;
}

void add_sparse_row(lp::LinearProgram& prog, int row, const SparseRows& m, int i, int offset,
                    double scale = 1.0) {
  for (SparseRows::InnerIterator it(m, i); it; ++it)
    prog.add_coefficient(row, offset + static_cast<int>(it.col()), scale * it.value());
}

Vector recourse_rhs(const MatrixForm& f, const Vector& x, const Vector& xi) {
  require(x.size() == f.nx, ErrorCode::DimensionMismatch, "X has the wrong length");
  require(xi.size() == f.nxi, ErrorCode::DimensionMismatch, "xi has the wrong length");
  return f.l - f.E * x - f.U * xi;
}

void check_set(const MatrixForm& f, const sets::UnionSet& set) {
  require(set.periods() == f.periods && set.m() == f.farms, ErrorCode::DimensionMismatch,
          "uncertainty set shape does not match the instance (periods x farms)");
}

// First-stage columns and rows shared by every master-type problem.
void add_first_stage(lp::LinearProgram& prog, const MatrixForm& f) {
  for (int j = 0; j < f.nx; ++j) prog.add_binary(f.c(j), f.x_names[j]);
  for (int i = 0; i < f.A.rows(); ++i) {
    const int r = prog.add_row(sense_of(f.a_equal[i]), f.h(i), f.a_row_names[i]);
    add_sparse_row(prog, r, f.A, i, 0);
  }
}

// Y copy for a scenario: returns its column offset.
int add_scenario_block(lp::LinearProgram& prog, const MatrixForm& f, const Vector& xi,
                       double weight) {
  const int offset = prog.num_variables();
  for (int j = 0; j < f.ny; ++j) prog.add_variable(f.y_lower(j), f.y_upper(j), weight * f.b(j));
  const Vector rhs = f.l - f.U * xi;
  for (int i = 0; i < f.G.rows(); ++i) {
    const int r = prog.add_row(sense_of(f.g_equal[i]), rhs(i));
    add_sparse_row(prog, r, f.E, i, 0);
    add_sparse_row(prog, r, f.G, i, offset);
  }
  return offset;
}

Vector round_binaries(const std::vector<double>& primal, int count) {
  Vector x(count);
  for (int j = 0; j < count; ++j) x(j) = std::round(primal[j]);
  return x;
}

// The exact backend takes neither binaries nor problems of this size.
lp::SolveOptions subproblem_solver(const lp::SolveOptions& options) {
  lp::SolveOptions opts = options;
  opts.backend = lp::Backend::Highs;
  return opts;
}

// Dual feasible region of the recourse LP, which does not depend on xi:
// G^T lambda (<= | =) b, lambda <= 0 on inequality rows.
int add_dual_block(lp::LinearProgram& prog, const MatrixForm& f, const Vector& lower,
                   const Vector& upper) {
  const int offset = prog.num_variables();
  for (int i = 0; i < f.G.rows(); ++i) prog.add_variable(lower(i), upper(i), 0.0);
  const Eigen::SparseMatrix<double> gt = f.G;  // column access
  for (int j = 0; j < f.ny; ++j) {
    require(f.y_lower(j) == 0.0 || std::isinf(f.y_lower(j)), ErrorCode::InvalidArgument,
            "recourse columns must be nonnegative or free");
    require(std::isinf(f.y_upper(j)), ErrorCode::InvalidArgument,
            "recourse columns must not carry upper bounds");
    const bool free_col = std::isinf(f.y_lower(j));
    const int r = prog.add_row(free_col ? lp::RowSense::Equal : lp::RowSense::LessEqual, f.b(j));
    for (Eigen::SparseMatrix<double>::InnerIterator it(gt, j); it; ++it)
      prog.add_coefficient(r, offset + static_cast<int>(it.row()), it.value());
  }
  return offset;
}

struct DualBounds {
  Vector lower;
  Vector upper;
};

// Sign bounds on every dual, tightened by LP to the exact range over the dual
// region on rows that carry xi. Those rows need finite ranges for the product
// linearization below.
DualBounds dual_bounds(const MatrixForm& f, const lp::SolveOptions& options) {
  const int rows = static_cast<int>(f.G.rows());
  DualBounds out{Vector::Constant(rows, -lp::kInf), Vector::Zero(rows)};
  for (int i = 0; i < rows; ++i)
    if (f.g_equal[i]) out.upper(i) = lp::kInf;
  lp::LinearProgram prog;
  const int offset = add_dual_block(prog, f, out.lower, out.upper);
  for (int i = 0; i < rows; ++i) {
    if (f.U.row(i).nonZeros() == 0) continue;
    for (const auto sense : {lp::Sense::Minimize, lp::Sense::Maximize}) {
      prog.set_sense(sense);
      prog.set_objective(offset + i, 1.0);
      const auto res = lp::solve(prog, subproblem_solver(options));
      prog.set_objective(offset + i, 0.0);
      if (!res.optimal()) {
        fail(ErrorCode::SolverFailure,
             "dual of recourse row " + std::to_string(i) + " is unbounded or infeasible (" +
                 lp::to_string(res.status) + "); the recourse is not complete");
      }
      (sense == lp::Sense::Minimize ? out.lower(i) : out.upper(i)) = res.objective;
    }
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const auto idx = static_cast<std::size_t>(std::ceil(q * sorted.size()));
  return sorted[std::min(sorted.size() - 1, idx == 0 ? 0 : idx - 1)];
}

}  // namespace

lp::LinearProgram recourse_lp(const MatrixForm& f, const Vector& x, const Vector& xi) {
  const Vector rhs = recourse_rhs(f, x, xi);
  lp::LinearProgram prog;
  for (int j = 0; j < f.ny; ++j)
    prog.add_variable(f.y_lower(j), f.y_upper(j), f.b(j), lp::VarKind::Continuous, f.y_names[j]);
  for (int i = 0; i < f.G.rows(); ++i) {
    const int r = prog.add_row(sense_of(f.g_equal[i]), rhs(i), f.g_row_names[i]);
    add_sparse_row(prog, r, f.G, i, 0);
  }
  return prog;
}

RecourseResult solve_recourse(const MatrixForm& f, const Vector& x, const Vector& xi,
                              const lp::SolveOptions& options) {
  const auto res = lp::solve(recourse_lp(f, x, xi), options);
  if (!res.optimal()) {
    fail(ErrorCode::SolverFailure, std::string("recourse LP ended ") + lp::to_string(res.status));
  }
  RecourseResult out;
  out.cost = res.objective;
  out.y = Eigen::Map<const Vector>(res.primal.data(), f.ny);
  for (int t = 0; t < f.periods; ++t) {
    for (int b = 0; b < f.buses; ++b) {
      out.shed += out.y(f.shed_col(b, t));
      out.spill += out.y(f.spill_col(b, t));
    }
  }
  return out;
}

DeterministicResult solve_stochastic(const MatrixForm& f, std::span<const Vector> scenarios,
                                     const lp::SolveOptions& options) {
  require(!scenarios.empty(), ErrorCode::InvalidArgument, "at least one scenario is required");
  lp::LinearProgram prog;
  add_first_stage(prog, f);
  const double weight = 1.0 / static_cast<double>(scenarios.size());
  std::vector<int> offsets;
  for (const auto& xi : scenarios) {
    require(xi.size() == f.nxi, ErrorCode::DimensionMismatch, "scenario has the wrong length");
    offsets.push_back(add_scenario_block(prog, f, xi, weight));
  }
  const auto res = lp::solve(prog, options);
  if (!res.optimal()) {
    fail(ErrorCode::SolverFailure,
         std::string("deterministic problem ended ") + lp::to_string(res.status));
  }
  DeterministicResult out;
  out.cost = res.objective;
  out.x = round_binaries(res.primal, f.nx);
  out.first_stage_cost = f.c.dot(out.x);
  out.y = Eigen::Map<const Vector>(res.primal.data() + offsets.front(), f.ny);
  return out;
}

DeterministicResult solve_deterministic(const MatrixForm& f, const Vector& xi,
                                        const lp::SolveOptions& options) {
  const Vector scenarios[] = {xi};
  return solve_stochastic(f, scenarios, options);
}

namespace {

// max over the set of min_Y b^T Y for fixed X. The recourse value is convex
// in xi, so the maximum over a union of product polytopes sits at a vertex of
// one of them: xi_t is written as a binary choice among subset vertices tied
// to the set encoding's subset binaries, and strong duality turns the inner
// min into max lambda^T (l - E x - U xi). Each lambda_i xi product then is a
// sum of lambda_i * binary terms, linearized exactly with the dual ranges.
// With `combo` the subset binaries are fixed to that combination.
SubproblemResult solve_dual_vertex(const MatrixForm& f, const Vector& x, const sets::UnionSet& set,
                                   const DualBounds& bounds, const std::vector<int>* combo,
                                   const SubproblemOptions& options) {
  const auto enc = sets::encode_milp(set);
  lp::LinearProgram prog = enc.block;
  prog.set_sense(lp::Sense::Maximize);
  const int T = f.periods, m = f.farms;

  // vertex binaries per (t, k)
  struct Choice {
    int t, k, col;
    Vector vertex;
  };
  std::vector<Choice> choices;
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < set.subsets(t); ++k) {
      const int alpha = enc.alpha_col(k, t);
      if (combo) {
        const double on = (*combo)[t] == k ? 1.0 : 0.0;
        prog.set_bounds(alpha, on, on);
        if (on == 0.0) continue;
      }
      const Matrix v = set.subset(t, k).vertices();
      const int pick = prog.add_row(lp::RowSense::Equal, 0.0);
      prog.add_coefficient(pick, alpha, -1.0);
      std::vector<int> rows(m);
      for (int i = 0; i < m; ++i) {
        rows[i] = prog.add_row(lp::RowSense::Equal, 0.0);
        prog.add_coefficient(rows[i], enc.w_col(k, t, i), 1.0);
      }
      for (int r = 0; r < v.rows(); ++r) {
        const int col = prog.add_binary(0.0);
        prog.add_coefficient(pick, col, 1.0);
        for (int i = 0; i < m; ++i) prog.add_coefficient(rows[i], col, -v(r, i));
        choices.push_back({t, k, col, v.row(r).transpose()});
      }
    }
  }

  const int lambda = add_dual_block(prog, f, bounds.lower, bounds.upper);
  const Vector base = f.l - f.E * x;
  for (int i = 0; i < f.G.rows(); ++i) prog.set_objective(lambda + i, base(i));

  // lambda_i xi_t for each period t that row i touches: split lambda_i into
  // one copy per vertex binary of that period, each copy confined to
  // [lo, hi] * beta. With beta binary only the chosen vertex's copy is
  // nonzero, so the objective term is exact; the relaxation is the
  // disjunctive hull, much tighter than bounding each product separately.
  std::vector<int> period_of(f.nxi), farm_of(f.nxi);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < m; ++j) {
      period_of[f.xi_index(t, j)] = t;
      farm_of[f.xi_index(t, j)] = j;
    }
  for (int i = 0; i < f.G.rows(); ++i) {
    if (f.U.row(i).nonZeros() == 0) continue;
    const double lo = bounds.lower(i), hi = bounds.upper(i);
    std::vector<bool> touched(T, false);
    for (SparseRows::InnerIterator it(f.U, i); it; ++it) touched[period_of[it.col()]] = true;
    for (int t = 0; t < T; ++t) {
      if (!touched[t]) continue;
      const int split = prog.add_row(lp::RowSense::Equal, 0.0);
      prog.add_coefficient(split, lambda + i, 1.0);
      for (const auto& c : choices) {
        if (c.t != t) continue;
        double coef = 0.0;
        for (SparseRows::InnerIterator it(f.U, i); it; ++it)
          if (period_of[it.col()] == t) coef += it.value() * c.vertex(farm_of[it.col()]);
        const int copy = prog.add_variable(std::min(lo, 0.0), std::max(hi, 0.0), -coef);
        prog.add_coefficient(split, copy, -1.0);
        int r = prog.add_row(lp::RowSense::LessEqual, 0.0);
        prog.add_coefficient(r, copy, 1.0);
        prog.add_coefficient(r, c.col, -hi);
        r = prog.add_row(lp::RowSense::GreaterEqual, 0.0);
        prog.add_coefficient(r, copy, 1.0);
        prog.add_coefficient(r, c.col, -lo);
      }
    }
  }

  const auto res = lp::solve(prog, subproblem_solver(options.solver));
  if (!res.optimal()) {
    fail(ErrorCode::SolverFailure, std::string(combo ? "restricted subproblem" : "subproblem MILP") +
                                       " ended " + lp::to_string(res.status));
  }
  const auto wc = sets::decode(set, enc, res.primal);
  SubproblemResult out;
  out.milp_value = res.objective;
  out.trajectory = wc.trajectory;
  out.subsets = wc.subsets;
  out.binaries = enc.binary_count();
  out.vertex_binaries = static_cast<int>(choices.size());
  return out;
}

}  // namespace

SubproblemResult solve_subproblem_milp(const MatrixForm& f, const Vector& x,
                                       const sets::UnionSet& set,
                                       const SubproblemOptions& options) {
  check_set(f, set);
  require(x.size() == f.nx, ErrorCode::DimensionMismatch, "X has the wrong length");
  auto out = solve_dual_vertex(f, x, set, dual_bounds(f, options.solver), nullptr, options);
  out.value = solve_recourse(f, x, stack(out.trajectory), options.solver).cost;
  return out;
}

SubproblemResult solve_subproblem_enum(const MatrixForm& f, const Vector& x,
                                       const sets::UnionSet& set,
                                       const SubproblemOptions& options) {
  check_set(f, set);
  require(x.size() == f.nx, ErrorCode::DimensionMismatch, "X has the wrong length");
  const long long count = sets::combination_count(set);
  if (count < 0 || count > options.enumeration_cap) {
    fail(ErrorCode::EnumerationTooLarge, "subset combinations exceed the enumeration cap of " +
                                             std::to_string(options.enumeration_cap));
  }
  const auto bounds = dual_bounds(f, options.solver);
  SubproblemResult best;
  best.milp_value = -lp::kInf;
  std::vector<int> combo(f.periods, 0);
  do {
    auto r = solve_dual_vertex(f, x, set, bounds, &combo, options);
    // strict improvement keeps the lexicographically first optimum
    if (r.milp_value > best.milp_value + 1e-9 * std::max(1.0, std::abs(r.milp_value))) {
      r.vertex_binaries = std::max(r.vertex_binaries, best.vertex_binaries);
      best = std::move(r);
    } else {
      best.vertex_binaries = std::max(best.vertex_binaries, r.vertex_binaries);
    }
  } while (sets::next_combination(combo, set));
  best.value = solve_recourse(f, x, stack(best.trajectory), options.solver).cost;
  return best;
}

RobustSolution solve_ccg(const MatrixForm& f, const sets::UnionSet& set, const CcgConfig& config) {
  check_set(f, set);
  require(config.max_iterations >= 1, ErrorCode::InvalidArgument,
          "max_iterations must be positive");
  std::vector<Vector> scenarios;
  {
    Matrix start(f.periods, f.farms);
    for (int t = 0; t < f.periods; ++t) start.row(t) = set.subset(t, 0).center.transpose();
    scenarios.push_back(stack(start));
  }

  RobustSolution sol;
  sol.upper_bound = lp::kInf;
  sol.lower_bound = -lp::kInf;
  for (int it = 1; it <= config.max_iterations; ++it) {
    lp::LinearProgram master;
    add_first_stage(master, f);
    const int theta = master.add_variable(0.0, lp::kInf, 1.0, lp::VarKind::Continuous, "theta");
    for (const auto& xi : scenarios) {
      const int offset = add_scenario_block(master, f, xi, 0.0);
      // theta >= b^T Y_s
      const int r = master.add_row(lp::RowSense::GreaterEqual, 0.0);
      master.add_coefficient(r, theta, 1.0);
      for (int j = 0; j < f.ny; ++j) master.add_coefficient(r, offset + j, -f.b(j));
    }
    const auto res = lp::solve(master, config.subproblem.solver);
    if (!res.optimal()) {
      fail(ErrorCode::SolverFailure, std::string("master problem ended ") + lp::to_string(res.status));
    }
    sol.lower_bound = std::max(sol.lower_bound, res.objective);
    const Vector x = round_binaries(res.primal, f.nx);

    const auto sub = config.method == SubproblemMethod::Milp
                         ? solve_subproblem_milp(f, x, set, config.subproblem)
                         : solve_subproblem_enum(f, x, set, config.subproblem);
    const double candidate = f.c.dot(x) + sub.value;
    if (candidate < sol.upper_bound) {
      sol.upper_bound = candidate;
      sol.x = x;
      sol.first_stage_cost = f.c.dot(x);
      sol.worst_recourse_cost = sub.value;
    }
    sol.iterations = it;
    sol.lower_trace.push_back(sol.lower_bound);
    sol.upper_trace.push_back(sol.upper_bound);
    sol.worst_scenarios.push_back(sub.trajectory);
    sol.scenario_subsets.push_back(sub.subsets);
    sol.gap = (sol.upper_bound - sol.lower_bound) / std::max(1.0, std::abs(sol.upper_bound));
    if (sol.gap <= config.tolerance) {
      sol.converged = true;
      break;
    }
    const Vector next = stack(sub.trajectory);
    const bool repeated = std::any_of(scenarios.begin(), scenarios.end(), [&](const Vector& s) {
      return (s - next).cwiseAbs().maxCoeff() <= 1e-7 * std::max(1.0, next.cwiseAbs().maxCoeff());
    });
    if (repeated) {
      // The master already prices this scenario; what remains is solver tolerance.
      sol.converged = true;
      break;
    }
    scenarios.push_back(next);
  }
  sol.total_cost = sol.upper_bound;
  sol.commitment = commitment_matrix(f, sol.x);
  return sol;
}

std::uint64_t period_seed(std::uint64_t seed, int t) {
  return seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t + 1);
}

std::vector<Vector> sample_trajectories(std::span<const gmm::ConditionalGmm> models, int n,
                                        std::uint64_t seed) {
  require(n >= 1, ErrorCode::InvalidArgument, "sample count must be positive");
  const int periods = static_cast<int>(models.size());
  const int m = models.front().m();
  std::vector<Vector> out(n, Vector(periods * m));
  for (int t = 0; t < periods; ++t) {
    require(models[t].m() == m, ErrorCode::DimensionMismatch, "period models disagree on m");
    const SampleMatrix draws = gmm::sample_conditional(models[t], n, period_seed(seed, t));
    for (int s = 0; s < n; ++s) out[s].segment(t * m, m) = draws.row(s).transpose();
  }
  return out;
}

ReliabilityReport evaluate_reliability(const MatrixForm& f, const Vector& x,
                                       std::span<const gmm::ConditionalGmm> models, int n,
                                       std::uint64_t seed, const lp::SolveOptions& options) {
  require(static_cast<int>(models.size()) == f.periods, ErrorCode::DimensionMismatch,
          "one conditional model per period expected");
  require(models.front().m() == f.farms, ErrorCode::DimensionMismatch,
          "model dimension must equal the farm count");
  const auto draws = sample_trajectories(models, n, seed);
  const Vector base = f.l - f.E * x;
  std::vector<int> uncertain_rows;
  for (int i = 0; i < f.U.rows(); ++i)
    if (SparseRows::InnerIterator(f.U, i)) uncertain_rows.push_back(i);

  lp::LpSession session(recourse_lp(f, x, Vector::Zero(f.nxi)), options);
  ReliabilityReport rep;
  rep.samples = n;
  rep.period_violations.assign(f.periods, 0);
  rep.costs.reserve(n);
  int reliable = 0;
  for (const auto& xi : draws) {
    const Vector rhs = base - f.U * xi;
    for (int i : uncertain_rows) session.set_rhs(i, rhs(i));
    const auto res = session.solve();
    if (!res.optimal()) {
      fail(ErrorCode::SolverFailure, std::string("recourse LP ended ") + lp::to_string(res.status));
    }
    bool ok = true;
    for (int t = 0; t < f.periods; ++t) {
      double slack = 0.0;
      for (int b = 0; b < f.buses; ++b)
        slack = std::max({slack, res.primal[f.shed_col(b, t)], res.primal[f.spill_col(b, t)]});
      if (slack > 1e-6) {
        ok = false;
        ++rep.period_violations[t];
      }
    }
    reliable += ok ? 1 : 0;
    rep.costs.push_back(res.objective);
  }
  rep.reliability = static_cast<double>(reliable) / n;
  const double sum = std::accumulate(rep.costs.begin(), rep.costs.end(), 0.0);
  rep.mean_cost = sum / n;
  double sq = 0.0;
  for (double c : rep.costs) sq += (c - rep.mean_cost) * (c - rep.mean_cost);
  rep.std_cost = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  std::vector<double> sorted = rep.costs;
  std::sort(sorted.begin(), sorted.end());
  rep.p50_cost = quantile_sorted(sorted, 0.5);
  rep.p95_cost = quantile_sorted(sorted, 0.95);
  rep.max_cost = sorted.back();
  return rep;
}

nlohmann::json to_json(const RobustSolution& s, const MatrixForm& f) {
  auto matrix_rows = [](const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row(m.cols());
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& w : s.worst_scenarios) scenarios.push_back(matrix_rows(w));
  nlohmann::json commitment = nlohmann::json::array();
  for (int g = 0; g < f.units; ++g) {
    std::vector<int> row(f.periods);
    for (int t = 0; t < f.periods; ++t) row[t] = static_cast<int>(s.commitment(g, t));
    commitment.push_back(row);
  }
  return {{"commitment", commitment},
          {"cost",
           {{"total", s.total_cost},
            {"first_stage", s.first_stage_cost},
            {"worst_recourse", s.worst_recourse_cost}}},
          {"scenarios", scenarios},
          {"scenario_subsets", s.scenario_subsets},
          {"gap", s.gap},
          {"lower_bound", s.lower_bound},
          {"upper_bound", s.upper_bound},
          {"iterations", s.iterations},
          {"converged", s.converged},
          {"lower_trace", s.lower_trace},
          {"upper_trace", s.upper_trace}};
}

nlohmann::json to_json(const ReliabilityReport& r) {
  return {{"samples", r.samples},   {"reliability", r.reliability},
          {"mean_cost", r.mean_cost}, {"std_cost", r.std_cost},
          {"p50_cost", r.p50_cost}, {"p95_cost", r.p95_cost},
          {"max_cost", r.max_cost}, {"period_violations", r.period_violations}};
}

std::string reliability_histogram_csv(const ReliabilityReport& r, int bins) {
  require(bins >= 1, ErrorCode::InvalidArgument, "bins must be positive");
  std::ostringstream out;
  out << "cost,count\n";
  if (r.costs.empty()) return out.str();
  const auto [lo_it, hi_it] = std::minmax_element(r.costs.begin(), r.costs.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;
  std::vector<long> counts(bins, 0);
  for (double c : r.costs) {
    const int b = width > 0.0 ? static_cast<int>((c - lo) / width) : 0;
    ++counts[std::clamp(b, 0, bins - 1)];
  }
  char buf[64];
  for (int b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.17g,%ld\n", lo + (b + 0.5) * width, counts[b]);
    out << buf;
  }
  return out.str();
}

}  // namespace caus::dispatch
