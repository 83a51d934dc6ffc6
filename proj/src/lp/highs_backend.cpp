#include <cstdlib>
#include <chrono>
#include <cmath>

#include "Highs.h"
#include "core/error.hpp"
#include "lp/linear_program.hpp"

namespace caus::lp {

namespace {

HighsLp to_highs(const LinearProgram& problem) {
  HighsLp lp;
  const int n = problem.num_variables();
  const int m = problem.num_rows();
  lp.num_col_ = n;
  lp.num_row_ = m;
  lp.sense_ = problem.sense() == Sense::Maximize ? ObjSense::kMaximize : ObjSense::kMinimize;
  lp.offset_ = problem.objective_offset();
  lp.col_cost_ = problem.objective();
  lp.col_lower_ = problem.lower();
  lp.col_upper_ = problem.upper();
  lp.row_lower_.resize(m);
  lp.row_upper_.resize(m);
  for (int i = 0; i < m; ++i) {
    const double rhs = problem.rhs()[i];
    switch (problem.row_senses()[i]) {
      case RowSense::LessEqual:
        lp.row_lower_[i] = -kHighsInf;
        lp.row_upper_[i] = rhs;
        break;
      case RowSense::GreaterEqual:
        lp.row_lower_[i] = rhs;
        lp.row_upper_[i] = kHighsInf;
        break;
      case RowSense::Equal:
        lp.row_lower_[i] = rhs;
        lp.row_upper_[i] = rhs;
        break;
    }
  }

  // Column-wise storage; duplicate (row, col) entries are summed.
  std::vector<std::vector<std::pair<int, double>>> columns(n);
  for (const auto& t : problem.triplets()) columns[t.col].emplace_back(t.row, t.value);
  auto& a = lp.a_matrix_;
  a.format_ = MatrixFormat::kColwise;
  a.num_col_ = n;
  a.num_row_ = m;
  a.start_.assign(1, 0);
  for (auto& column : columns) {
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < column.size(); ++k) {
      if (!a.index_.empty() && a.start_.back() < static_cast<HighsInt>(a.index_.size()) &&
          a.index_.back() == column[k].first) {
        a.value_.back() += column[k].second;
      } else {
        a.index_.push_back(column[k].first);
        a.value_.push_back(column[k].second);
      }
    }
    a.start_.push_back(static_cast<HighsInt>(a.index_.size()));
  }

  if (problem.is_mip()) {
    lp.integrality_.resize(n);
    for (int j = 0; j < n; ++j) {
      lp.integrality_[j] = problem.kinds()[j] == VarKind::Binary ? HighsVarType::kInteger
                                                                  : HighsVarType::kContinuous;
    }
  }
  return lp;
}

void configure(Highs& highs, const SolveOptions& options) {
  highs.setOptionValue("output_flag", std::getenv("CAUS_HIGHS_LOG") != nullptr);
  highs.setOptionValue("threads", 1);
  highs.setOptionValue("random_seed", 0);
  highs.setOptionValue("primal_feasibility_tolerance", std::min(1e-7, options.feasibility_tolerance));
  highs.setOptionValue("dual_feasibility_tolerance", 1e-7);
  highs.setOptionValue("mip_feasibility_tolerance",
                       std::min(options.integrality_tolerance, options.feasibility_tolerance));
  highs.setOptionValue("mip_rel_gap", options.mip_relative_gap);
  highs.setOptionValue("mip_abs_gap", 1e-9);
  if (std::isfinite(options.time_limit_seconds)) {
    highs.setOptionValue("time_limit", options.time_limit_seconds);
  }
}

SolveResult collect(Highs& highs, const LinearProgram& problem, double seconds) {
  SolveResult result;
  result.stats.backend = "highs";
  result.stats.wall_seconds = seconds;
  const HighsInfo& info = highs.getInfo();
  result.stats.simplex_iterations = info.simplex_iteration_count;
  result.stats.mip_nodes = info.mip_node_count;
  result.stats.mip_gap = info.mip_gap;

  switch (highs.getModelStatus()) {
    case HighsModelStatus::kOptimal:
      result.status = Status::Optimal;
      break;
    case HighsModelStatus::kInfeasible:
      result.status = Status::Infeasible;
      break;
    case HighsModelStatus::kUnbounded:
    case HighsModelStatus::kUnboundedOrInfeasible:
      result.status = Status::Unbounded;
      break;
    case HighsModelStatus::kTimeLimit:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kInterrupt:
      result.status = Status::Limit;
      break;
    default:
      fail(ErrorCode::SolverFailure,
           "HiGHS finished with status '" + highs.modelStatusToString(highs.getModelStatus()) + "'");
  }
  if (result.status == Status::Unbounded && highs.getModelStatus() ==
                                                HighsModelStatus::kUnboundedOrInfeasible) {
    // Presolve could not tell; re-run without it to get a definite answer.
    highs.setOptionValue("presolve", "off");
    highs.run();
    highs.setOptionValue("presolve", "choose");
    if (highs.getModelStatus() == HighsModelStatus::kInfeasible) result.status = Status::Infeasible;
  }

  const HighsSolution& solution = highs.getSolution();
  if (solution.value_valid) {
    result.primal = solution.col_value;
    result.objective = highs.getInfo().objective_function_value;
  }
  if (result.status == Status::Optimal && !problem.is_mip() && solution.dual_valid) {
    result.row_duals = solution.row_dual;
    result.column_duals = solution.col_dual;
  }
  if (result.status == Status::Optimal && result.primal.size() !=
                                              static_cast<std::size_t>(problem.num_variables())) {
    fail(ErrorCode::SolverFailure, "HiGHS reported optimal without a primal solution");
  }
  return result;
}

}  // namespace

namespace detail {

SolveResult solve_highs(const LinearProgram& problem, const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  Highs highs;
  configure(highs, options);
  if (highs.passModel(to_highs(problem)) == HighsStatus::kError) {
    fail(ErrorCode::SolverFailure, "HiGHS rejected the model");
  }
  if (highs.run() == HighsStatus::kError) {
    fail(ErrorCode::SolverFailure, "HiGHS run failed");
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return collect(highs, problem, seconds);
}

}  // namespace detail

struct LpSession::Impl {
  Highs highs;
};

LpSession::LpSession(LinearProgram problem, SolveOptions options)
    : problem_(std::move(problem)), options_(options) {
  problem_.validate();
  if (options_.backend == Backend::Highs) {
    impl_ = std::make_unique<Impl>();
    configure(impl_->highs, options_);
    if (impl_->highs.passModel(to_highs(problem_)) == HighsStatus::kError) {
      fail(ErrorCode::SolverFailure, "HiGHS rejected the model");
    }
  }
}

LpSession::~LpSession() = default;
LpSession::LpSession(LpSession&&) noexcept = default;
LpSession& LpSession::operator=(LpSession&&) noexcept = default;

void LpSession::set_rhs(int row, double rhs) {
  problem_.set_rhs(row, rhs);
  if (!impl_) return;
  switch (problem_.row_senses().at(row)) {
    case RowSense::LessEqual: impl_->highs.changeRowBounds(row, -kHighsInf, rhs); break;
    case RowSense::GreaterEqual: impl_->highs.changeRowBounds(row, rhs, kHighsInf); break;
    case RowSense::Equal: impl_->highs.changeRowBounds(row, rhs, rhs); break;
  }
}

SolveResult LpSession::solve() {
  if (!impl_) return caus::lp::solve(problem_, options_);
  const auto start = std::chrono::steady_clock::now();
  if (impl_->highs.run() == HighsStatus::kError) {
    fail(ErrorCode::SolverFailure, "HiGHS run failed");
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  SolveResult result = collect(impl_->highs, problem_, seconds);
  if (options_.verify && result.optimal()) {
    const auto report = check_feasibility(problem_, result.primal, options_.feasibility_tolerance);
    if (!report.rows.empty() || !report.bounds.empty()) {
      fail(ErrorCode::NumericalFailure, "warm-started solve returned an infeasible point");
    }
  }
  return result;
}

}  // namespace caus::lp
