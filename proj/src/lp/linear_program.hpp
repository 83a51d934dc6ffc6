#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace caus::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { Minimize, Maximize };
enum class VarKind { Continuous, Binary };
enum class RowSense { LessEqual, GreaterEqual, Equal };

struct Triplet {
  int row;
  int col;
  double value;
};

/// A linear or mixed-binary program in row/column triplet form.
///
/// Variables carry bounds and a kind; binaries always have bounds within
/// [0, 1]. Rows are single-sided (<=, >= or =) with a scalar right-hand side.
class LinearProgram {
 public:
  int add_variable(double lower, double upper, double objective,
                   VarKind kind = VarKind::Continuous, std::string name = {});
  int add_binary(double objective, std::string name = {}) {
    return add_variable(0.0, 1.0, objective, VarKind::Binary, std::move(name));
  }
  int add_row(RowSense sense, double rhs, std::string name = {});
  int add_row(std::span<const std::pair<int, double>> terms, RowSense sense,
              double rhs, std::string name = {});
  void add_coefficient(int row, int col, double value);

  /// Appends all variables and rows of `block`; returns the column offset at
  /// which the block's variables start. The block's objective is added to
  /// this program's objective as-is.
  int append(const LinearProgram& block);

  void set_sense(Sense sense) { sense_ = sense; }
  void set_objective(int col, double value) { objective_.at(col) = value; }
  void set_objective_offset(double offset) { objective_offset_ = offset; }
  void set_bounds(int col, double lower, double upper);
  void set_rhs(int row, double rhs) { rhs_.at(row) = rhs; }

  Sense sense() const { return sense_; }
  int num_variables() const { return static_cast<int>(objective_.size()); }
  int num_rows() const { return static_cast<int>(rhs_.size()); }
  int num_binaries() const;
  bool is_mip() const { return num_binaries() > 0; }

  const std::vector<double>& objective() const { return objective_; }
  double objective_offset() const { return objective_offset_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<VarKind>& kinds() const { return kinds_; }
  const std::vector<std::string>& variable_names() const { return var_names_; }
  const std::vector<RowSense>& row_senses() const { return senses_; }
  const std::vector<double>& rhs() const { return rhs_; }
  const std::vector<std::string>& row_names() const { return row_names_; }
  const std::vector<Triplet>& triplets() const { return triplets_; }

  /// Row activities A x for a full-length point.
  std::vector<double> row_activity(std::span<const double> point) const;
  double evaluate_objective(std::span<const double> point) const;

  /// Throws InvalidArgument when an index is out of range, a coefficient is
  /// not finite, or a binary has bounds outside [0, 1].
  void validate() const;

 private:
  Sense sense_ = Sense::Minimize;
  double objective_offset_ = 0.0;
  std::vector<double> objective_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<VarKind> kinds_;
  std::vector<std::string> var_names_;
  std::vector<RowSense> senses_;
  std::vector<double> rhs_;
  std::vector<std::string> row_names_;
  std::vector<Triplet> triplets_;
};

enum class Status { Optimal, Infeasible, Unbounded, Limit };

const char* to_string(Status status);

enum class Backend { Highs, ExactRational };

const char* to_string(Backend backend);
Backend parse_backend(std::string_view name);

/// Backend named by the CAUS_LP_BACKEND environment variable, or HiGHS.
Backend default_backend();

struct SolveOptions {
  Backend backend = default_backend();
  double feasibility_tolerance = 1e-6;
  double integrality_tolerance = 1e-5;
  double mip_relative_gap = 1e-6;
  double time_limit_seconds = kInf;
  // Re-check primal feasibility of optimal results against the stored rows.
  bool verify = true;
};

struct SolverStats {
  std::string backend;
  std::int64_t simplex_iterations = 0;
  std::int64_t mip_nodes = 0;
  double mip_gap = 0.0;
  double wall_seconds = 0.0;
};

struct SolveResult {
  Status status = Status::Limit;
  double objective = 0.0;
  std::vector<double> primal;
  // LP only; empty for MIPs and for backends that do not report them.
  std::vector<double> row_duals;
  std::vector<double> column_duals;
  SolverStats stats;

  bool optimal() const { return status == Status::Optimal; }
};

SolveResult solve(const LinearProgram& problem, const SolveOptions& options = {});

struct Violation {
  int index;
  double amount;
};

struct ViolationReport {
  double max_violation = 0.0;
  std::vector<Violation> rows;    // rows violated beyond the tolerance
  std::vector<Violation> bounds;  // columns outside their bounds
};

ViolationReport check_feasibility(const LinearProgram& problem,
                                  std::span<const double> point,
                                  double tolerance = 1e-6);

/// Dual objective value implied by the row and column duals of an LP result,
/// using the stationarity identity c = A^T y + r.
double dual_objective(const LinearProgram& problem, const SolveResult& result);

/// Neutral constraint-list text format: one variable or constraint per line.
std::string to_text(const LinearProgram& problem);
LinearProgram from_text(std::string_view text);

/// Keeps one backend session alive so that right-hand sides can be changed
/// and the problem re-solved with a warm start.
class LpSession {
 public:
  explicit LpSession(LinearProgram problem, SolveOptions options = {});
  ~LpSession();
  LpSession(LpSession&&) noexcept;
  LpSession& operator=(LpSession&&) noexcept;

  void set_rhs(int row, double rhs);
  SolveResult solve();
  const LinearProgram& problem() const { return problem_; }

 private:
  struct Impl;
  LinearProgram problem_;
  SolveOptions options_;
  std::unique_ptr<Impl> impl_;
};

namespace detail {
SolveResult solve_highs(const LinearProgram& problem, const SolveOptions& options);
SolveResult solve_exact(const LinearProgram& problem);
}  // namespace detail

}  // namespace caus::lp
