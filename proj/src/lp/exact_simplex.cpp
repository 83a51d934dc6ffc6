// Dense two-phase primal simplex in exact rational arithmetic with Bland's
// rule. Meant for small oracle problems only.

#include <gmpxx.h>

#include <chrono>
#include <cmath>

#include "core/error.hpp"
#include "lp/linear_program.hpp"

namespace caus::lp {

namespace {

constexpr int kMaxExactVariables = 64;

// How an original column maps onto nonnegative standard-form columns:
// x = shift + sign * x_plus - (split ? x_minus : 0)
struct ColumnMap {
  mpq_class shift;
  int sign = 1;
  int plus = -1;
  int minus = -1;
};

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), cells_((rows + 1) * (cols + 1)) {}

  mpq_class& at(int r, int c) { return cells_[r * (cols_ + 1) + c]; }
  mpq_class& rhs(int r) { return at(r, cols_); }
  // Row `rows_` holds reduced costs; its rhs cell holds -objective.
  mpq_class& cost(int c) { return at(rows_, c); }

  void pivot(int pr, int pc) {
    const mpq_class p = at(pr, pc);
    for (int c = 0; c <= cols_; ++c) at(pr, c) /= p;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const mpq_class f = at(r, pc);
      if (f == 0) continue;
      for (int c = 0; c <= cols_; ++c) {
        if (at(pr, c) != 0) at(r, c) -= f * at(pr, c);
      }
    }
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

 private:
  int rows_;
  int cols_;
  std::vector<mpq_class> cells_;
};

enum class Outcome { Optimal, Unbounded };

// Minimizes over the tableau's cost row with Bland's rule. Columns with
// index >= `allowed` never enter.
Outcome run_simplex(Tableau& t, std::vector<int>& basis, int allowed) {
  for (;;) {
    int enter = -1;
    for (int c = 0; c < allowed; ++c) {
      if (t.cost(c) < 0) {
        enter = c;
        break;
      }
    }
    if (enter < 0) return Outcome::Optimal;
    int leave = -1;
    mpq_class best;
    for (int r = 0; r < t.rows(); ++r) {
      if (t.at(r, enter) <= 0) continue;
      mpq_class ratio = t.rhs(r) / t.at(r, enter);
      if (leave < 0 || ratio < best || (ratio == best && basis[r] < basis[leave])) {
        leave = r;
        best = ratio;
      }
    }
    if (leave < 0) return Outcome::Unbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
}

}  // namespace

namespace detail {

SolveResult solve_exact(const LinearProgram& problem) {
  const auto start = std::chrono::steady_clock::now();
  if (problem.is_mip()) {
    fail(ErrorCode::BackendUnavailable, "the exact rational backend solves LPs only");
  }
  const int n = problem.num_variables();
  if (n > kMaxExactVariables) {
    fail(ErrorCode::BackendUnavailable, "the exact rational backend is limited to " +
                                            std::to_string(kMaxExactVariables) + " variables");
  }

  // Standard form: min c'z, A z = b, z >= 0, b >= 0.
  std::vector<ColumnMap> map(n);
  int std_cols = 0;
  struct ExtraRow {
    int col;
    mpq_class bound;
  };
  std::vector<ExtraRow> upper_rows;
  for (int j = 0; j < n; ++j) {
    const double lo = problem.lower()[j];
    const double hi = problem.upper()[j];
    if (std::isfinite(lo)) {
      map[j] = {mpq_class(lo), 1, std_cols++, -1};
      if (std::isfinite(hi)) upper_rows.push_back({j, mpq_class(hi) - mpq_class(lo)});
    } else if (std::isfinite(hi)) {
      map[j] = {mpq_class(hi), -1, std_cols++, -1};
    } else {
      map[j] = {mpq_class(0), 1, std_cols, std_cols + 1};
      std_cols += 2;
    }
  }

  const int orig_rows = problem.num_rows();
  const int total_rows = orig_rows + static_cast<int>(upper_rows.size());
  // Dense original rows in terms of standard columns, plus sense and rhs.
  std::vector<std::vector<mpq_class>> a(total_rows, std::vector<mpq_class>(std_cols));
  std::vector<mpq_class> b(total_rows);
  std::vector<RowSense> sense(total_rows, RowSense::LessEqual);
  for (int i = 0; i < orig_rows; ++i) {
    b[i] = mpq_class(problem.rhs()[i]);
    sense[i] = problem.row_senses()[i];
  }
  for (const auto& t : problem.triplets()) {
    const ColumnMap& cm = map[t.col];
    const mpq_class v(t.value);
    a[t.row][cm.plus] += cm.sign * v;
    if (cm.minus >= 0) a[t.row][cm.minus] -= v;
    b[t.row] -= v * cm.shift;
  }
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    const int row = orig_rows + static_cast<int>(k);
    a[row][map[upper_rows[k].col].plus] = 1;
    b[row] = upper_rows[k].bound;
  }

  int slack_count = 0;
  for (int i = 0; i < total_rows; ++i) slack_count += sense[i] != RowSense::Equal;
  const int structural = std_cols + slack_count;
  const int cols = structural + total_rows;  // artificials last
  Tableau t(total_rows, cols);
  std::vector<int> basis(total_rows);
  int slack = std_cols;
  for (int i = 0; i < total_rows; ++i) {
    for (int c = 0; c < std_cols; ++c) t.at(i, c) = a[i][c];
    t.rhs(i) = b[i];
    if (sense[i] == RowSense::LessEqual) t.at(i, slack++) = 1;
    if (sense[i] == RowSense::GreaterEqual) t.at(i, slack++) = -1;
    if (t.rhs(i) < 0) {
      for (int c = 0; c <= cols; ++c) t.at(i, c) = -t.at(i, c);
    }
    t.at(i, structural + i) = 1;
    basis[i] = structural + i;
  }

  SolveResult result;
  result.stats.backend = "exact";

  // Phase 1: minimize the sum of artificials.
  for (int c = 0; c <= cols; ++c) t.cost(c) = 0;
  for (int i = 0; i < total_rows; ++i) {
    for (int c = 0; c < structural; ++c) t.cost(c) -= t.at(i, c);
    t.cost(cols) -= t.rhs(i);
  }
  run_simplex(t, basis, structural);
  if (t.cost(cols) != 0) {
    result.status = Status::Infeasible;
    return result;
  }
  // Drive any artificial still basic at zero out of the basis.
  for (int r = 0; r < total_rows; ++r) {
    if (basis[r] < structural) continue;
    for (int c = 0; c < structural; ++c) {
      if (t.at(r, c) != 0) {
        t.pivot(r, c);
        basis[r] = c;
        break;
      }
    }
  }

  // Phase 2 cost row in standard columns.
  const bool maximize = problem.sense() == Sense::Maximize;
  std::vector<mpq_class> c_std(cols);
  for (int j = 0; j < n; ++j) {
    mpq_class c(problem.objective()[j]);
    if (maximize) c = -c;
    const ColumnMap& cm = map[j];
    c_std[cm.plus] += cm.sign * c;
    if (cm.minus >= 0) c_std[cm.minus] -= c;
  }
  for (int c = 0; c < cols; ++c) t.cost(c) = c < structural ? c_std[c] : mpq_class(0);
  t.cost(cols) = 0;
  for (int r = 0; r < total_rows; ++r) {
    const int bc = basis[r];
    if (bc >= structural || c_std[bc] == 0) continue;
    const mpq_class f = c_std[bc];
    for (int c = 0; c <= cols; ++c) t.cost(c) -= f * t.at(r, c);
  }
  if (run_simplex(t, basis, structural) == Outcome::Unbounded) {
    result.status = Status::Unbounded;
    return result;
  }

  std::vector<mpq_class> z(cols);
  for (int r = 0; r < total_rows; ++r) z[basis[r]] = t.rhs(r);
  mpq_class objective(problem.objective_offset());
  result.primal.resize(n);
  for (int j = 0; j < n; ++j) {
    const ColumnMap& cm = map[j];
    mpq_class x = cm.shift + cm.sign * z[cm.plus];
    if (cm.minus >= 0) x -= z[cm.minus];
    objective += mpq_class(problem.objective()[j]) * x;
    result.primal[j] = x.get_d();
  }
  result.status = Status::Optimal;
  result.objective = objective.get_d();
  result.stats.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace detail

}  // namespace caus::lp
