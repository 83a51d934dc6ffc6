#include <gtest/gtest.h>

#include <random>

#include "core/error.hpp"
#include "lp/linear_program.hpp"

using namespace caus;
using namespace caus::lp;

namespace {

SolveOptions with(Backend b) {
  SolveOptions o;
  o.backend = b;
  return o;
}

// min c.x s.t. A x >= b, x >= 0, built so that (x*, y*) satisfy
// complementary slackness; the optimum is therefore c.x* exactly.
struct KnownLp {
  LinearProgram lp;
  double optimum;
};

KnownLp known_lp(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> small(1, 4);
  std::vector<std::vector<double>> a(rows, std::vector<double>(cols));
  for (auto& r : a)
    for (auto& v : r) v = std::round(u(rng) * 4.0) / 4.0;  // exact in binary
  std::vector<double> x(cols), y(rows);
  for (int j = 0; j < cols; ++j) x[j] = (j % 2 == 0) ? small(rng) : 0.0;
  for (int i = 0; i < rows; ++i) y[i] = (i % 2 == 1) ? 0.0 : small(rng);
  KnownLp out;
  std::vector<double> c(cols);
  for (int j = 0; j < cols; ++j) {
    double aty = 0.0;
    for (int i = 0; i < rows; ++i) aty += a[i][j] * y[i];
    c[j] = aty + (x[j] > 0.0 ? 0.0 : small(rng));
  }
  for (int j = 0; j < cols; ++j) out.lp.add_variable(0.0, kInf, c[j]);
  for (int i = 0; i < rows; ++i) {
    double ax = 0.0;
    for (int j = 0; j < cols; ++j) ax += a[i][j] * x[j];
    const double rhs = ax - (y[i] > 0.0 ? 0.0 : small(rng));
    const int r = out.lp.add_row(RowSense::GreaterEqual, rhs);
    for (int j = 0; j < cols; ++j) out.lp.add_coefficient(r, j, a[i][j]);
  }
  out.optimum = 0.0;
  for (int j = 0; j < cols; ++j) out.optimum += c[j] * x[j];
  return out;
}

}  // namespace

TEST(Lp, MaximizeSingleBound) {
  for (auto b : {Backend::Highs, Backend::ExactRational}) {
    LinearProgram lp;
    lp.set_sense(Sense::Maximize);
    const int x = lp.add_variable(-kInf, kInf, 1.0);
    const std::pair<int, double> t[] = {{x, 1.0}};
    lp.add_row(t, RowSense::LessEqual, 3.0);
    const auto r = solve(lp, with(b));
    ASSERT_TRUE(r.optimal()) << to_string(b);
    EXPECT_NEAR(r.objective, 3.0, 1e-12);
  }
}

TEST(Lp, ContradictoryRowsAreInfeasible) {
  for (auto b : {Backend::Highs, Backend::ExactRational}) {
    LinearProgram lp;
    const int x = lp.add_variable(-kInf, kInf, 0.0);
    const std::pair<int, double> t[] = {{x, 1.0}};
    lp.add_row(t, RowSense::LessEqual, -1.0);
    lp.add_row(t, RowSense::GreaterEqual, 1.0);
    EXPECT_EQ(solve(lp, with(b)).status, Status::Infeasible) << to_string(b);
  }
}

TEST(Lp, UnboundedDetected) {
  for (auto b : {Backend::Highs, Backend::ExactRational}) {
    LinearProgram lp;
    lp.set_sense(Sense::Maximize);
    const int x = lp.add_variable(0.0, kInf, 1.0);
    const std::pair<int, double> t[] = {{x, 1.0}};
    lp.add_row(t, RowSense::GreaterEqual, 1.0);
    EXPECT_EQ(solve(lp, with(b)).status, Status::Unbounded) << to_string(b);
  }
}

TEST(Lp, KnownOptimumMatchesBothBackends) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = known_lp(5, 5, rng);
    const auto h = solve(k.lp, with(Backend::Highs));
    const auto e = solve(k.lp, with(Backend::ExactRational));
    ASSERT_TRUE(h.optimal());
    ASSERT_TRUE(e.optimal());
    EXPECT_NEAR(e.objective, k.optimum, 1e-9 * (1.0 + std::abs(k.optimum)));
    EXPECT_NEAR(h.objective, e.objective, 1e-8 * (1.0 + std::abs(k.optimum)));
  }
}

TEST(Lp, DualObjectiveAgrees) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto k = known_lp(6, 7, rng);
    for (auto b : {Backend::Highs, Backend::ExactRational}) {
      const auto r = solve(k.lp, with(b));
      ASSERT_TRUE(r.optimal());
      if (r.row_duals.empty()) continue;
      EXPECT_NEAR(dual_objective(k.lp, r), r.objective, 1e-6) << to_string(b);
    }
  }
}

TEST(Lp, RandomOptimaAreFeasible) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    LinearProgram lp;
    const int n = 8, m = 10;
    for (int j = 0; j < n; ++j) lp.add_variable(-5.0, 5.0, u(rng));
    for (int i = 0; i < m; ++i) {
      // rows through a random interior point keep the problem feasible
      const int r = lp.add_row(RowSense::LessEqual, 1.0 + std::abs(u(rng)));
      for (int j = 0; j < n; ++j) lp.add_coefficient(r, j, u(rng));
    }
    const auto res = solve(lp);
    ASSERT_TRUE(res.optimal());
    worst = std::max(worst, check_feasibility(lp, res.primal).max_violation);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(Lp, DeterministicObjective) {
  std::mt19937_64 rng(3);
  const auto k = known_lp(5, 6, rng);
  const auto a = solve(k.lp);
  const auto b = solve(k.lp);
  EXPECT_NEAR(a.objective, b.objective, 1e-9);
}

TEST(Lp, MixedBinaryKnapsack) {
  LinearProgram lp;
  lp.set_sense(Sense::Maximize);
  const double value[] = {10, 13, 7, 8};
  const double weight[] = {5, 7, 4, 3};
  const int r = lp.add_row(RowSense::LessEqual, 10.0);
  for (int j = 0; j < 4; ++j) lp.add_coefficient(r, lp.add_binary(value[j]), weight[j]);
  const auto res = solve(lp);
  ASSERT_TRUE(res.optimal());
  // best subsets: {0,2} 17, {1,3} 21, {0,3} 18, {2,3} 15
  EXPECT_NEAR(res.objective, 21.0, 1e-9);
  EXPECT_THROW(solve(lp, with(Backend::ExactRational)), Error);
}

TEST(CheckFeasibility, ZeroProblem) {
  LinearProgram lp;
  const auto rep = check_feasibility(lp, std::vector<double>{});
  EXPECT_EQ(rep.max_violation, 0.0);
  EXPECT_TRUE(rep.rows.empty());
}

TEST(CheckFeasibility, ReportsViolatedRow) {
  LinearProgram lp;
  const int x = lp.add_variable(-kInf, kInf, 0.0);
  const int y = lp.add_variable(-kInf, kInf, 0.0);
  const std::pair<int, double> r0[] = {{x, 1.0}};
  const std::pair<int, double> r1[] = {{x, 1.0}, {y, 1.0}};
  lp.add_row(r0, RowSense::LessEqual, 10.0);
  lp.add_row(r1, RowSense::LessEqual, 1.0);
  const double point[] = {2.0, 1.5};
  const auto rep = check_feasibility(lp, point);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].index, 1);
  EXPECT_NEAR(rep.rows[0].amount, 2.5, 1e-12);
  EXPECT_NEAR(rep.max_violation, 2.5, 1e-12);
}

TEST(CheckFeasibility, DimensionMismatch) {
  LinearProgram lp;
  lp.add_variable(0.0, 1.0, 0.0);
  try {
    check_feasibility(lp, std::vector<double>{1.0, 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(TextFormat, RoundTrip) {
  std::mt19937_64 rng(17);
  auto k = known_lp(4, 4, rng);
  k.lp.add_binary(2.5, "pick");
  k.lp.set_bounds(1, -2.0, 7.5);
  const auto text = to_text(k.lp);
  const auto back = from_text(text);
  EXPECT_EQ(to_text(back), text);
  EXPECT_EQ(back.num_binaries(), 1);
  EXPECT_EQ(back.num_rows(), k.lp.num_rows());
}

TEST(TextFormat, MalformedLineIsParseError) {
  try {
    from_text("this is not a constraint list\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}

TEST(LpSession, RhsUpdateMatchesFreshSolve) {
  std::mt19937_64 rng(23);
  auto k = known_lp(5, 5, rng);
  LpSession session(k.lp);
  ASSERT_TRUE(session.solve().optimal());
  for (int step = 0; step < 5; ++step) {
    const double rhs = k.lp.rhs()[0] - 0.5 * (step + 1);
    session.set_rhs(0, rhs);
    k.lp.set_rhs(0, rhs);
    const auto warm = session.solve();
    const auto cold = solve(k.lp);
    ASSERT_EQ(warm.status, cold.status);
    if (cold.optimal()) EXPECT_NEAR(warm.objective, cold.objective, 1e-8);
  }
}
