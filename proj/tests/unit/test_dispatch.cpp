#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "core/error.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/uc_model.hpp"
#include "io/history.hpp"

using namespace caus;
using namespace caus::dispatch;

namespace {

Unit unit(double p_min, double p_max, double energy, double commit = 0.0, double startup = 0.0) {
  Unit u;
  u.name = "g";
  u.p_min = p_min;
  u.p_max = p_max;
  u.ramp_up = u.ramp_down = p_max;
  u.cost_energy = energy;
  u.cost_commit = commit;
  u.cost_startup = startup;
  return u;
}

UcInstance single_bus(std::vector<double> loads, std::vector<Unit> units, int farms = 0) {
  UcInstance in;
  in.name = "single";
  in.periods = static_cast<int>(loads.size());
  in.buses = 1;
  in.loads = std::move(loads);
  in.load_shares = {1.0};
  in.units = std::move(units);
  for (int j = 0; j < farms; ++j) in.farms.push_back({"w" + std::to_string(j), 0});
  return in;
}

nlohmann::json load_json(const std::string& name) {
  std::ifstream f(std::string(CAUS_DATA_DIR) + "/" + name);
  return nlohmann::json::parse(f);
}

UcInstance six_bus(int periods = 4) {
  auto in = instance_from_json(load_json("six_bus.json"));
  in.periods = periods;
  in.loads.resize(periods);
  return in;
}

// One-point box per period.
sets::UnionSet singleton(const Matrix& traj) {
  std::vector<Vector> lo, hi;
  for (int t = 0; t < traj.rows(); ++t) {
    lo.push_back(traj.row(t).transpose());
    hi.push_back(traj.row(t).transpose());
  }
  return sets::to_union(sets::build_box(lo, hi));
}

// Conditioned wind model for each period at fixed forecasts.
std::vector<gmm::ConditionalGmm> wind_models(int periods) {
  const auto joint = io::synthetic_wind_model();
  const double f[][2] = {{40, 35}, {55, 50}, {65, 60}, {50, 45}};
  std::vector<gmm::ConditionalGmm> out;
  for (int t = 0; t < periods; ++t) out.push_back(gmm::condition(joint, Eigen::Vector2d(f[t][0], f[t][1])));
  return out;
}

sets::UnionSet caus_set(int periods, double gamma = 4.0) {
  const auto models = wind_models(periods);
  std::vector<calibration::CalibratedRadius> radii(periods);
  for (int t = 0; t < periods; ++t) {
    radii[t].gamma = gamma;
    radii[t].period = t + 1;
  }
  return sets::build_caus(models, radii, sets::make_directions(2, 8));
}

}  // namespace

TEST(Assemble, MinimalShape) {
  const auto f = assemble(single_bus({50.0}, {unit(0.0, 100.0, 10.0)}));
  EXPECT_EQ(f.nx, 3);
  EXPECT_EQ(f.ny, 3);  // p, shed, spill
  EXPECT_EQ(f.nxi, 0);
  int balance = -1;
  for (int r = 0; r < static_cast<int>(f.g_row_names.size()); ++r)
    if (f.g_row_names[r].rfind("balance", 0) == 0) balance = r;
  ASSERT_GE(balance, 0);
  EXPECT_TRUE(f.g_equal[balance]);
  EXPECT_EQ(f.l(balance), 50.0);
  EXPECT_EQ(f.G.row(balance).nonZeros(), 3);
  EXPECT_EQ(f.G.coeff(balance, f.p_col(0, 0)), 1.0);
  EXPECT_EQ(f.G.coeff(balance, f.shed_col(0, 0)), 1.0);
  EXPECT_EQ(f.G.coeff(balance, f.spill_col(0, 0)), -1.0);
}

TEST(Assemble, EachFarmAddsOneUncertainTermPerPeriod) {
  const auto a = assemble(single_bus({50.0, 60.0}, {unit(0.0, 100.0, 10.0)}));
  const auto b = assemble(single_bus({50.0, 60.0}, {unit(0.0, 100.0, 10.0)}, 1));
  EXPECT_EQ(b.nxi, 2);
  EXPECT_EQ(b.U.nonZeros(), 2);
  EXPECT_EQ(a.G.rows(), b.G.rows());
  for (int t = 0; t < 2; ++t) {
    int row = -1;
    for (int r = 0; r < b.G.rows(); ++r)
      if (b.g_row_names[r] == "balance_0_" + std::to_string(t)) row = r;
    ASSERT_GE(row, 0);
    // xi moves to the right-hand side: G y = l - U xi
    EXPECT_EQ(b.U.coeff(row, b.xi_index(t, 0)), 1.0);
  }
}

TEST(Assemble, SixBusMatchesSidecarCounts) {
  const auto want = load_json("six_bus.dims.json");
  const auto got = to_json(dimensions(assemble(six_bus())));
  for (const char* key : {"nx", "ny", "nxi", "first_stage_rows", "first_stage_equalities",
                          "recourse_rows", "recourse_equalities", "u_nonzeros"})
    EXPECT_EQ(got.at(key), want.at(key)) << key;
}

TEST(Assemble, InconsistentInstanceRejected) {
  auto in = single_bus({50.0}, {unit(0.0, 100.0, 10.0)});
  in.load_shares = {0.5};
  try {
    assemble(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InconsistentInstance);
  }
}

TEST(Assemble, JsonRoundTrip) {
  const auto in = six_bus();
  EXPECT_EQ(to_json(instance_from_json(to_json(in))).dump(), to_json(in).dump());
}

TEST(Deterministic, ZeroLoadAllOff) {
  auto in = single_bus({0.0, 0.0}, {unit(10.0, 100.0, 10.0, 50.0, 100.0)}, 1);
  const auto r = solve_deterministic(assemble(in), Vector::Zero(2));
  EXPECT_NEAR(r.cost, 0.0, 1e-9);
  EXPECT_NEAR(r.x.sum(), 0.0, 1e-9);
}

TEST(Deterministic, ShortfallIsPenalized) {
  auto in = single_bus({150.0}, {unit(0.0, 100.0, 10.0, 5.0)});
  in.shed_penalty = 1000.0;
  const auto r = solve_deterministic(assemble(in), Vector());
  EXPECT_NEAR(r.cost, 5.0 + 10.0 * 100.0 + 1000.0 * 50.0, 1e-6);
}

TEST(Deterministic, MinUpTimeHolds) {
  // cheap unit needed only in period 0 must stay on for its minimum up time
  Unit a = unit(10.0, 100.0, 1.0, 1.0, 0.0);
  a.min_up = 3;
  Unit b = unit(0.0, 100.0, 50.0);
  const auto f = assemble(single_bus({50.0, 0.0, 0.0, 0.0}, {a, b}));
  const auto r = solve_deterministic(f, Vector());
  const Matrix u = commitment_matrix(f, r.x);
  if (u(0, 0) > 0.5) {
    EXPECT_GT(u(0, 1), 0.5);
    EXPECT_GT(u(0, 2), 0.5);
  }
}

TEST(Recourse, SolveMatchesLpByHand) {
  auto in = single_bus({80.0}, {unit(0.0, 100.0, 10.0)}, 1);
  const auto f = assemble(in);
  Vector x = Vector::Zero(f.nx);
  x(f.u_col(0, 0)) = 1.0;
  x(f.v_col(0, 0)) = 1.0;
  const auto r = solve_recourse(f, x, Vector::Constant(1, 30.0));
  EXPECT_NEAR(r.cost, 10.0 * 50.0, 1e-8);
  EXPECT_NEAR(r.shed, 0.0, 1e-9);
  EXPECT_NEAR(r.spill, 0.0, 1e-9);
  const auto s = solve_recourse(f, x, Vector::Constant(1, 100.0));
  EXPECT_NEAR(s.spill, 20.0, 1e-8);
}

TEST(Subproblem, SingletonBothPathsGiveRecourseCost) {
  const auto in = six_bus(2);
  const auto f = assemble(in);
  Matrix traj(2, 2);
  traj << 30.0, 25.0, 45.0, 40.0;
  const auto det = solve_deterministic(f, stack(traj));
  const auto set = singleton(traj);
  const double want = solve_recourse(f, det.x, stack(traj)).cost;
  EXPECT_NEAR(solve_subproblem_milp(f, det.x, set).value, want, 1e-6 * want);
  EXPECT_NEAR(solve_subproblem_enum(f, det.x, set).value, want, 1e-6 * want);
}

TEST(Subproblem, SurplusWindWorstCaseAtVertex) {
  // load is always covered by wind; worst case spills the most
  auto in = single_bus({20.0}, {unit(5.0, 100.0, 10.0)}, 1);
  const auto f = assemble(in);
  Vector x = Vector::Zero(f.nx);
  x(f.u_col(0, 0)) = 1.0;
  x(f.v_col(0, 0)) = 1.0;
  const auto set = sets::to_union(sets::build_box({Vector::Constant(1, 30.0)}, {Vector::Constant(1, 70.0)}));
  double oracle = -1.0;
  double vertex = 0.0;
  for (double v : {30.0, 70.0}) {
    const double c = solve_recourse(f, x, Vector::Constant(1, v)).cost;
    if (c > oracle) {
      oracle = c;
      vertex = v;
    }
  }
  for (const auto& r : {solve_subproblem_milp(f, x, set), solve_subproblem_enum(f, x, set)}) {
    EXPECT_NEAR(r.value, oracle, 1e-6 * oracle);
    EXPECT_NEAR(r.trajectory(0, 0), vertex, 1e-6);
  }
}

TEST(Subproblem, MilpAgreesWithEnumerationOnMixtureSet) {
  const auto f = assemble(six_bus(2));
  const auto set = caus_set(2);
  const auto models = wind_models(2);
  Vector mean(4);
  mean << models[0].mixture_mean(), models[1].mixture_mean();
  const auto det = solve_deterministic(f, mean);
  const auto a = solve_subproblem_milp(f, det.x, set);
  const auto b = solve_subproblem_enum(f, det.x, set);
  EXPECT_NEAR(a.value, b.value, 1e-5 * std::max(1.0, b.value));
  EXPECT_TRUE(sets::membership(set, a.trajectory));
  EXPECT_TRUE(sets::membership(set, b.trajectory));
  EXPECT_EQ(a.binaries, 4);
  EXPECT_GT(a.vertex_binaries, 0);
}

TEST(Subproblem, MatchesBruteForceOverVertices) {
  // the recourse cost is convex in xi, so its maximum over the set is the
  // largest value over every joint choice of subset vertices
  const auto f = assemble(six_bus(2));
  const auto set = caus_set(2, 6.0);
  std::vector<Matrix> verts(2);
  for (int t = 0; t < 2; ++t) {
    std::vector<Vector> rows;
    for (int k = 0; k < set.subsets(t); ++k) {
      const Matrix v = set.subset(t, k).vertices();
      for (int r = 0; r < v.rows(); ++r) rows.push_back(v.row(r).transpose());
    }
    verts[t].resize(static_cast<int>(rows.size()), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) verts[t].row(static_cast<int>(r)) = rows[r].transpose();
  }
  const std::vector<Vector> forecasts = {Vector::Constant(4, 60.0), Vector::Constant(4, 10.0)};
  for (const auto& xi_for_x : forecasts) {
    const auto x = solve_deterministic(f, xi_for_x).x;
    double oracle = -1.0;
    for (int a = 0; a < verts[0].rows(); ++a)
      for (int b = 0; b < verts[1].rows(); ++b) {
        Vector xi(4);
        xi << verts[0].row(a).transpose(), verts[1].row(b).transpose();
        oracle = std::max(oracle, solve_recourse(f, x, xi).cost);
      }
    const auto r = solve_subproblem_milp(f, x, set);
    EXPECT_NEAR(r.value, oracle, 1e-6 * oracle);
    EXPECT_NEAR(r.milp_value, oracle, 1e-5 * oracle);
  }
}

TEST(Ccg, SingletonEqualsDeterministic) {
  const auto f = assemble(six_bus(2));
  Matrix traj(2, 2);
  traj << 30.0, 25.0, 45.0, 40.0;
  const auto sol = solve_ccg(f, singleton(traj));
  const auto det = solve_deterministic(f, stack(traj));
  EXPECT_TRUE(sol.converged);
  EXPECT_EQ(sol.iterations, 1);
  EXPECT_NEAR(sol.total_cost, det.cost, 1e-6 * det.cost);
}

TEST(Ccg, BoxWorstCaseIsLowestWind) {
  auto in = single_bus({80.0, 90.0}, {unit(0.0, 150.0, 10.0, 20.0, 50.0)}, 1);
  const auto f = assemble(in);
  const auto set = sets::to_union(sets::build_box({Vector::Constant(1, 0.0), Vector::Constant(1, 5.0)},
                                                  {Vector::Constant(1, 30.0), Vector::Constant(1, 40.0)}));
  const auto sol = solve_ccg(f, set);
  Vector low(2);
  low << 0.0, 5.0;
  const auto det = solve_deterministic(f, low);
  EXPECT_TRUE(sol.converged);
  EXPECT_LE(sol.iterations, 2);
  EXPECT_NEAR(sol.total_cost, det.cost, 1e-6 * det.cost);
}

TEST(Ccg, MethodsAgreeAndCertificatesHold) {
  const auto f = assemble(six_bus(2));
  const auto set = caus_set(2);
  CcgConfig milp;
  CcgConfig en;
  en.method = SubproblemMethod::Enumerate;
  const auto a = solve_ccg(f, set, milp);
  const auto b = solve_ccg(f, set, en);
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_NEAR(a.total_cost, b.total_cost, 1e-5 * b.total_cost);
  EXPECT_LE(a.gap, 1e-4);
  for (const auto& s : a.worst_scenarios) EXPECT_TRUE(sets::membership(set, s));
  for (std::size_t i = 1; i < a.lower_trace.size(); ++i)
    EXPECT_GE(a.lower_trace[i], a.lower_trace[i - 1] - 1e-6 * std::abs(a.lower_trace[i]));
  for (std::size_t i = 0; i < a.lower_trace.size(); ++i)
    EXPECT_LE(a.lower_trace[i], a.upper_bound + 1e-6 * a.upper_bound);
}

TEST(Ccg, RobustCostAtLeastDeterministicAtMemberMean) {
  const auto f = assemble(six_bus(2));
  const auto set = caus_set(2);
  const auto models = wind_models(2);
  Matrix mean(2, 2);
  mean.row(0) = models[0].mixture_mean().transpose();
  mean.row(1) = models[1].mixture_mean().transpose();
  if (!sets::membership(set, mean)) GTEST_SKIP() << "mixture mean outside the set";
  const auto det = solve_deterministic(f, stack(mean));
  EXPECT_LE(det.cost, solve_ccg(f, set).total_cost * (1.0 + 1e-6));
}

TEST(Reliability, AmpleCapacity) {
  auto in = single_bus({100.0, 100.0}, {unit(0.0, 1000.0, 10.0)}, 1);
  const auto f = assemble(in);
  const auto models = std::vector<gmm::ConditionalGmm>(
      2, gmm::ConditionalGmm::from_moments({1.0}, {Vector::Constant(1, 10.0)}, {Matrix::Identity(1, 1)}));
  const auto det = solve_deterministic(f, Vector::Constant(2, 10.0));
  const auto rep = evaluate_reliability(f, det.x, models, 500, 1);
  EXPECT_EQ(rep.reliability, 1.0);
  EXPECT_EQ(rep.samples, 500);
}

TEST(Reliability, NoCommittedCapacity) {
  auto in = single_bus({100.0, 100.0}, {unit(0.0, 1000.0, 10.0)}, 1);
  const auto f = assemble(in);
  const auto models = std::vector<gmm::ConditionalGmm>(
      2, gmm::ConditionalGmm::from_moments({1.0}, {Vector::Constant(1, 10.0)}, {Matrix::Identity(1, 1)}));
  const auto rep = evaluate_reliability(f, Vector::Zero(f.nx), models, 500, 1);
  EXPECT_EQ(rep.reliability, 0.0);
  EXPECT_EQ(rep.period_violations, (std::vector<int>{500, 500}));
}

TEST(Reliability, Deterministic) {
  const auto f = assemble(six_bus(2));
  const auto models = wind_models(2);
  Vector mean(4);
  mean << models[0].mixture_mean(), models[1].mixture_mean();
  const auto det = solve_deterministic(f, mean);
  const auto a = evaluate_reliability(f, det.x, models, 300, 9);
  const auto b = evaluate_reliability(f, det.x, models, 300, 9);
  EXPECT_EQ(a.costs, b.costs);
  EXPECT_EQ(a.reliability, b.reliability);
}

TEST(Sampling, PeriodSeedsDiffer) {
  EXPECT_NE(period_seed(1, 0), period_seed(1, 1));
  EXPECT_EQ(period_seed(1, 2), period_seed(1, 2));
  const auto models = wind_models(3);
  const auto a = sample_trajectories(models, 10, 4);
  ASSERT_EQ(a.size(), 10u);
  EXPECT_EQ(a[0].size(), 6);
}
