#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "calibration/calibration.hpp"
#include "core/error.hpp"
#include "sets/uncertainty_sets.hpp"

using namespace caus;
using namespace caus::sets;
using calibration::CalibratedRadius;
using gmm::ConditionalGmm;
using Eigen::Vector2d;

namespace {

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  return a * a.transpose() + 0.2 * Matrix::Identity(n, n);
}

// Symmetric square root, deliberately not the Cholesky factor the library uses.
Matrix sqrtm(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

CalibratedRadius radius(double gamma, int period = 1) {
  CalibratedRadius r;
  r.gamma = gamma;
  r.period = period;
  return r;
}

ConditionalGmm random_mixture(int k, int m, std::mt19937_64& rng, double spread = 4.0) {
  std::normal_distribution<double> z;
  std::vector<double> w(k, 1.0 / k);
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (int i = 0; i < k; ++i) {
    means.push_back(Vector::NullaryExpr(m, [&](Eigen::Index) { return spread * z(rng); }));
    covs.push_back(random_spd(m, rng));
  }
  return ConditionalGmm::from_moments(w, means, covs);
}

CausSet random_caus(int k, int t, int m, std::mt19937_64& rng, int j = 8) {
  std::vector<ConditionalGmm> models;
  std::vector<CalibratedRadius> radii;
  std::uniform_real_distribution<double> g(1.0, 6.0);
  for (int p = 0; p < t; ++p) {
    models.push_back(random_mixture(k, m, rng));
    radii.push_back(radius(g(rng), p + 1));
  }
  return build_caus(models, radii, make_directions(m, j, 0));
}

bool has_row(const Matrix& dirs, const Vector& v) {
  for (int r = 0; r < dirs.rows(); ++r)
    if ((dirs.row(r).transpose() - v).norm() < 1e-12) return true;
  return false;
}

}  // namespace

TEST(Directions, TwoDimensionalEight) {
  const auto d = make_directions(2, 8);
  ASSERT_EQ(d.j(), 8);
  const double h = 1.0 / std::sqrt(2.0);
  for (Vector v : {Vector2d(1, 0), Vector2d(-1, 0), Vector2d(0, 1), Vector2d(0, -1),
                   Vector2d(h, h), Vector2d(-h, h), Vector2d(-h, -h), Vector2d(h, -h)})
    EXPECT_TRUE(has_row(d.directions, v)) << v.transpose();
}

TEST(Directions, OneDimension) {
  const auto d = make_directions(1, 2);
  ASSERT_EQ(d.j(), 2);
  EXPECT_TRUE(has_row(d.directions, Vector::Constant(1, 1.0)));
  EXPECT_TRUE(has_row(d.directions, Vector::Constant(1, -1.0)));
}

TEST(Directions, ThreeDimensionsUnitNorm) {
  const auto d = make_directions(3, 8, 5);
  ASSERT_EQ(d.j(), 8);
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE(has_row(d.directions, Vector::Unit(3, i)));
    EXPECT_TRUE(has_row(d.directions, -Vector::Unit(3, i)));
  }
  for (int r = 0; r < 8; ++r) EXPECT_NEAR(d.directions.row(r).norm(), 1.0, 1e-12);
  EXPECT_EQ(make_directions(3, 8, 5).directions, d.directions);
}

TEST(Directions, TooFew) {
  try {
    make_directions(3, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewDirections);
  }
  EXPECT_EQ(default_direction_count(2), 8);
  EXPECT_EQ(default_direction_count(5), 12);
}

TEST(Directions, PositiveSpanning) {
  EXPECT_TRUE(positively_spans(make_directions(2, 8).directions));
  EXPECT_TRUE(positively_spans(make_directions(4, 10).directions));
  EXPECT_FALSE(positively_spans(Matrix::Identity(2, 2)));
}

TEST(Polytope, IdentityUnitBall) {
  gmm::ConditionalComponent c{1.0, Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const auto p = build_subset_polytope(c, 1.0, make_directions(2, 4));
  for (int r = 0; r < 4; ++r) EXPECT_NEAR(p.support(p.d_matrix.row(r).transpose()), 1.0, 1e-9);
  for (int i = 0; i < 64; ++i) {
    const double a = 2.0 * M_PI * i / 64.0;
    EXPECT_TRUE(p.contains(Vector2d(std::cos(a), std::sin(a))));
  }
}

TEST(Polytope, ZeroRadiusIsTheCenter) {
  std::mt19937_64 rng(1);
  const auto mix = random_mixture(1, 2, rng);
  const auto p = build_subset_polytope(mix.component(0), 0.0, make_directions(2, 8));
  EXPECT_TRUE(p.contains(mix.component(0).mean));
  EXPECT_LT((p.d_matrix * mix.component(0).mean - p.d_vector).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_FALSE(p.contains(mix.component(0).mean + Vector2d(1e-3, 0.0)));
}

TEST(Polytope, EllipsoidBoundaryContained) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  const auto dirs = make_directions(2, 8);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix s = random_spd(2, rng);
    const Vector mu = Vector2d(z(rng), z(rng));
    const auto comp = ConditionalGmm::from_moments({1.0}, {mu}, {s}).component(0);
    const auto p = build_subset_polytope(comp, 2.0, dirs);
    const Matrix root = sqrtm(s);
    double worst = -1e300;
    for (int i = 0; i < 10000; ++i) {
      Vector u(2);
      u << z(rng), z(rng);
      const Vector x = mu + std::sqrt(2.0) * root * u.normalized();
      worst = std::max(worst, (p.d_matrix * x - p.d_vector).maxCoeff());
    }
    EXPECT_LE(worst, 1e-9);
  }
}

TEST(Polytope, PullInsideLandsOnTheSet) {
  std::mt19937_64 rng(3);
  const auto mix = random_mixture(1, 2, rng);
  const auto p = build_subset_polytope(mix.component(0), 3.0, make_directions(2, 8));
  const Vector out = mix.component(0).mean + Vector2d(50.0, -40.0);
  const Vector in = p.pull_inside(out);
  EXPECT_TRUE(p.contains(in));
  // already-inside points are left alone
  EXPECT_EQ(p.pull_inside(mix.component(0).mean), mix.component(0).mean);
}

TEST(Polytope, GammaMonotone) {
  std::mt19937_64 rng(4);
  const auto mix = random_mixture(1, 3, rng);
  const auto dirs = make_directions(3, 10);
  Vector previous;
  for (double g : {0.0, 0.5, 1.0, 4.0, 9.0}) {
    const auto p = build_subset_polytope(mix.component(0), g, dirs);
    if (previous.size()) {
      EXPECT_TRUE((p.d_vector.array() >= previous.array()).all());
    }
    previous = p.d_vector;
  }
}

TEST(Polytope, VerticesOfSquare) {
  const auto box = to_union(build_box({Vector2d(0.0, 1.0)}, {Vector2d(2.0, 4.0)}));
  const Matrix v = box.subset(0, 0).vertices();
  ASSERT_EQ(v.rows(), 4);
  std::vector<std::pair<double, double>> got;
  for (int r = 0; r < 4; ++r) got.emplace_back(v(r, 0), v(r, 1));
  std::sort(got.begin(), got.end());
  const std::vector<std::pair<double, double>> want = {{0, 1}, {0, 4}, {2, 1}, {2, 4}};
  for (int r = 0; r < 4; ++r) {
    EXPECT_NEAR(got[r].first, want[r].first, 1e-12);
    EXPECT_NEAR(got[r].second, want[r].second, 1e-12);
  }
}

TEST(Polytope, OctagonVerticesAreTightPairs) {
  std::mt19937_64 rng(31);
  const auto mix = random_mixture(1, 2, rng);
  const auto p = build_subset_polytope(mix.component(0), 3.0, make_directions(2, 8));
  const Matrix v = p.vertices();
  EXPECT_EQ(v.rows(), 8);
  for (int r = 0; r < v.rows(); ++r) {
    const Vector slack = p.d_vector - p.d_matrix * v.row(r).transpose();
    EXPECT_GE(slack.minCoeff(), -1e-9);
    EXPECT_EQ((slack.array().abs() < 1e-8).count(), 2);
  }
}

TEST(Polytope, DegenerateHasOneVertex) {
  const auto box = to_union(build_box({Vector2d(3.0, 3.0)}, {Vector2d(3.0, 3.0)}));
  const Matrix v = box.subset(0, 0).vertices();
  ASSERT_EQ(v.rows(), 1);
  EXPECT_NEAR(v(0, 0), 3.0, 1e-12);
}

TEST(Polytope, VertexEnumerationCap) {
  std::mt19937_64 rng(32);
  const auto mix = random_mixture(1, 3, rng);
  const auto p = build_subset_polytope(mix.component(0), 2.0, make_directions(3, 12));
  try {
    p.vertices(10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EnumerationTooLarge);
  }
}

TEST(Caus, SinglePolytopeMembership) {
  std::mt19937_64 rng(5);
  const std::vector<ConditionalGmm> models = {random_mixture(1, 2, rng)};
  const std::vector<CalibratedRadius> radii = {radius(2.0)};
  const auto dirs = make_directions(2, 8);
  const auto set = build_caus(models, radii, dirs);
  const auto poly = build_subset_polytope(models[0].component(0), 2.0, dirs);
  std::normal_distribution<double> z;
  for (int i = 0; i < 200; ++i) {
    const Vector x = models[0].component(0).mean + 2.0 * Vector2d(z(rng), z(rng));
    EXPECT_EQ(membership(set, x.transpose()), poly.contains(x));
  }
}

TEST(Caus, CenterCombinationsAreMembers) {
  std::mt19937_64 rng(6);
  const auto mix = random_mixture(2, 2, rng);
  const std::vector<ConditionalGmm> models = {mix, mix};
  const std::vector<CalibratedRadius> radii = {radius(1.0, 1), radius(1.0, 2)};
  const auto set = build_caus(models, radii, make_directions(2, 8));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Matrix traj(2, 2);
      traj.row(0) = mix.component(a).mean.transpose();
      traj.row(1) = mix.component(b).mean.transpose();
      EXPECT_TRUE(membership(set, traj));
    }
}

TEST(Caus, MidpointOfSeparatedComponentsRejected) {
  const auto mix = ConditionalGmm::from_moments({0.5, 0.5}, {Vector2d(-10, 0), Vector2d(10, 0)},
                                                {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const std::vector<ConditionalGmm> models = {mix};
  const std::vector<CalibratedRadius> radii = {radius(4.0)};
  const auto set = build_caus(models, radii, make_directions(2, 8));
  const Vector mid = Vector2d(0, 0);
  bool inside_any = false;
  for (int k = 0; k < 2; ++k) {
    const auto& p = set.subset(0, k);
    inside_any |= ((p.d_matrix * mid - p.d_vector).array() <= 1e-9).all();
  }
  EXPECT_FALSE(inside_any);
  EXPECT_FALSE(membership(set, mid.transpose()));
}

TEST(Caus, FarAxisPointRejected) {
  std::mt19937_64 rng(7);
  const auto set = random_caus(2, 3, 2, rng);
  Matrix traj(3, 2);
  for (int t = 0; t < 3; ++t) traj.row(t) = set.subset(t, 0).center.transpose();
  ASSERT_TRUE(membership(set, traj));
  // far beyond every subset along +e1
  double far = 0.0;
  for (int k = 0; k < set.subsets(1); ++k)
    far = std::max(far, set.subset(1, k).support(Vector::Unit(2, 0)));
  traj(1, 0) = far + 10.0 * std::sqrt(set.gamma_per_period()[1]);
  EXPECT_FALSE(membership(set, traj));
}

TEST(Caus, EllipsoidPointsAreMembers) {
  std::mt19937_64 rng(8);
  const auto mix = random_mixture(2, 3, rng);
  const std::vector<ConditionalGmm> models = {mix};
  const std::vector<CalibratedRadius> radii = {radius(5.0)};
  const auto set = build_caus(models, radii, make_directions(3, 10));
  const auto pts = gmm::sample_conditional(mix, 2000, 3);
  int checked = 0;
  for (int i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    if (calibration::union_score(mix, x) <= 5.0) {
      ++checked;
      EXPECT_TRUE(membership(set, x.transpose()));
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(Caus, BigMIsValid) {
  std::mt19937_64 rng(9);
  const auto set = random_caus(3, 2, 2, rng);
  ASSERT_TRUE(set.has_big_m());
  for (int t = 0; t < set.periods(); ++t)
    for (int k = 0; k < set.subsets(t); ++k)
      for (int i = 0; i < 2; ++i) {
        const auto& p = set.subset(t, k);
        const double hi = std::max(p.support(Vector::Unit(2, i)), p.support(-Vector::Unit(2, i)));
        EXPECT_LT(hi, set.big_m()[t](i));
      }
}

TEST(Encoding, Counts) {
  std::mt19937_64 rng(10);
  const auto enc = encode_milp(random_caus(2, 2, 2, rng));
  EXPECT_EQ(enc.binary_count(), 4);
  EXPECT_EQ(enc.auxiliary_count(), 8);
  EXPECT_EQ(enc.block.num_binaries(), 4);
  EXPECT_EQ(enc.sos_rows.size(), 2u);
}

TEST(Encoding, LinearGrowth) {
  std::mt19937_64 rng(11);
  for (int k = 1; k <= 6; ++k)
    for (int t = 1; t <= 6; ++t) {
      const auto enc = encode_milp(random_caus(k, t, 2, rng));
      EXPECT_EQ(enc.block.num_binaries(), k * t);
      EXPECT_EQ(enc.auxiliary_count(), k * t * 2);
    }
}

TEST(Encoding, MissingBigM) {
  std::mt19937_64 rng(12);
  auto set = random_caus(1, 1, 2, rng);
  set.clear_big_m();
  try {
    encode_milp(set);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingBigM);
  }
}

TEST(WorstCase, SingleSubsetIsPolytopeLp) {
  std::mt19937_64 rng(13);
  const auto set = random_caus(1, 1, 2, rng);
  std::normal_distribution<double> z;
  for (int i = 0; i < 10; ++i) {
    const Matrix obj = Matrix::NullaryExpr(1, 2, [&](Eigen::Index, Eigen::Index) { return z(rng); });
    const double lp = set.subset(0, 0).support(obj.row(0).transpose());
    EXPECT_NEAR(worst_case_milp(set, obj).value, lp, 1e-6 * (1.0 + std::abs(lp)));
    EXPECT_NEAR(worst_case_enumerate(set, obj).value, lp, 1e-9 * (1.0 + std::abs(lp)));
  }
}

TEST(WorstCase, MilpEqualsEnumeration) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> z;
  const auto set = random_caus(3, 3, 2, rng);
  EXPECT_EQ(combination_count(set), 27);
  for (int i = 0; i < 10; ++i) {
    const Matrix obj = Matrix::NullaryExpr(3, 2, [&](Eigen::Index, Eigen::Index) { return z(rng); });
    // oracle: best of the 27 per-combination LPs, computed here directly
    double best = -1e300;
    std::vector<int> combo(3, 0);
    do {
      double v = 0.0;
      for (int t = 0; t < 3; ++t) v += set.subset(t, combo[t]).support(obj.row(t).transpose());
      best = std::max(best, v);
    } while (next_combination(combo, set));
    const auto milp = worst_case_milp(set, obj);
    const auto en = worst_case_enumerate(set, obj);
    EXPECT_NEAR(milp.value, best, 1e-6 * (1.0 + std::abs(best)));
    EXPECT_NEAR(en.value, best, 1e-6 * (1.0 + std::abs(best)));
    EXPECT_TRUE(membership(set, milp.trajectory));
    double attained = 0.0;
    for (int t = 0; t < 3; ++t) attained += obj.row(t).dot(milp.trajectory.row(t));
    EXPECT_NEAR(attained, best, 1e-6 * (1.0 + std::abs(best)));
  }
}

TEST(WorstCase, NullObjective) {
  std::mt19937_64 rng(15);
  const auto set = random_caus(2, 2, 2, rng);
  const auto w = worst_case_enumerate(set, Matrix::Zero(2, 2));
  EXPECT_NEAR(w.value, 0.0, 1e-12);
  EXPECT_TRUE(membership(set, w.trajectory));
  EXPECT_EQ(w.subsets, (std::vector<int>{0, 0}));
}

TEST(WorstCase, SymmetricComponentsPickPositiveSide) {
  const auto mix = ConditionalGmm::from_moments({0.5, 0.5}, {Vector2d(-5, 0), Vector2d(5, 0)},
                                                {Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  const std::vector<ConditionalGmm> models = {mix, mix};
  const std::vector<CalibratedRadius> radii = {radius(1.0, 1), radius(1.0, 2)};
  const auto set = build_caus(models, radii, make_directions(2, 8));
  Matrix obj = Matrix::Zero(2, 2);
  obj.col(0).setOnes();
  const auto w = worst_case_enumerate(set, obj);
  EXPECT_EQ(w.subsets, (std::vector<int>{1, 1}));
  EXPECT_NEAR(w.value, 12.0, 1e-9);
}

TEST(WorstCase, EnumerationCap) {
  std::mt19937_64 rng(16);
  const auto set = random_caus(3, 4, 2, rng);
  try {
    worst_case_enumerate(set, Matrix::Zero(4, 2), 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EnumerationTooLarge);
  }
}

TEST(Box, DegenerateSamples) {
  SampleMatrix s(5, 2);
  s.rowwise() = Eigen::RowVector2d(3.0, -1.0);
  const std::vector<SampleMatrix> per = {s};
  const auto box = build_box(per);
  EXPECT_EQ(box.lower[0], box.upper[0]);
  const auto set = to_union(box);
  EXPECT_TRUE(membership(set, Eigen::RowVector2d(3.0, -1.0)));
  EXPECT_FALSE(membership(set, Eigen::RowVector2d(3.0, -0.99)));
}

TEST(Box, BoundsAndErrors) {
  const auto set = to_union(build_box({Vector2d(0, 0)}, {Vector2d(2, 1)}));
  EXPECT_TRUE(membership(set, Eigen::RowVector2d(2.0, 0.0)));
  EXPECT_FALSE(membership(set, Eigen::RowVector2d(2.1, 0.0)));
  try {
    build_box({Vector2d(0, 0)}, {Vector2d(-1, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyBounds);
  }
}

TEST(Uos, FullBudgetIsTheImageOfTheCube) {
  std::mt19937_64 rng(17);
  const auto mix = random_mixture(1, 2, rng);
  const auto uos = build_uos_baseline(mix, 1, 1.5, {2.0});
  const auto set = to_union(uos);
  const Matrix f = uos.periods[0][0].factor;
  const Vector mu = mix.component(0).mean;
  for (double a : {-1.0, 1.0})
    for (double b : {-1.0, 1.0}) {
      const Vector corner = mu + f * Vector2d(a, b);
      EXPECT_TRUE(membership(set, corner.transpose()));
      EXPECT_FALSE(membership(set, (mu + 1.01 * (corner - mu)).transpose()));
    }
  EXPECT_LT((f - 1.5 * sqrtm(mix.component(0).covariance)).norm(), 1e-9);
}

TEST(Uos, UnitBudgetIsTheDiamond) {
  const auto mix = ConditionalGmm::from_moments({1.0}, {Vector2d(1, 2)}, {Matrix::Identity(2, 2)});
  const auto set = to_union(build_uos_baseline(mix, 1, 1.0, {1.0}));
  for (Vector v : {Vector2d(1, 0), Vector2d(-1, 0), Vector2d(0, 1), Vector2d(0, -1),
                   Vector2d(0.5, 0.5)})
    EXPECT_TRUE(membership(set, (Vector2d(1, 2) + v).transpose())) << v.transpose();
  EXPECT_FALSE(membership(set, (Vector2d(1, 2) + Vector2d(0.6, 0.6)).transpose()));
}

TEST(Uos, DefaultLambda) {
  EXPECT_NEAR(default_uos_lambda(2), std::sqrt(-2.0 * std::log(0.05)), 1e-9);
}

TEST(Json, RoundTrip) {
  std::mt19937_64 rng(18);
  const auto set = random_caus(2, 2, 2, rng);
  const auto back = union_set_from_json(to_json(set));
  EXPECT_EQ(to_json(back).dump(), to_json(set).dump());
}

TEST(SetKind, Names) {
  EXPECT_EQ(parse_set_kind("box"), SetKind::Box);
  EXPECT_STREQ(to_string(SetKind::Uos), "uos");
  EXPECT_THROW(parse_set_kind("pcs"), Error);
}
