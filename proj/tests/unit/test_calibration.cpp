#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "calibration/calibration.hpp"
#include "core/error.hpp"

using namespace caus;
using namespace caus::calibration;
using gmm::ConditionalGmm;

namespace {

// Chi-square CDF for 1..3 degrees of freedom in closed form, inverted by
// bisection. Kept independent of the library's quantile code.
double chi2_cdf(double x, int dof) {
  if (x <= 0.0) return 0.0;
  switch (dof) {
    case 1: return std::erf(std::sqrt(x / 2.0));
    case 2: return 1.0 - std::exp(-x / 2.0);
    case 3: return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double chi2_quantile(double p, int dof) {
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  return a * a.transpose() + 0.3 * Matrix::Identity(n, n);
}

ConditionalGmm standard(int m) {
  return ConditionalGmm::from_moments({1.0}, {Vector::Zero(m)}, {Matrix::Identity(m, m)});
}

ConditionalGmm two_component(std::mt19937_64& rng, int m = 2) {
  std::normal_distribution<double> z;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (int k = 0; k < 2; ++k) {
    means.push_back(Vector::NullaryExpr(m, [&](Eigen::Index) { return 3.0 * z(rng); }));
    covs.push_back(random_spd(m, rng));
  }
  return ConditionalGmm::from_moments({0.4, 0.6}, means, covs);
}

}  // namespace

TEST(OracleSelfCheck, KnownQuantiles) {
  EXPECT_NEAR(chi2_quantile(0.95, 1), 3.841458820694124, 1e-9);
  EXPECT_NEAR(chi2_quantile(0.95, 2), -2.0 * std::log(0.05), 1e-9);
}

TEST(UnionScore, IdentityIsSquaredNorm) {
  Vector p(2);
  p << 3.0, 4.0;
  EXPECT_NEAR(union_score(standard(2), p), 25.0, 1e-12);
}

TEST(UnionScore, ZeroAtEveryCenter) {
  std::mt19937_64 rng(1);
  const auto m = two_component(rng);
  for (const auto& c : m.components()) EXPECT_NEAR(union_score(m, c.mean), 0.0, 1e-20);
}

TEST(UnionScore, MatchesExplicitInverse) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  const auto m = two_component(rng);
  for (int i = 0; i < 20; ++i) {
    const Vector p = Vector::NullaryExpr(2, [&](Eigen::Index) { return 3.0 * z(rng); });
    double want = std::numeric_limits<double>::infinity();
    for (const auto& c : m.components()) {
      const Vector d = p - c.mean;
      want = std::min(want, d.dot(c.covariance.inverse() * d));
    }
    EXPECT_NEAR(union_score(m, p), want, 1e-9 * std::max(1.0, want));
  }
}

TEST(UnionScore, BatchAgreesWithSingle) {
  std::mt19937_64 rng(3);
  const auto m = two_component(rng, 3);
  const auto pts = gmm::sample_conditional(m, 50, 9);
  const auto batch = union_scores(m, pts);
  for (int i = 0; i < 50; ++i)
    EXPECT_NEAR(batch[i], union_score(m, pts.row(i).transpose()), 1e-10 * (1.0 + batch[i]));
}

TEST(UnionScore, AffineInvariance) {
  std::mt19937_64 rng(4);
  const auto m = two_component(rng);
  Matrix a(2, 2);
  a << 2.0, 0.7, -0.4, 1.3;
  Vector b(2);
  b << 5.0, -3.0;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  std::vector<double> w;
  for (const auto& c : m.components()) {
    means.push_back(a * c.mean + b);
    covs.push_back(a * c.covariance * a.transpose());
    w.push_back(c.weight);
  }
  const auto mapped = ConditionalGmm::from_moments(w, means, covs);
  const auto pts = gmm::sample_conditional(m, 100, 5);
  for (int i = 0; i < 100; ++i) {
    const Vector p = pts.row(i).transpose();
    EXPECT_NEAR(union_score(m, p), union_score(mapped, a * p + b), 1e-8);
  }
}

TEST(UnionScore, DimensionMismatch) {
  try {
    union_score(standard(2), Vector::Zero(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Rank, FiveHundredthsOfTenThousand) { EXPECT_EQ(order_statistic_rank(0.05, 10000), 9501); }

TEST(Rank, SmallestAdmissibleCase) {
  EXPECT_EQ(order_statistic_rank(0.5, 1), 1);
  const double one[] = {2.5};
  const auto r = radius_from_scores(one, 0.5);
  EXPECT_EQ(r.kappa, 1);
  EXPECT_EQ(r.gamma, 2.5);
}

TEST(Rank, ExactIntegerTargetsAreNotRoundedUp) {
  // (1 - eps)(N + 1) is an integer in exact arithmetic for all of these
  EXPECT_EQ(order_statistic_rank(0.1, 9), 9);
  EXPECT_EQ(order_statistic_rank(0.2, 99), 80);
  EXPECT_EQ(order_statistic_rank(0.01, 99), 99);
  EXPECT_EQ(order_statistic_rank(0.3, 9), 7);
}

TEST(Rank, Unattainable) {
  try {
    calibrate(standard(1), 10, 0.01, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankUnattainable);
  }
}

TEST(Rank, RejectsEpsilonOutsideUnitInterval) {
  EXPECT_THROW(order_statistic_rank(0.0, 10), Error);
  EXPECT_THROW(order_statistic_rank(1.0, 10), Error);
}

TEST(Calibrate, ChiSquareOneDimension) {
  const auto r = calibrate(standard(1), 100000, 0.05, 7);
  EXPECT_NEAR(r.gamma, chi2_quantile(0.95, 1), 0.15);
  EXPECT_EQ(r.kappa, order_statistic_rank(0.05, 100000));
}

TEST(Calibrate, RadiusIsTheKappaOrderStatistic) {
  std::mt19937_64 rng(8);
  const auto m = two_component(rng);
  const auto full = calibrate_full(m, 2000, 0.1, 3);
  ASSERT_EQ(full.scores.scores.size(), 2000u);
  EXPECT_TRUE(std::is_sorted(full.scores.scores.begin(), full.scores.scores.end()));
  EXPECT_EQ(full.radius.gamma, full.scores.scores[full.radius.kappa - 1]);
  // scores are recomputable from the recorded samples
  auto direct = union_scores(m, full.samples);
  std::sort(direct.begin(), direct.end());
  EXPECT_EQ(direct, full.scores.scores);
}

TEST(Calibrate, MonotoneInEpsilon) {
  std::mt19937_64 rng(9);
  const auto m = two_component(rng);
  double previous = 0.0;
  for (double eps : {0.3, 0.2, 0.1, 0.05, 0.01}) {
    const double g = calibrate(m, 5000, eps, 11).gamma;
    EXPECT_GE(g, previous);
    previous = g;
  }
}

TEST(Coverage, InfiniteAndZeroRadius) {
  std::mt19937_64 rng(10);
  const auto m = two_component(rng);
  CalibratedRadius r;
  r.gamma = std::numeric_limits<double>::infinity();
  EXPECT_EQ(empirical_coverage(m, r, 1000, 1), 1.0);
  r.gamma = 0.0;
  EXPECT_EQ(empirical_coverage(m, r, 1000, 1), 0.0);
}

TEST(Coverage, TenThousandSampleBand) {
  std::mt19937_64 rng(11);
  const auto m = two_component(rng);
  const auto r = calibrate(m, 10000, 0.05, 21);
  const double cov = empirical_coverage(m, r, 10000, 22);
  EXPECT_GE(cov, 0.94);
  EXPECT_LE(cov, 0.97);
}

TEST(Coverage, MarginalValidityOverReplications) {
  std::mt19937_64 rng(12);
  const auto m = two_component(rng);
  double sum = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const auto r = calibrate(m, 500, 0.1, 1000 + rep);
    sum += empirical_coverage(m, r, 2000, 5000 + rep);
  }
  EXPECT_GE(sum / reps, 0.9);
}

TEST(Coverage, DataCoverageCountsPoints) {
  SampleMatrix pts(4, 1);
  pts << 0.0, 1.0, 2.0, 3.0;
  EXPECT_DOUBLE_EQ(data_coverage(standard(1), 1.0, pts), 0.5);
}

TEST(ShareMax, UsesLargestRadius) {
  std::vector<CalibratedRadius> r(3);
  r[0].gamma = 1.0;
  r[1].gamma = 4.0;
  r[2].gamma = 2.0;
  for (const auto& x : share_max_radius(r)) EXPECT_EQ(x.gamma, 4.0);
}

TEST(Histogram, CountsAllScores) {
  const std::vector<double> s = {0.1, 0.2, 0.2, 0.9, 1.5, 3.0};
  const auto csv = histogram_csv(s, 4);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  int total = 0, rows = 0;
  while (std::getline(in, line)) {
    total += std::stoi(line.substr(line.rfind(',') + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(total, 6);
}

TEST(Json, RadiusRoundTrip) {
  CalibratedRadius r{3.5, 0.05, 9501, 10000, 17, 2};
  const auto back = radius_from_json(to_json(r));
  EXPECT_EQ(back.gamma, r.gamma);
  EXPECT_EQ(back.kappa, r.kappa);
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_EQ(back.period, r.period);
}
