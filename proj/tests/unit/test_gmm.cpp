#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "core/error.hpp"
#include "gmm/gmm.hpp"

using namespace caus;
using namespace caus::gmm;

namespace {

using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Direct density summation in extended precision with an explicit inverse.
long double oracle_density(const JointGmm& model, const Vector& point) {
  long double total = 0.0L;
  for (const auto& c : model.components()) {
    const LMatrix s = c.covariance.cast<long double>();
    const LVector d = (point - c.mean).cast<long double>();
    const long double q = d.dot(s.inverse() * d);
    const long double dim = static_cast<long double>(point.size());
    total += c.weight * std::exp(-0.5L * q) /
             std::sqrt(std::pow(2.0L * 3.14159265358979323846264338327950288L, dim) * s.determinant());
  }
  return total;
}

Matrix random_spd(int n, std::mt19937_64& rng, double floor = 0.3) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  return a * a.transpose() + floor * Matrix::Identity(n, n);
}

JointGmm random_joint(int n, int m, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<GaussianComponent> comps(k);
  double total = 0.0;
  for (auto& c : comps) {
    c.weight = u(rng);
    total += c.weight;
    c.mean = Vector::NullaryExpr(n + m, [&](Eigen::Index) { return 2.0 * z(rng); });
    c.covariance = random_spd(n + m, rng);
  }
  for (auto& c : comps) c.weight /= total;
  return JointGmm(n, m, comps);
}

std::vector<Sample> gaussian_samples(const Vector& mean, const Matrix& cov, int n_cov, int count,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  const Matrix l = cov.llt().matrixL();
  std::vector<Sample> out;
  for (int i = 0; i < count; ++i) {
    Vector e(mean.size());
    for (auto& v : e) v = z(rng);
    const Vector p = mean + l * e;
    out.push_back({p.head(n_cov), p.tail(mean.size() - n_cov), 1});
  }
  return out;
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

}  // namespace

TEST(Fit, SingleGaussianRecovered) {
  std::mt19937_64 rng(1);
  const auto s = gaussian_samples(Vector::Zero(2), Matrix::Identity(2, 2), 1, 500, rng);
  const auto fit = fit_gmm(s, 1);
  const auto& c = fit.model.components()[0];
  EXPECT_LT(c.mean.norm(), 0.15);
  EXPECT_LT((c.covariance - Matrix::Identity(2, 2)).norm(), 0.2);
}

TEST(Fit, OneComponentIsSampleMoments) {
  std::mt19937_64 rng(2);
  Matrix cov(3, 3);
  cov << 2.0, 0.5, 0.1, 0.5, 1.0, 0.3, 0.1, 0.3, 1.5;
  const Vector mean = Vector::LinSpaced(3, -1.0, 4.0);
  const auto s = gaussian_samples(mean, cov, 1, 300, rng);
  Vector sm = Vector::Zero(3);
  for (const auto& x : s) {
    Vector p(3);
    p << x.covariate, x.uncertainty;
    sm += p;
  }
  sm /= s.size();
  Matrix sc = Matrix::Zero(3, 3);
  for (const auto& x : s) {
    Vector p(3);
    p << x.covariate, x.uncertainty;
    sc += (p - sm) * (p - sm).transpose();
  }
  sc /= s.size();
  const auto fit = fit_gmm(s, 1);
  const auto& c = fit.model.components()[0];
  EXPECT_LT((c.mean - sm).cwiseAbs().maxCoeff(), 1e-10);
  // allowed difference: the regularization jitter only
  EXPECT_LT((c.covariance - sc).cwiseAbs().maxCoeff(), 1e-7 * sc.diagonal().mean());
  EXPECT_NEAR(c.weight, 1.0, 1e-12);
}

TEST(Fit, SeparatedClustersGetEqualWeights) {
  std::mt19937_64 rng(3);
  std::vector<Sample> s;
  int first = 0;
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 400; ++i) {
    const bool a = coin(rng);
    first += a;
    auto one = gaussian_samples(Vector::Constant(2, a ? -5.0 : 5.0), 0.1 * Matrix::Identity(2, 2),
                                1, 1, rng);
    s.push_back(one[0]);
  }
  const auto fit = fit_gmm(s, 2);
  const double empirical = first / 400.0;
  for (const auto& c : fit.model.components()) {
    EXPECT_NEAR(c.weight, 0.5, 0.05);
    const double want = c.mean(0) < 0 ? empirical : 1.0 - empirical;
    EXPECT_NEAR(c.weight, want, 1e-6);
  }
}

TEST(Fit, LogLikelihoodNonDecreasing) {
  std::mt19937_64 rng(4);
  const auto truth = random_joint(2, 2, 3, rng);
  const auto s = sample_joint(truth, 600, 7);
  const auto fit = fit_gmm(s, 3);
  ASSERT_GE(fit.log_likelihood.size(), 2u);
  for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
    EXPECT_GE(fit.log_likelihood[i], fit.log_likelihood[i - 1] - 1e-8) << "iteration " << i;
}

TEST(Fit, SeedReproducible) {
  std::mt19937_64 rng(5);
  const auto truth = random_joint(1, 2, 2, rng);
  const auto s = sample_joint(truth, 400, 1);
  EmConfig cfg;
  cfg.seed = 42;
  EXPECT_EQ(to_json(fit_gmm(s, 2, cfg).model).dump(), to_json(fit_gmm(s, 2, cfg).model).dump());
}

TEST(Fit, RejectsTooFewSamples) {
  std::mt19937_64 rng(6);
  const auto s = gaussian_samples(Vector::Zero(2), Matrix::Identity(2, 2), 1, 2, rng);
  try {
    fit_gmm(s, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewSamples);
  }
}

TEST(LogDensity, StandardNormalAtMode) {
  JointGmm model(1, 1, {{1.0, Vector::Zero(2), Matrix::Identity(2, 2)}});
  // covariate marginal of a 1+1 standard normal is N(0, 1)
  EXPECT_NEAR(model.log_density(Vector::Zero(1), Marginal::Covariate), -0.5 * std::log(2 * M_PI),
              1e-14);
  EXPECT_NEAR(model.log_density(Vector::Zero(2)), -std::log(2 * M_PI), 1e-14);
}

TEST(LogDensity, IdenticalComponentsCollapse) {
  std::mt19937_64 rng(8);
  GaussianComponent c{0.5, Vector::Random(3), random_spd(3, rng)};
  JointGmm two(1, 2, {c, c});
  c.weight = 1.0;
  JointGmm one(1, 2, {c});
  for (int i = 0; i < 5; ++i) {
    const Vector p = Vector::Random(3);
    EXPECT_NEAR(two.log_density(p), one.log_density(p), 1e-12);
  }
}

TEST(LogDensity, MatchesExtendedPrecisionSum) {
  std::mt19937_64 rng(9);
  const auto model = random_joint(1, 1, 3, rng);
  std::normal_distribution<double> z;
  for (int i = 0; i < 10; ++i) {
    const Vector p = Vector::NullaryExpr(2, [&](Eigen::Index) { return 2.0 * z(rng); });
    const double want = static_cast<double>(std::log(oracle_density(model, p)));
    EXPECT_NEAR(model.log_density(p), want, 1e-10);
  }
}

TEST(Condition, UncorrelatedBlocksUnchanged) {
  Matrix cov = Matrix::Zero(3, 3);
  cov(0, 0) = 2.0;
  cov.bottomRightCorner(2, 2) << 1.5, 0.4, 0.4, 0.9;
  Vector mean(3);
  mean << 1.0, -2.0, 3.0;
  const JointGmm model(1, 2, {{1.0, mean, cov}});
  const Vector x = Vector::Constant(1, 7.0);
  const auto c = condition(model, x);
  EXPECT_NEAR(c.component(0).weight, 1.0, 1e-15);
  EXPECT_LT((c.component(0).mean - mean.tail(2)).norm(), 1e-14);
  EXPECT_LT((c.component(0).covariance - cov.bottomRightCorner(2, 2)).norm(), 1e-14);
}

TEST(Condition, ScalarClosedForm) {
  Matrix cov(2, 2);
  cov << 1.0, 0.8, 0.8, 1.0;
  const JointGmm model(1, 1, {{1.0, Vector::Zero(2), cov}});
  const auto c = condition(model, Vector::Constant(1, 1.0));
  EXPECT_NEAR(c.component(0).mean(0), 0.8, 1e-12);
  EXPECT_NEAR(c.component(0).covariance(0, 0), 0.36, 1e-12);
}

TEST(Condition, TwoComponentWeightsByDirectEvaluation) {
  std::vector<GaussianComponent> comps;
  for (double mx : {-3.0, 3.0}) {
    Vector mean(2);
    mean << mx, 0.0;
    Matrix cov(2, 2);
    cov << 1.0, 0.3, 0.3, 2.0;
    comps.push_back({0.5, mean, cov});
  }
  const JointGmm model(1, 1, comps);
  const auto c = condition(model, Vector::Constant(1, -3.0));
  const double want = normal_pdf(0.0) / (normal_pdf(0.0) + normal_pdf(6.0));
  EXPECT_NEAR(c.component(0).weight, want, 1e-12);
}

TEST(Condition, RandomModelWeightsMatchOracle) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 100; ++trial) {
    const auto model = random_joint(2, 2, 3, rng);
    const Vector x = Vector::NullaryExpr(2, [&](Eigen::Index) { return z(rng); });
    const auto c = condition(model, x);
    std::vector<long double> w;
    long double sum = 0.0L;
    for (const auto& comp : model.components()) {
      const LMatrix s = comp.covariance.topLeftCorner(2, 2).cast<long double>();
      const LVector d = (x - comp.mean.head(2)).cast<long double>();
      const long double v = comp.weight * std::exp(-0.5L * d.dot(s.inverse() * d)) /
                            std::sqrt(s.determinant());
      w.push_back(v);
      sum += v;
    }
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(c.component(k).weight, static_cast<double>(w[k] / sum), 1e-10);
      total += c.component(k).weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(Condition, CovarianceDoesNotDependOnCovariate) {
  std::mt19937_64 rng(11);
  const auto model = random_joint(2, 2, 2, rng);
  const auto a = condition(model, Vector::Constant(2, -1.0));
  const auto b = condition(model, Vector::Constant(2, 4.0));
  for (int k = 0; k < 2; ++k)
    EXPECT_LT((a.component(k).covariance - b.component(k).covariance).norm(), 1e-12);
}

TEST(Condition, GeneralClosedFormPerComponent) {
  std::mt19937_64 rng(12);
  const auto model = random_joint(2, 3, 1, rng);
  const Vector x = Vector::Random(2);
  const auto c = condition(model, x);
  const Matrix sxx = model.block_xx(0);
  const Matrix sxix = model.block_xi_x(0);
  const Vector mu = model.uncertainty_mean(0) + sxix * sxx.inverse() * (x - model.covariate_mean(0));
  const Matrix cov = model.block_xi_xi(0) - sxix * sxx.inverse() * sxix.transpose();
  EXPECT_LT((c.component(0).mean - mu).norm(), 1e-10);
  EXPECT_LT((c.component(0).covariance - cov).norm(), 1e-10);
}

TEST(Condition, UnderflowFallsBackToPrior) {
  std::mt19937_64 rng(13);
  const auto model = random_joint(1, 1, 2, rng);
  const auto c = condition(model, Vector::Constant(1, 1e6));
  EXPECT_TRUE(c.used_prior_fallback());
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(c.component(k).weight, model.components()[k].weight, 1e-12);
}

TEST(Condition, TotalExpectation) {
  std::mt19937_64 rng(14);
  const auto model = random_joint(1, 2, 2, rng);
  const auto draws = sample_joint(model, 4000, 21);
  Vector acc = Vector::Zero(2);
  std::vector<Vector> values;
  for (const auto& s : draws) {
    values.push_back(condition(model, s.covariate).mixture_mean());
    acc += values.back();
  }
  acc /= draws.size();
  Vector var = Vector::Zero(2);
  for (const auto& v : values) var += (v - acc).cwiseAbs2();
  var /= draws.size() - 1;
  Vector marginal = Vector::Zero(2);
  for (int k = 0; k < model.k(); ++k)
    marginal += model.components()[k].weight * model.uncertainty_mean(k);
  for (int i = 0; i < 2; ++i)
    EXPECT_LE(std::abs(acc(i) - marginal(i)), 3.0 * std::sqrt(var(i) / draws.size()) + 1e-12);
}

TEST(Sampling, NearDegenerateCovariance) {
  const auto m = ConditionalGmm::from_moments({1.0}, {Vector::Constant(2, 2.0)},
                                              {1e-12 * Matrix::Identity(2, 2)});
  const auto s = sample_conditional(m, 5, 3);
  for (int i = 0; i < 5; ++i) EXPECT_LT((s.row(i).transpose() - Vector::Constant(2, 2.0)).norm(), 1e-4);
}

TEST(Sampling, ComponentFrequencies) {
  const auto m = ConditionalGmm::from_moments({0.3, 0.7}, {Vector::Zero(1), Vector::Ones(1)},
                                              {Matrix::Identity(1, 1), Matrix::Identity(1, 1)});
  const auto s = sample_conditional_labeled(m, 100000, 4);
  double zeros = 0.0;
  for (int l : s.labels) zeros += (l == 0);
  EXPECT_NEAR(zeros / 100000.0, 0.3, 0.01);
}

TEST(Sampling, SameSeedSameBits) {
  std::mt19937_64 rng(15);
  const auto c = condition(random_joint(1, 3, 3, rng), Vector::Zero(1));
  const auto a = sample_conditional(c, 200, 77);
  const auto b = sample_conditional(c, 200, 77);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
  const auto d = sample_conditional(c, 200, 78);
  EXPECT_NE(0, std::memcmp(a.data(), d.data(), sizeof(double) * a.size()));
}

TEST(Json, RoundTrip) {
  std::mt19937_64 rng(16);
  const auto model = random_joint(2, 2, 2, rng);
  const auto back = joint_from_json(to_json(model));
  EXPECT_EQ(to_json(back).dump(), to_json(model).dump());
  const auto c = condition(model, Vector::Ones(2));
  EXPECT_EQ(to_json(conditional_from_json(to_json(c))).dump(), to_json(c).dump());
}

TEST(Json, RejectsIncompleteDocument) {
  EXPECT_THROW(joint_from_json(nlohmann::json::parse("{\"n\": 1}")), Error);
}
