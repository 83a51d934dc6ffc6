#include "gmm/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>

#include "core/error.hpp"

namespace caus::gmm {

namespace {

constexpr double kWeightTolerance = 1e-9;

void check_weights(const std::vector<double>& weights) {
  require(!weights.empty(), ErrorCode::InvalidArgument, "mixture needs at least one component");
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0, ErrorCode::InvalidArgument,
            "component weights must be positive");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= kWeightTolerance, ErrorCode::InvalidArgument,
          "component weights must sum to 1");
}

void check_symmetric(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorCode::InvalidArgument,
          "covariance must be symmetric");
}

// Factorizes `cov`; when jitter was needed, `cov` is replaced by the
// regularized matrix so that parameters and cached factors agree.
std::optional<Matrix> factor_or_regularize(Matrix& cov, double jitter) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success) return Matrix(llt.matrixL());
  auto l = cholesky_with_jitter(cov, jitter);
  if (l) cov = *l * l->transpose();
  return l;
}

// Stacked data matrix, one observation per row.
Matrix stack(std::span<const Sample> samples, int n, int m) {
  Matrix z(static_cast<Eigen::Index>(samples.size()), n + m);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    require(s.covariate.size() == n && s.uncertainty.size() == m, ErrorCode::DimensionMismatch,
            "samples have inconsistent dimensions");
    require(s.covariate.allFinite() && s.uncertainty.allFinite(), ErrorCode::NonFiniteInput,
            "sample contains a non-finite value");
    z.row(static_cast<Eigen::Index>(i)).head(n) = s.covariate.transpose();
    z.row(static_cast<Eigen::Index>(i)).tail(m) = s.uncertainty.transpose();
  }
  return z;
}

// k-means++ seeding followed by a few Lloyd iterations, in whitened space.
std::vector<int> kmeans_labels(const Matrix& z, int k, const EmConfig& config) {
  const Eigen::Index count = z.rows();
  const Vector center = z.colwise().mean();
  const Matrix centered = z.rowwise() - center.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(count);
  Matrix white;
  if (auto chol = cholesky_with_jitter(cov, 1e-8)) {
    white = chol->triangularView<Eigen::Lower>().solve(centered.transpose()).transpose();
  } else {
    Vector scale = cov.diagonal().cwiseSqrt();
    for (Eigen::Index j = 0; j < scale.size(); ++j) {
      if (scale[j] <= 0.0) scale[j] = 1.0;
    }
    white = centered.array().rowwise() / scale.transpose().array();
  }

  std::mt19937_64 rng(config.seed);
  std::vector<Eigen::Index> chosen;
  std::uniform_int_distribution<Eigen::Index> pick(0, count - 1);
  chosen.push_back(pick(rng));
  Vector nearest = (white.rowwise() - white.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    const double total = nearest.sum();
    Eigen::Index next = 0;
    if (total <= 0.0) {
      next = pick(rng);
    } else {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (next = 0; next < count - 1; ++next) {
        target -= nearest[next];
        if (target <= 0.0) break;
      }
    }
    chosen.push_back(next);
    nearest = nearest.cwiseMin((white.rowwise() - white.row(next)).rowwise().squaredNorm());
  }

  Matrix centers(k, white.cols());
  for (int c = 0; c < k; ++c) centers.row(c) = white.row(chosen[c]);
  std::vector<int> labels(count, 0);
  for (int iter = 0; iter < std::max(1, config.kmeans_iterations); ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < count; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - white.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[i] != static_cast<int>(best)) {
        labels[i] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    Matrix sums = Matrix::Zero(k, white.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < count; ++i) {
      sums.row(labels[i]) += white.row(i);
      ++counts[labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }
  return labels;
}

struct Params {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
};

Params m_step(const Matrix& z, const Matrix& resp, double jitter) {
  const int k = static_cast<int>(resp.cols());
  const double total = static_cast<double>(z.rows());
  Params p;
  for (int c = 0; c < k; ++c) {
    const double nk = std::max(resp.col(c).sum(), 10.0 * std::numeric_limits<double>::min());
    Vector mean = (z.transpose() * resp.col(c)) / nk;
    const Matrix centered = z.rowwise() - mean.transpose();
    Matrix cov = centered.transpose() * resp.col(c).asDiagonal() * centered / nk;
    cov = floor_eigenvalues(cov, jitter);
    p.weights.push_back(nk / total);
    p.means.push_back(std::move(mean));
    p.covariances.push_back(std::move(cov));
  }
  const double wsum = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
  for (double& w : p.weights) w /= wsum;
  return p;
}

// Fills log(w_k N(z_i | theta_k)) per row and returns the total log-likelihood.
double e_step(const Matrix& z, const Params& p, Matrix& resp) {
  const int k = static_cast<int>(p.weights.size());
  const Eigen::Index count = z.rows();
  resp.resize(count, k);
  for (int c = 0; c < k; ++c) {
    Eigen::LLT<Matrix> llt(p.covariances[c]);
    if (llt.info() != Eigen::Success) {
      fail(ErrorCode::DegenerateData, "component covariance is singular; enable jitter");
    }
    const Matrix l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const Matrix diff = (z.rowwise() - p.means[c].transpose()).transpose();
    const Vector maha = l.triangularView<Eigen::Lower>().solve(diff).colwise().squaredNorm();
    const double base = std::log(p.weights[c]) - 0.5 * (z.cols() * kLog2Pi + log_det);
    resp.col(c) = (base - 0.5 * maha.array()).matrix();
  }
  double total = 0.0;
  std::vector<double> row(k);
  for (Eigen::Index i = 0; i < count; ++i) {
    for (int c = 0; c < k; ++c) row[c] = resp(i, c);
    const double lse = log_sum_exp(row);
    total += lse;
    resp.row(i) = (resp.row(i).array() - lse).exp().matrix();
  }
  return total;
}

}  // namespace

JointGmm::JointGmm(int n, int m, std::vector<GaussianComponent> components, double jitter)
    : n_(n), m_(m), components_(std::move(components)) {
  require(n >= 1 && m >= 1, ErrorCode::InvalidArgument, "dimensions n and m must be positive");
  std::vector<double> weights;
  for (const auto& c : components_) weights.push_back(c.weight);
  check_weights(weights);
  for (auto& c : components_) {
    require(c.mean.size() == n + m && c.covariance.rows() == n + m &&
                c.covariance.cols() == n + m,
            ErrorCode::DimensionMismatch, "component has the wrong dimension");
    require(c.mean.allFinite() && c.covariance.allFinite(), ErrorCode::NonFiniteInput,
            "component parameters must be finite");
    check_symmetric(c.covariance);
    auto full = factor_or_regularize(c.covariance, jitter);
    require(full.has_value(), ErrorCode::DegenerateData, "component covariance is not PD");
    auto xx = cholesky_with_jitter(c.covariance.topLeftCorner(n, n), jitter);
    require(xx.has_value(), ErrorCode::SingularCovariateBlock, "covariate block is singular");
    joint_chol_.push_back(std::move(*full));
    covariate_chol_.push_back(std::move(*xx));
  }
}

double JointGmm::component_log_density(int k, const Vector& point, Marginal which) const {
  const auto& c = components_.at(k);
  if (which == Marginal::Joint) {
    require(point.size() == n_ + m_, ErrorCode::DimensionMismatch,
            "point length must equal n + m");
    return gaussian_log_density(point, c.mean, joint_chol_[k]);
  }
  require(point.size() == n_, ErrorCode::DimensionMismatch, "covariate length must equal n");
  return gaussian_log_density(point, c.mean.head(n_), covariate_chol_[k]);
}

double JointGmm::log_density(const Vector& point, Marginal which) const {
  std::vector<double> terms(components_.size());
  for (int k = 0; k < this->k(); ++k) {
    terms[k] = std::log(components_[k].weight) + component_log_density(k, point, which);
  }
  return log_sum_exp(terms);
}

FitResult fit_gmm(std::span<const Sample> samples, int k, const EmConfig& config) {
  require(k >= 1, ErrorCode::InvalidArgument, "component count must be at least 1");
  require(!samples.empty(), ErrorCode::TooFewSamples, "no samples");
  const int n = static_cast<int>(samples.front().covariate.size());
  const int m = static_cast<int>(samples.front().uncertainty.size());
  require(n >= 1 && m >= 1, ErrorCode::InvalidArgument, "dimensions n and m must be positive");
  const auto needed = static_cast<std::size_t>(k) * static_cast<std::size_t>(n + m + 1);
  require(samples.size() >= needed, ErrorCode::TooFewSamples,
          "need at least " + std::to_string(needed) + " samples for " + std::to_string(k) +
              " components");
  const Matrix z = stack(samples, n, m);

  if (config.jitter <= 0.0) {
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      if (z.col(j).maxCoeff() == z.col(j).minCoeff()) {
        fail(ErrorCode::DegenerateData,
             "coordinate " + std::to_string(j) + " is constant and jitter is disabled");
      }
    }
  }

  const auto labels = kmeans_labels(z, k, config);
  Matrix resp = Matrix::Zero(z.rows(), k);
  for (Eigen::Index i = 0; i < z.rows(); ++i) resp(i, labels[i]) = 1.0;
  Params params = m_step(z, resp, config.jitter);

  FitResult out{JointGmm(n, m, {{1.0, Vector::Zero(n + m), Matrix::Identity(n + m, n + m)}}),
                {}, 0, false};
  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const double ll = e_step(z, params, resp);
    out.log_likelihood.push_back(ll);
    out.iterations = iter + 1;
    if (std::isfinite(previous) &&
        (ll - previous) <= config.tolerance * std::max(1.0, std::abs(previous))) {
      out.converged = true;
      break;
    }
    previous = ll;
    params = m_step(z, resp, config.jitter);
  }

  std::vector<GaussianComponent> components;
  for (int c = 0; c < k; ++c) {
    components.push_back({params.weights[c], params.means[c], params.covariances[c]});
  }
  out.model = JointGmm(n, m, std::move(components), config.jitter);
  return out;
}

double log_likelihood(const JointGmm& model, std::span<const Sample> samples) {
  double total = 0.0;
  Vector point(model.n() + model.m());
  for (const auto& s : samples) {
    require(s.covariate.size() == model.n() && s.uncertainty.size() == model.m(),
            ErrorCode::DimensionMismatch, "sample does not match model dimensions");
    point << s.covariate, s.uncertainty;
    total += model.log_density(point);
  }
  return total;
}

std::vector<BicPoint> bic_sweep(std::span<const Sample> samples, int k_min, int k_max,
                                const EmConfig& config) {
  require(k_min >= 1 && k_max >= k_min, ErrorCode::InvalidArgument, "invalid K range");
  std::vector<BicPoint> out;
  for (int k = k_min; k <= k_max; ++k) {
    const auto fit = fit_gmm(samples, k, config);
    const int d = fit.model.n() + fit.model.m();
    const double params = (k - 1) + k * d + k * d * (d + 1) / 2.0;
    const double ll = fit.log_likelihood.back();
    out.push_back({k, ll, params * std::log(static_cast<double>(samples.size())) - 2.0 * ll});
  }
  return out;
}

ConditionalGmm::ConditionalGmm(std::vector<ConditionalComponent> components, Vector covariate,
                               bool prior_fallback)
    : components_(std::move(components)),
      covariate_(std::move(covariate)),
      prior_fallback_(prior_fallback) {
  std::vector<double> weights;
  for (const auto& c : components_) weights.push_back(c.weight);
  check_weights(weights);
  const auto m = components_.front().mean.size();
  for (const auto& c : components_) {
    require(c.mean.size() == m && c.covariance.rows() == m && c.covariance.cols() == m &&
                c.cholesky.rows() == m && c.cholesky.cols() == m,
            ErrorCode::DimensionMismatch, "conditional component has the wrong dimension");
    require(c.cholesky.diagonal().minCoeff() > 0.0, ErrorCode::SingularCholesky,
            "conditional covariance factor is singular");
  }
}

ConditionalGmm ConditionalGmm::from_moments(const std::vector<double>& weights,
                                            const std::vector<Vector>& means,
                                            const std::vector<Matrix>& covariances,
                                            Vector covariate, double jitter) {
  require(weights.size() == means.size() && means.size() == covariances.size(),
          ErrorCode::DimensionMismatch, "weights, means and covariances differ in count");
  std::vector<ConditionalComponent> components;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(covariances[k].allFinite() && means[k].allFinite(), ErrorCode::NonFiniteInput,
            "component parameters must be finite");
    check_symmetric(covariances[k]);
    Matrix cov = covariances[k];
    auto l = factor_or_regularize(cov, jitter);
    require(l.has_value(), ErrorCode::SingularCholesky, "covariance is not positive definite");
    components.push_back({weights[k], means[k], std::move(cov), std::move(*l)});
  }
  return ConditionalGmm(std::move(components), std::move(covariate));
}

Vector ConditionalGmm::mixture_mean() const {
  Vector mean = Vector::Zero(m());
  for (const auto& c : components_) mean += c.weight * c.mean;
  return mean;
}

double ConditionalGmm::log_density(const Vector& point) const {
  require(point.size() == m(), ErrorCode::DimensionMismatch, "point length must equal m");
  std::vector<double> terms;
  for (const auto& c : components_) {
    terms.push_back(std::log(c.weight) + gaussian_log_density(point, c.mean, c.cholesky));
  }
  return log_sum_exp(terms);
}

ConditionalGmm condition(const JointGmm& model, const Vector& covariate, double jitter) {
  require(covariate.size() == model.n(), ErrorCode::DimensionMismatch,
          "covariate length must equal n");
  require(covariate.allFinite(), ErrorCode::NonFiniteInput, "covariate must be finite");
  const int k = model.k();

  std::vector<double> log_terms(k);
  for (int c = 0; c < k; ++c) {
    log_terms[c] = std::log(model.components()[c].weight) +
                   model.component_log_density(c, covariate, Marginal::Covariate);
  }
  const double lse = log_sum_exp(log_terms);
  // every likelihood below the smallest subnormal: the direct ratio is 0/0
  const double floor_log = std::log(std::numeric_limits<double>::denorm_min());
  const bool all_underflow =
      *std::max_element(log_terms.begin(), log_terms.end()) < floor_log;
  bool fallback = false;
  std::vector<double> weights(k);
  if (std::isfinite(lse) && !all_underflow) {
    for (int c = 0; c < k; ++c) weights[c] = std::exp(log_terms[c] - lse);
  } else {
    fallback = true;
    std::cerr << "warning: covariate likelihood underflowed for every component; "
                 "using prior weights\n";
    for (int c = 0; c < k; ++c) weights[c] = model.components()[c].weight;
  }
  // Renormalize against rounding; components with zero weight get a floor so
  // that they stay valid mixture members.
  for (double& w : weights) w = std::max(w, std::numeric_limits<double>::min());
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= wsum;

  std::vector<ConditionalComponent> components;
  for (int c = 0; c < k; ++c) {
    const Matrix& lxx = model.covariate_cholesky(c);
    const double cond = std::pow(lxx.diagonal().maxCoeff() / lxx.diagonal().minCoeff(), 2.0);
    Matrix factor = lxx;
    if (!(cond < 1e14)) {
      auto regularized = cholesky_with_jitter(
          model.block_xx(c) + jitter * model.block_xx(c).diagonal().mean() *
                                  Matrix::Identity(model.n(), model.n()),
          jitter);
      if (!regularized) {
        fail(ErrorCode::SingularCovariateBlock,
             "covariate block of component " + std::to_string(c) + " is ill-conditioned");
      }
      factor = std::move(*regularized);
    }
    const Matrix cross = model.block_xi_x(c);  // Sigma_{xi x}, m x n
    // Sigma_xx^{-1} Sigma_{x xi} via two triangular solves.
    const Matrix half = factor.triangularView<Eigen::Lower>().solve(cross.transpose());
    const Matrix gain_t = factor.transpose().triangularView<Eigen::Upper>().solve(half);
    Vector mean = model.uncertainty_mean(c) + gain_t.transpose() * (covariate - model.covariate_mean(c));
    Matrix cov = symmetrize(model.block_xi_xi(c) - cross * gain_t);
    auto l = cholesky_with_jitter(cov, jitter);
    if (!l) {
      fail(ErrorCode::SingularCholesky,
           "conditional covariance of component " + std::to_string(c) + " is not PD");
    }
    components.push_back({weights[c], std::move(mean), std::move(cov), std::move(*l)});
  }
  return ConditionalGmm(std::move(components), covariate, fallback);
}

ConditionalGmm marginal_uncertainty(const JointGmm& model) {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (int c = 0; c < model.k(); ++c) {
    weights.push_back(model.components()[c].weight);
    means.push_back(model.uncertainty_mean(c));
    covs.push_back(model.block_xi_xi(c));
  }
  return ConditionalGmm::from_moments(weights, means, covs);
}

LabeledSamples sample_conditional_labeled(const ConditionalGmm& model, int count,
                                          std::uint64_t seed) {
  require(count >= 1, ErrorCode::InvalidArgument, "sample count must be at least 1");
  const int m = model.m();
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& c : model.components()) cumulative.push_back(acc += c.weight);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, acc);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledSamples out{SampleMatrix(count, m), std::vector<int>(count)};
  Vector z(m);
  for (int i = 0; i < count; ++i) {
    const double u = uniform(rng);
    int k = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                             cumulative.begin());
    k = std::min(k, model.k() - 1);
    for (int j = 0; j < m; ++j) z[j] = normal(rng);
    const auto& c = model.component(k);
    out.points.row(i) = (c.mean + c.cholesky.triangularView<Eigen::Lower>() * z).transpose();
    out.labels[i] = k;
  }
  return out;
}

SampleMatrix sample_conditional(const ConditionalGmm& model, int count, std::uint64_t seed) {
  return sample_conditional_labeled(model, count, seed).points;
}

std::vector<Sample> sample_joint(const JointGmm& model, int count, std::uint64_t seed,
                                 int period) {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  for (const auto& c : model.components()) {
    weights.push_back(c.weight);
    means.push_back(c.mean);
    covs.push_back(c.covariance);
  }
  const auto stacked = sample_conditional(ConditionalGmm::from_moments(weights, means, covs),
                                          count, seed);
  std::vector<Sample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const Vector row = stacked.row(i).transpose();
    out.push_back({row.head(model.n()), row.tail(model.m()), period});
  }
  return out;
}

namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json matrix_json(const Matrix& a) {
  std::vector<double> flat;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
  }
  return flat;
}

Vector vector_from(const nlohmann::json& j, Eigen::Index size, const char* what) {
  const auto values = j.get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == size, ErrorCode::DimensionMismatch,
          std::string(what) + " has the wrong length");
  return Eigen::Map<const Vector>(values.data(), size);
}

Matrix matrix_from(const nlohmann::json& j, Eigen::Index size, const char* what) {
  const auto values = j.get<std::vector<double>>();
  require(static_cast<Eigen::Index>(values.size()) == size * size, ErrorCode::DimensionMismatch,
          std::string(what) + " has the wrong length");
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), size, size);
}

}  // namespace

nlohmann::json to_json(const JointGmm& model) {
  nlohmann::json doc;
  doc["n"] = model.n();
  doc["m"] = model.m();
  doc["components"] = nlohmann::json::array();
  for (const auto& c : model.components()) {
    doc["components"].push_back(
        {{"weight", c.weight}, {"mean", vector_json(c.mean)}, {"covariance", matrix_json(c.covariance)}});
  }
  return doc;
}

JointGmm joint_from_json(const nlohmann::json& doc) {
  try {
    const int n = doc.at("n").get<int>();
    const int m = doc.at("m").get<int>();
    std::vector<GaussianComponent> components;
    for (const auto& c : doc.at("components")) {
      components.push_back({c.at("weight").get<double>(), vector_from(c.at("mean"), n + m, "mean"),
                            matrix_from(c.at("covariance"), n + m, "covariance")});
    }
    return JointGmm(n, m, std::move(components));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("model JSON: ") + e.what());
  }
}

nlohmann::json to_json(const ConditionalGmm& model) {
  nlohmann::json doc;
  doc["m"] = model.m();
  doc["covariate"] = vector_json(model.conditioning_covariate());
  doc["prior_fallback"] = model.used_prior_fallback();
  doc["components"] = nlohmann::json::array();
  for (const auto& c : model.components()) {
    doc["components"].push_back(
        {{"weight", c.weight}, {"mean", vector_json(c.mean)}, {"covariance", matrix_json(c.covariance)}});
  }
  return doc;
}

ConditionalGmm conditional_from_json(const nlohmann::json& doc) {
  try {
    const int m = doc.at("m").get<int>();
    std::vector<double> weights;
    std::vector<Vector> means;
    std::vector<Matrix> covs;
    for (const auto& c : doc.at("components")) {
      weights.push_back(c.at("weight").get<double>());
      means.push_back(vector_from(c.at("mean"), m, "mean"));
      covs.push_back(matrix_from(c.at("covariance"), m, "covariance"));
    }
    Vector covariate;
    if (doc.contains("covariate")) {
      const auto x = doc.at("covariate").get<std::vector<double>>();
      covariate = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    }
    return ConditionalGmm::from_moments(weights, means, covs, covariate);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("conditional model JSON: ") + e.what());
  }
}

}  // namespace caus::gmm
