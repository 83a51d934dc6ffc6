#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "core/linalg.hpp"

namespace caus::gmm {

/// One historical observation: side information, the realized uncertainty,
/// and the dispatch period it belongs to (1-based).
struct Sample {
  Vector covariate;
  Vector uncertainty;
  int period = 1;
};

/// Component of the joint mixture over stacked (covariate, uncertainty).
struct GaussianComponent {
  double weight = 1.0;
  Vector mean;
  Matrix covariance;
};

enum class Marginal { Joint, Covariate };

/// K-component Gaussian mixture over (x, xi) with x in R^n and xi in R^m.
/// Immutable; Cholesky factors of each full covariance and of each
/// covariate block are cached at construction.
class JointGmm {
 public:
  JointGmm(int n, int m, std::vector<GaussianComponent> components, double jitter = 1e-8);

  int n() const { return n_; }
  int m() const { return m_; }
  int k() const { return static_cast<int>(components_.size()); }
  const std::vector<GaussianComponent>& components() const { return components_; }

  Vector covariate_mean(int k) const { return components_[k].mean.head(n_); }
  Vector uncertainty_mean(int k) const { return components_[k].mean.tail(m_); }
  Matrix block_xx(int k) const { return components_[k].covariance.topLeftCorner(n_, n_); }
  Matrix block_xi_x(int k) const { return components_[k].covariance.bottomLeftCorner(m_, n_); }
  Matrix block_xi_xi(int k) const { return components_[k].covariance.bottomRightCorner(m_, m_); }

  const Matrix& joint_cholesky(int k) const { return joint_chol_[k]; }
  const Matrix& covariate_cholesky(int k) const { return covariate_chol_[k]; }

  /// Log of the mixture density at `point` (length n+m), or of the covariate
  /// marginal (length n) when `which` is Marginal::Covariate.
  double log_density(const Vector& point, Marginal which = Marginal::Joint) const;
  double component_log_density(int k, const Vector& point, Marginal which) const;

 private:
  int n_;
  int m_;
  std::vector<GaussianComponent> components_;
  std::vector<Matrix> joint_chol_;
  std::vector<Matrix> covariate_chol_;
};

struct EmConfig {
  int max_iterations = 500;
  double tolerance = 1e-7;  // relative log-likelihood improvement
  double jitter = 1e-8;     // relative to the mean diagonal; 0 disables
  std::uint64_t seed = 0;
  int kmeans_iterations = 20;
};

struct FitResult {
  JointGmm model;
  std::vector<double> log_likelihood;  // one entry per EM iteration
  int iterations = 0;
  bool converged = false;
};

FitResult fit_gmm(std::span<const Sample> samples, int k, const EmConfig& config = {});

/// Total data log-likelihood of stacked samples under a joint model.
double log_likelihood(const JointGmm& model, std::span<const Sample> samples);

struct BicPoint {
  int k;
  double log_likelihood;
  double bic;
};

/// Fits every K in [k_min, k_max] and reports the Bayesian information
/// criterion of each; K itself stays a user choice.
std::vector<BicPoint> bic_sweep(std::span<const Sample> samples, int k_min, int k_max,
                                const EmConfig& config = {});

struct ConditionalComponent {
  double weight = 1.0;
  Vector mean;
  Matrix covariance;
  Matrix cholesky;  // lower factor of covariance
};

/// Mixture over the uncertainty alone, either conditioned on an observed
/// covariate or marginalized.
class ConditionalGmm {
 public:
  ConditionalGmm(std::vector<ConditionalComponent> components, Vector covariate,
                 bool prior_fallback = false);

  /// Builds components from (weight, mean, covariance), factorizing each
  /// covariance with jitter as needed.
  static ConditionalGmm from_moments(const std::vector<double>& weights,
                                     const std::vector<Vector>& means,
                                     const std::vector<Matrix>& covariances, Vector covariate = {},
                                     double jitter = 1e-8);

  int k() const { return static_cast<int>(components_.size()); }
  int m() const { return static_cast<int>(components_.front().mean.size()); }
  const std::vector<ConditionalComponent>& components() const { return components_; }
  const ConditionalComponent& component(int k) const { return components_[k]; }
  const Vector& conditioning_covariate() const { return covariate_; }
  // Set when every covariate likelihood underflowed and prior weights were used.
  bool used_prior_fallback() const { return prior_fallback_; }

  Vector mixture_mean() const;
  double log_density(const Vector& point) const;

 private:
  std::vector<ConditionalComponent> components_;
  Vector covariate_;
  bool prior_fallback_;
};

ConditionalGmm condition(const JointGmm& model, const Vector& covariate, double jitter = 1e-8);

/// Mixture over xi alone: weights p^k, means mu_xi^k, covariances Sigma_xixi^k.
ConditionalGmm marginal_uncertainty(const JointGmm& model);

struct LabeledSamples {
  SampleMatrix points;
  std::vector<int> labels;
};

SampleMatrix sample_conditional(const ConditionalGmm& model, int count, std::uint64_t seed);
LabeledSamples sample_conditional_labeled(const ConditionalGmm& model, int count,
                                          std::uint64_t seed);

/// Draws stacked (covariate, uncertainty) samples from a joint model.
std::vector<Sample> sample_joint(const JointGmm& model, int count, std::uint64_t seed,
                                 int period = 1);

nlohmann::json to_json(const JointGmm& model);
JointGmm joint_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConditionalGmm& model);
ConditionalGmm conditional_from_json(const nlohmann::json& doc);

}  // namespace caus::gmm
