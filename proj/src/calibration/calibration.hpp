#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmm/gmm.hpp"

namespace caus::calibration {

/// Minimum over components of the squared Mahalanobis distance to each
/// component mean, using the cached Cholesky factors.
double union_score(const gmm::ConditionalGmm& model, const Vector& point);

/// Same as union_score, also reporting the minimizing component (lowest
/// index on ties).
double union_score(const gmm::ConditionalGmm& model, const Vector& point, int& argmin);

/// Scores of every row of `points`.
std::vector<double> union_scores(const gmm::ConditionalGmm& model, const SampleMatrix& points);

/// ceil((1 - epsilon) * (n_samples + 1)). A product that lands a rounding
/// error above an integer counts as that integer.
int order_statistic_rank(double epsilon, int n_samples);

struct CalibratedRadius {
  double gamma = 0.0;  // squared Mahalanobis units
  double epsilon = 0.05;
  int kappa = 1;
  int n_samples = 1;
  std::uint64_t seed = 0;
  int period = 1;
};

struct ScoreSet {
  std::vector<double> scores;  // ascending
  int period = 1;
};

struct Calibration {
  CalibratedRadius radius;
  ScoreSet scores;
  SampleMatrix samples;  // the calibration draws, for bounding-box baselines
};

/// Draws n_samples conditional samples, scores them and returns the
/// kappa-th smallest score. Throws RankUnattainable when kappa > n_samples.
Calibration calibrate_full(const gmm::ConditionalGmm& model, int n_samples, double epsilon,
                           std::uint64_t seed, int period = 1);
CalibratedRadius calibrate(const gmm::ConditionalGmm& model, int n_samples, double epsilon,
                           std::uint64_t seed, int period = 1);

/// Radius from an already sorted score list.
CalibratedRadius radius_from_scores(std::span<const double> sorted_scores, double epsilon);

/// Fraction of n_test fresh draws whose union score is at most gamma.
double empirical_coverage(const gmm::ConditionalGmm& model, const CalibratedRadius& radius,
                          int n_test, std::uint64_t seed);

/// Fraction of the given points (e.g. held-out history) within the radius.
/// Diagnostic only: no coverage bound holds under misspecification.
double data_coverage(const gmm::ConditionalGmm& model, double gamma, const SampleMatrix& points);

/// Replaces every radius by the largest one across periods.
std::vector<CalibratedRadius> share_max_radius(std::vector<CalibratedRadius> radii);

nlohmann::json to_json(const CalibratedRadius& radius);
CalibratedRadius radius_from_json(const nlohmann::json& doc);

/// (score, count) histogram as CSV with `bins` equal-width bins.
std::string histogram_csv(std::span<const double> scores, int bins = 50);

}  // namespace caus::calibration
