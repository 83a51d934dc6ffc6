#include "calibration/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "core/error.hpp"

namespace caus::calibration {

double union_score(const gmm::ConditionalGmm& model, const Vector& point, int& argmin) {
  require(point.size() == model.m(), ErrorCode::DimensionMismatch,
          "point length must equal the uncertainty dimension");
  double best = std::numeric_limits<double>::infinity();
  argmin = 0;
  for (int k = 0; k < model.k(); ++k) {
    const auto& c = model.component(k);
    const double score = squared_mahalanobis(point, c.mean, c.cholesky);
    if (score < best) {
      best = score;
      argmin = k;
    }
  }
  return best;
}

double union_score(const gmm::ConditionalGmm& model, const Vector& point) {
  int ignored = 0;
  return union_score(model, point, ignored);
}

std::vector<double> union_scores(const gmm::ConditionalGmm& model, const SampleMatrix& points) {
  require(points.cols() == model.m(), ErrorCode::DimensionMismatch,
          "points must have one column per uncertainty coordinate");
  const Eigen::Index count = points.rows();
  Vector best = Vector::Constant(count, std::numeric_limits<double>::infinity());
  for (const auto& c : model.components()) {
    const Matrix diff = (points.rowwise() - c.mean.transpose()).transpose();
    const Vector scores =
        c.cholesky.triangularView<Eigen::Lower>().solve(diff).colwise().squaredNorm();
    best = best.cwiseMin(scores);
  }
  return {best.data(), best.data() + count};
}

int order_statistic_rank(double epsilon, int n_samples) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::InvalidArgument,
          "epsilon must lie in (0, 1)");
  require(n_samples >= 1, ErrorCode::InvalidArgument, "n_samples must be at least 1");
  const double target = (1.0 - epsilon) * (static_cast<double>(n_samples) + 1.0);
  auto kappa = static_cast<long long>(std::ceil(target));
  // Undo a ceil that only happened because of rounding in (1 - epsilon).
  if (static_cast<double>(kappa - 1) >= target - 1e-9 * std::max(1.0, target)) --kappa;
  return static_cast<int>(std::max(1LL, kappa));
}

CalibratedRadius radius_from_scores(std::span<const double> sorted_scores, double epsilon) {
  const int n = static_cast<int>(sorted_scores.size());
  const int kappa = order_statistic_rank(epsilon, n);
  if (kappa > n) {
    fail(ErrorCode::RankUnattainable,
         "rank " + std::to_string(kappa) + " exceeds the " + std::to_string(n) +
             " calibration samples; increase n_samples or epsilon");
  }
  CalibratedRadius r;
  r.gamma = sorted_scores[kappa - 1];
  r.epsilon = epsilon;
  r.kappa = kappa;
  r.n_samples = n;
  return r;
}

Calibration calibrate_full(const gmm::ConditionalGmm& model, int n_samples, double epsilon,
                           std::uint64_t seed, int period) {
  const int kappa = order_statistic_rank(epsilon, n_samples);
  if (kappa > n_samples) {
    fail(ErrorCode::RankUnattainable,
         "rank " + std::to_string(kappa) + " exceeds the " + std::to_string(n_samples) +
             " calibration samples; increase n_samples or epsilon");
  }
  Calibration out;
  out.samples = gmm::sample_conditional(model, n_samples, seed);
  out.scores.scores = union_scores(model, out.samples);
  out.scores.period = period;
  std::stable_sort(out.scores.scores.begin(), out.scores.scores.end());
  out.radius = radius_from_scores(out.scores.scores, epsilon);
  out.radius.seed = seed;
  out.radius.period = period;
  return out;
}

CalibratedRadius calibrate(const gmm::ConditionalGmm& model, int n_samples, double epsilon,
                           std::uint64_t seed, int period) {
  return calibrate_full(model, n_samples, epsilon, seed, period).radius;
}

double data_coverage(const gmm::ConditionalGmm& model, double gamma, const SampleMatrix& points) {
  if (points.rows() == 0) return 0.0;
  const auto scores = union_scores(model, points);
  const auto covered = std::count_if(scores.begin(), scores.end(),
                                     [gamma](double s) { return s <= gamma; });
  return static_cast<double>(covered) / static_cast<double>(scores.size());
}

double empirical_coverage(const gmm::ConditionalGmm& model, const CalibratedRadius& radius,
                          int n_test, std::uint64_t seed) {
  require(n_test >= 1, ErrorCode::InvalidArgument, "n_test must be at least 1");
  return data_coverage(model, radius.gamma, gmm::sample_conditional(model, n_test, seed));
}

std::vector<CalibratedRadius> share_max_radius(std::vector<CalibratedRadius> radii) {
  double top = 0.0;
  for (const auto& r : radii) top = std::max(top, r.gamma);
  for (auto& r : radii) r.gamma = top;
  return radii;
}

nlohmann::json to_json(const CalibratedRadius& radius) {
  return {{"period", radius.period}, {"epsilon", radius.epsilon},
          {"n_samples", radius.n_samples}, {"kappa", radius.kappa},
          {"gamma", radius.gamma}, {"seed", radius.seed}};
}

CalibratedRadius radius_from_json(const nlohmann::json& doc) {
  try {
    CalibratedRadius r;
    r.period = doc.at("period").get<int>();
    r.epsilon = doc.at("epsilon").get<double>();
    r.n_samples = doc.at("n_samples").get<int>();
    r.kappa = doc.at("kappa").get<int>();
    r.gamma = doc.at("gamma").get<double>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    require(r.gamma >= 0.0, ErrorCode::InvalidArgument, "gamma must be nonnegative");
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("radius JSON: ") + e.what());
  }
}

std::string histogram_csv(std::span<const double> scores, int bins) {
  require(bins >= 1, ErrorCode::InvalidArgument, "bins must be positive");
  std::ostringstream out;
  out << "score,count\n";
  if (scores.empty()) return out.str();
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / bins;
  std::vector<long> counts(bins, 0);
  for (double s : scores) {
    int b = width > 0.0 ? static_cast<int>((s - lo) / width) : 0;
    ++counts[std::clamp(b, 0, bins - 1)];
  }
  char buf[64];
  for (int b = 0; b < bins; ++b) {
    std::snprintf(buf, sizeof buf, "%.17g,%ld\n", lo + (b + 0.5) * width, counts[b]);
    out << buf;
  }
  return out.str();
}

}  // namespace caus::calibration
