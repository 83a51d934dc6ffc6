#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace caus {

std::optional<Matrix> cholesky_with_jitter(const Matrix& a, double jitter, int max_attempts) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return Matrix(llt.matrixL());
  if (jitter <= 0.0) return std::nullopt;
  const double scale = std::max(a.diagonal().cwiseAbs().mean(), std::numeric_limits<double>::min());
  double eps = jitter * scale;
  const Matrix identity = Matrix::Identity(a.rows(), a.cols());
  for (int attempt = 0; attempt < max_attempts; ++attempt, eps *= 10.0) {
    llt.compute(a + eps * identity);
    if (llt.info() == Eigen::Success) return Matrix(llt.matrixL());
  }
  return std::nullopt;
}

Matrix floor_eigenvalues(const Matrix& a, double floor_relative) {
  const Matrix sym = symmetrize(a);
  if (floor_relative <= 0.0) return sym;
  const double scale = sym.diagonal().cwiseAbs().mean();
  const double floor = floor_relative * (scale > 0.0 ? scale : 1.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues().minCoeff();
  if (smallest >= floor) return sym;
  return sym + (floor - smallest) * Matrix::Identity(a.rows(), a.cols());
}

double log_sum_exp(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

double squared_mahalanobis(const Vector& point, const Vector& mean, const Matrix& cholesky_lower) {
  const Vector z = cholesky_lower.triangularView<Eigen::Lower>().solve(point - mean);
  return z.squaredNorm();
}

double gaussian_log_density(const Vector& point, const Vector& mean, const Matrix& cholesky_lower) {
  const double log_det = 2.0 * cholesky_lower.diagonal().array().log().sum();
  const double d = static_cast<double>(point.size());
  return -0.5 * (d * kLog2Pi + log_det + squared_mahalanobis(point, mean, cholesky_lower));
}

}  // namespace caus
