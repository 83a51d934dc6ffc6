#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace caus {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// One sample per row.
using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Lower Cholesky factor of `a`, adding jitter * mean(diag(a)) * I with the
/// jitter growing tenfold per retry when the factorization fails. Returns
/// nothing when every attempt fails or jitter is zero and `a` is not PD.
std::optional<Matrix> cholesky_with_jitter(const Matrix& a, double jitter, int max_attempts = 8);

/// Raises the smallest eigenvalue of a symmetric matrix to at least
/// `floor_relative * mean(diag(a))`.
Matrix floor_eigenvalues(const Matrix& a, double floor_relative);

double log_sum_exp(std::span<const double> values);

/// log N(point | mean, L L^T) given the lower Cholesky factor L.
double gaussian_log_density(const Vector& point, const Vector& mean, const Matrix& cholesky_lower);

/// (point - mean)^T (L L^T)^{-1} (point - mean) via one triangular solve.
double squared_mahalanobis(const Vector& point, const Vector& mean, const Matrix& cholesky_lower);

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace caus
