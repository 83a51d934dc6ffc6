#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "calibration/calibration.hpp"
#include "gmm/gmm.hpp"
#include "lp/linear_program.hpp"

namespace caus::sets {

/// J unit directions in R^m, one per row. The first 2m rows are the signed
/// coordinate axes, which makes the set positively spanning.
struct DirectionSet {
  Matrix directions;

  int m() const { return static_cast<int>(directions.cols()); }
  int j() const { return static_cast<int>(directions.rows()); }
};

/// Default direction count for dimension m: max(8, 2m + 2).
int default_direction_count(int m);

/// +-e_i first, then j - 2m extra unit vectors. In 2D the extras are equally
/// spaced angles offset from the axes (the diagonals when j = 8); for m >= 3
/// they are Halton points mapped to the sphere, starting at an index set by
/// `seed`.
DirectionSet make_directions(int m, int j, std::uint64_t seed = 0);

/// True when every nonzero u has some direction with v^T u > 0 (checked by LP).
bool positively_spans(const Matrix& directions);

/// {xi : D xi <= d} with a strictly interior (or, when degenerate, boundary)
/// center. `cholesky` is set only for subsets built from a Gaussian component.
struct Polytope {
  Matrix d_matrix;
  Vector d_vector;
  Vector center;
  Matrix cholesky;

  int rows() const { return static_cast<int>(d_matrix.rows()); }
  int m() const { return static_cast<int>(d_matrix.cols()); }
  double max_violation(const Vector& point) const;
  bool contains(const Vector& point, double tolerance = 1e-9) const;
  /// Moves `point` toward the center just enough to satisfy every row.
  Vector pull_inside(const Vector& point) const;
  /// LP maximum of direction^T xi over the polytope.
  double support(const Vector& direction) const;
  /// Vertices as rows, from every m-subset of tight rows. Throws
  /// EnumerationTooLarge past `cap` candidate subsets.
  Matrix vertices(long long cap = 200000) const;
};

/// Supporting halfspaces v_j^T L^{-1} (xi - mu) <= sqrt(gamma) of the
/// ellipsoid (xi - mu)^T Sigma^{-1} (xi - mu) <= gamma, Sigma = L L^T.
Polytope build_subset_polytope(const gmm::ConditionalComponent& component, double gamma,
                               const DirectionSet& directions);

enum class SetKind { Caus, Box, Uos };

const char* to_string(SetKind kind);
SetKind parse_set_kind(const std::string& name);

/// Cartesian product over periods of a finite union of polytopes per period.
/// CAUS, box and latent-budget baseline sets all take this form.
class UnionSet {
 public:
  UnionSet(SetKind kind, std::vector<std::vector<Polytope>> periods,
           std::vector<double> gamma_per_period = {});

  SetKind kind() const { return kind_; }
  int periods() const { return static_cast<int>(periods_.size()); }
  int subsets(int t) const { return static_cast<int>(periods_[t].size()); }
  int max_subsets() const;
  int m() const { return periods_.front().front().m(); }
  const Polytope& subset(int t, int k) const { return periods_[t][k]; }
  const std::vector<std::vector<Polytope>>& all_periods() const { return periods_; }
  const std::vector<double>& gamma_per_period() const { return gammas_; }
  /// Per-period, per-coordinate bound on |xi_i| over every subset.
  const std::vector<Vector>& big_m() const { return big_m_; }
  bool has_big_m() const { return !big_m_.empty(); }
  void clear_big_m() { big_m_.clear(); }

  /// Lowest subset index containing `point` at period t, or -1.
  int containing_subset(int t, const Vector& point, double tolerance = 1e-9) const;

 private:
  SetKind kind_;
  std::vector<std::vector<Polytope>> periods_;
  std::vector<double> gammas_;
  std::vector<Vector> big_m_;
};

using CausSet = UnionSet;

/// Per-coordinate Big-M over a list of polytopes: 1.1 times the largest LP
/// bound on |xi_i|, plus 1e-6.
Vector compute_big_m(std::span<const Polytope> polytopes);

CausSet build_caus(std::span<const gmm::ConditionalGmm> models,
                   std::span<const calibration::CalibratedRadius> radii,
                   const DirectionSet& directions);

/// True iff every period's row of `trajectory` (T x m) lies in some subset.
bool membership(const UnionSet& set, const Matrix& trajectory, double tolerance = 1e-9);

/// Mixed-binary description of the set: continuous xi_t, binaries
/// alpha_{k,t} with one active per period, auxiliaries w_{k,t} that equal
/// xi_t for the active subset and vanish otherwise.
struct MilpEncoding {
  lp::LinearProgram block;
  int periods = 0;
  int subsets = 0;  // per period (max over periods; padded periods fix extras to 0)
  int m = 0;
  int xi_offset = 0;
  int alpha_offset = 0;
  int w_offset = 0;
  std::vector<int> sos_rows;

  int xi_col(int t, int i) const { return xi_offset + t * m + i; }
  int alpha_col(int k, int t) const { return alpha_offset + t * subsets + k; }
  int w_col(int k, int t, int i) const { return w_offset + (t * subsets + k) * m + i; }
  int binary_count() const { return periods * subsets; }
  int auxiliary_count() const { return periods * subsets * m; }
};

MilpEncoding encode_milp(const UnionSet& set);

struct WorstCase {
  double value = 0.0;
  Matrix trajectory;         // T x m
  std::vector<int> subsets;  // chosen k per period
};

/// Mixed-radix counter over subset combinations, period 0 most significant,
/// so iteration order is lexicographic.
bool next_combination(std::vector<int>& combo, const UnionSet& set);
long long combination_count(const UnionSet& set);

/// Maximizes sum_t objective.row(t) * xi_t by one LP per subset combination.
/// Ties keep the lexicographically smallest combination.
WorstCase worst_case_enumerate(const UnionSet& set, const Matrix& objective,
                               long long cap = 1'000'000);

/// Same maximization through the mixed-binary encoding.
WorstCase worst_case_milp(const UnionSet& set, const Matrix& objective);

/// Reads the subset choice from an encoding solution, preferring the lowest
/// subset that contains the decoded point, and pulls the point into it.
WorstCase decode(const UnionSet& set, const MilpEncoding& encoding,
                 std::span<const double> solution, int column_offset = 0);

struct BoxSet {
  std::vector<Vector> lower;
  std::vector<Vector> upper;
};

/// Per-period, per-coordinate min/max of the given samples.
BoxSet build_box(std::span<const SampleMatrix> per_period_samples);
BoxSet build_box(std::vector<Vector> lower, std::vector<Vector> upper);
UnionSet to_union(const BoxSet& box);

/// Latent-budget subsets mu_k + Lambda Sigma_k^{1/2} eta with
/// ||eta||_inf <= 1 and ||eta||_1 <= Phi_k.
struct UosSubset {
  Vector center;
  Matrix factor;  // Lambda * Sigma^{1/2}
  double phi = 1.0;
};

struct UosBaselineSet {
  double lambda = 1.0;
  std::vector<std::vector<UosSubset>> periods;
};

/// sqrt of the chi-square(m) 0.95 quantile.
double default_uos_lambda(int m);

/// Same subsets at every period, built from a mixture over xi. `phi` holds
/// one budget per component, or a single budget used for all.
UosBaselineSet build_uos_baseline(const gmm::ConditionalGmm& marginal, int periods,
                                  double lambda, std::vector<double> phi);
UnionSet to_union(const UosBaselineSet& set);

nlohmann::json to_json(const UnionSet& set);
UnionSet union_set_from_json(const nlohmann::json& doc);

}  // namespace caus::sets
