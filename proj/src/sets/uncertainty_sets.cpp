#include "sets/uncertainty_sets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "core/error.hpp"

namespace caus::sets {
namespace {

double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

std::vector<int> first_primes(int count) {
  std::vector<int> primes;
  for (int c = 2; static_cast<int>(primes.size()) < count; ++c) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

lp::LinearProgram polytope_lp(const Polytope& p) {
  lp::LinearProgram prog;
  for (int i = 0; i < p.m(); ++i) prog.add_variable(-lp::kInf, lp::kInf, 0.0);
  for (int r = 0; r < p.rows(); ++r) {
    const int row = prog.add_row(lp::RowSense::LessEqual, p.d_vector(r));
    for (int i = 0; i < p.m(); ++i) prog.add_coefficient(row, i, p.d_matrix(r, i));
  }
  return prog;
}

void check_polytope(const Polytope& p) {
  require(p.d_matrix.rows() == p.d_vector.size() && p.center.size() == p.d_matrix.cols(),
          ErrorCode::DimensionMismatch, "polytope D, d and center sizes disagree");
  require(p.d_matrix.allFinite() && p.d_vector.allFinite() && p.center.allFinite(),
          ErrorCode::NonFiniteInput, "polytope has non-finite entries");
}

Polytope from_affine_image(const Matrix& h, const Vector& rhs, const Vector& center,
                           const Matrix& factor) {
  // {mu + A eta : H eta <= h} = {xi : H A^{-1} xi <= h + H A^{-1} mu}
  Eigen::FullPivLU<Matrix> lu(factor);
  require(lu.isInvertible(), ErrorCode::SingularCholesky, "baseline factor is singular");
  Polytope p;
  p.d_matrix = h * lu.inverse();
  p.d_vector = rhs + p.d_matrix * center;
  p.center = center;
  return p;
}

Matrix rows_to_matrix(const nlohmann::json& values, int rows, int cols) {
  require(static_cast<int>(values.size()) == rows * cols, ErrorCode::DimensionMismatch,
          "matrix entry count does not match its shape");
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = values[r * cols + c].get<double>();
  return out;
}

Vector to_vector(const nlohmann::json& values) {
  Vector out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(i) = values[i].get<double>();
  return out;
}

std::vector<double> flatten(const Matrix& a) {
  std::vector<double> out;
  out.reserve(a.size());
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) out.push_back(a(r, c));
  return out;
}

}  // namespace

int default_direction_count(int m) { return std::max(8, 2 * m + 2); }

DirectionSet make_directions(int m, int j, std::uint64_t seed) {
  require(m >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
  if (j < 2 * m) {
    fail(ErrorCode::TooFewDirections, "need at least " + std::to_string(2 * m) +
                                          " directions for dimension " + std::to_string(m));
  }
  DirectionSet out;
  out.directions = Matrix::Zero(j, m);
  for (int i = 0; i < m; ++i) {
    out.directions(2 * i, i) = 1.0;
    out.directions(2 * i + 1, i) = -1.0;
  }
  const int extra = j - 2 * m;
  if (extra == 0) return out;
  if (m == 1) {
    for (int e = 0; e < extra; ++e) out.directions(2 + e, 0) = e % 2 == 0 ? 1.0 : -1.0;
    return out;
  }
  if (m == 2) {
    const double step = 2.0 * std::numbers::pi / extra;
    for (int e = 0; e < extra; ++e) {
      const double angle = step / 2.0 + step * e;
      out.directions(2 * m + e, 0) = std::cos(angle);
      out.directions(2 * m + e, 1) = std::sin(angle);
    }
    return out;
  }
  const auto primes = first_primes(m);
  const boost::math::normal standard;
  for (int e = 0; e < extra; ++e) {
    Vector v(m);
    for (int i = 0; i < m; ++i) {
      const double u = radical_inverse(seed + static_cast<std::uint64_t>(e) + 1, primes[i]);
      v(i) = boost::math::quantile(standard, u);
    }
    const double norm = v.norm();
    if (norm < 1e-12) v = Vector::Ones(m), v /= v.norm();
    else v /= norm;
    out.directions.row(2 * m + e) = v.transpose();
  }
  return out;
}

bool positively_spans(const Matrix& directions) {
  const int m = static_cast<int>(directions.cols());
  // Spanning fails iff some nonzero u has V u <= 0; look for one in the unit box.
  lp::LinearProgram prog;
  for (int i = 0; i < m; ++i) prog.add_variable(-1.0, 1.0, 0.0);
  for (Eigen::Index r = 0; r < directions.rows(); ++r) {
    const int row = prog.add_row(lp::RowSense::LessEqual, 0.0);
    for (int i = 0; i < m; ++i) prog.add_coefficient(row, i, directions(r, i));
  }
  prog.set_sense(lp::Sense::Maximize);
  for (int i = 0; i < m; ++i) {
    for (double sign : {1.0, -1.0}) {
      for (int c = 0; c < m; ++c) prog.set_objective(c, c == i ? sign : 0.0);
      const auto res = lp::solve(prog);
      if (!res.optimal() || res.objective > 1e-9) return false;
    }
  }
  return true;
}

double Polytope::max_violation(const Vector& point) const {
  require(point.size() == m(), ErrorCode::DimensionMismatch,
          "point length must equal the polytope dimension");
  if (rows() == 0) return 0.0;
  return (d_matrix * point - d_vector).maxCoeff();
}

bool Polytope::contains(const Vector& point, double tolerance) const {
  return max_violation(point) <= tolerance;
}

Vector Polytope::pull_inside(const Vector& point) const {
  const Vector at_center = d_vector - d_matrix * center;
  const Vector at_point = d_matrix * point - d_vector;
  double theta = 1.0;
  for (int r = 0; r < rows(); ++r) {
    if (at_point(r) <= 0.0) continue;
    const double slack = std::max(0.0, at_center(r));
    theta = std::min(theta, slack / (slack + at_point(r)));
  }
  return center + theta * (point - center);
}

double Polytope::support(const Vector& direction) const {
  require(direction.size() == m(), ErrorCode::DimensionMismatch,
          "direction length must equal the polytope dimension");
  auto prog = polytope_lp(*this);
  prog.set_sense(lp::Sense::Maximize);
  for (int i = 0; i < m(); ++i) prog.set_objective(i, direction(i));
  const auto res = lp::solve(prog);
  if (!res.optimal()) {
    fail(ErrorCode::SolverFailure,
         std::string("polytope support LP ended ") + lp::to_string(res.status));
  }
  return res.objective;
}

Matrix Polytope::vertices(long long cap) const {
  const int n = rows(), dim = m();
  long long candidates = 1;
  for (int i = 0; i < dim; ++i) {
    candidates = candidates * (n - i) / (i + 1);
    if (candidates > cap) {
      fail(ErrorCode::EnumerationTooLarge,
           "vertex enumeration would visit more than " + std::to_string(cap) + " row subsets");
    }
  }
  const double scale = std::max(1.0, d_vector.cwiseAbs().maxCoeff());
  std::vector<Vector> found;
  std::vector<int> pick(dim);
  std::iota(pick.begin(), pick.end(), 0);
  while (dim > 0 && dim <= n) {
    Matrix a(dim, dim);
    Vector b(dim);
    for (int i = 0; i < dim; ++i) {
      a.row(i) = d_matrix.row(pick[i]);
      b(i) = d_vector(pick[i]);
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.rank() == dim) {
      const Vector v = lu.solve(b);
      const bool inside = ((d_matrix * v - d_vector).array() <= 1e-9 * scale).all();
      const bool fresh = std::none_of(found.begin(), found.end(), [&](const Vector& u) {
        return (u - v).cwiseAbs().maxCoeff() <= 1e-9 * scale;
      });
      if (inside && fresh) found.push_back(v);
    }
    // next combination in lexicographic order
    int i = dim - 1;
    while (i >= 0 && pick[i] == n - dim + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int j = i + 1; j < dim; ++j) pick[j] = pick[j - 1] + 1;
  }
  if (found.empty()) fail(ErrorCode::NumericalFailure, "polytope has no vertices");
  Matrix out(static_cast<int>(found.size()), dim);
  for (std::size_t i = 0; i < found.size(); ++i) out.row(static_cast<int>(i)) = found[i].transpose();
  return out;
}

Polytope build_subset_polytope(const gmm::ConditionalComponent& component, double gamma,
                               const DirectionSet& directions) {
  require(gamma >= 0.0 && std::isfinite(gamma), ErrorCode::InvalidArgument,
          "gamma must be finite and nonnegative");
  const int m = static_cast<int>(component.mean.size());
  require(directions.m() == m, ErrorCode::DimensionMismatch,
          "direction dimension must equal the component dimension");
  Matrix chol = component.cholesky;
  if (chol.size() == 0) {
    Eigen::LLT<Matrix> llt(component.covariance);
    if (llt.info() != Eigen::Success) fail(ErrorCode::SingularCholesky, "covariance is not PD");
    chol = llt.matrixL();
  }
  require(chol.rows() == m && chol.cols() == m, ErrorCode::DimensionMismatch,
          "Cholesky factor has the wrong shape");
  const Vector diag = chol.diagonal();
  if ((diag.array() <= 0.0).any() || !chol.allFinite()) {
    fail(ErrorCode::SingularCholesky, "Cholesky factor has a nonpositive diagonal");
  }
  Polytope p;
  // D^T = L^{-T} V^T
  p.d_matrix = chol.transpose()
                   .triangularView<Eigen::Upper>()
                   .solve(directions.directions.transpose())
                   .transpose();
  p.d_vector = Vector::Constant(directions.j(), std::sqrt(gamma)) + p.d_matrix * component.mean;
  p.center = component.mean;
  p.cholesky = chol;
  return p;
}

const char* to_string(SetKind kind) {
  switch (kind) {
    case SetKind::Caus: return "caus";
    case SetKind::Box: return "box";
    case SetKind::Uos: return "uos";
  }
  return "unknown";
}

SetKind parse_set_kind(const std::string& name) {
  if (name == "caus") return SetKind::Caus;
  if (name == "box") return SetKind::Box;
  if (name == "uos") return SetKind::Uos;
  fail(ErrorCode::InvalidArgument, "unknown set kind '" + name + "'");
}

UnionSet::UnionSet(SetKind kind, std::vector<std::vector<Polytope>> periods,
                   std::vector<double> gamma_per_period)
    : kind_(kind), periods_(std::move(periods)), gammas_(std::move(gamma_per_period)) {
  require(!periods_.empty(), ErrorCode::InvalidArgument, "a set needs at least one period");
  require(gammas_.empty() || gammas_.size() == periods_.size(), ErrorCode::DimensionMismatch,
          "one gamma per period expected");
  const int dim = periods_.front().empty() ? 0 : periods_.front().front().m();
  for (const auto& subsets : periods_) {
    require(!subsets.empty(), ErrorCode::InvalidArgument, "every period needs a subset");
    for (const auto& p : subsets) {
      check_polytope(p);
      require(p.m() == dim, ErrorCode::DimensionMismatch, "subset dimensions disagree");
      if (!p.contains(p.center, 1e-7 * std::max(1.0, p.d_vector.cwiseAbs().maxCoeff()))) {
        fail(ErrorCode::InvalidArgument, "subset center lies outside its polytope");
      }
    }
  }
  big_m_.reserve(periods_.size());
  for (const auto& subsets : periods_) big_m_.push_back(compute_big_m(subsets));
}

int UnionSet::max_subsets() const {
  int out = 0;
  for (const auto& s : periods_) out = std::max(out, static_cast<int>(s.size()));
  return out;
}

int UnionSet::containing_subset(int t, const Vector& point, double tolerance) const {
  require(t >= 0 && t < periods(), ErrorCode::InvalidArgument, "period index out of range");
  for (int k = 0; k < subsets(t); ++k)
    if (periods_[t][k].contains(point, tolerance)) return k;
  return -1;
}

Vector compute_big_m(std::span<const Polytope> polytopes) {
  require(!polytopes.empty(), ErrorCode::InvalidArgument, "no polytopes for Big-M");
  const int m = polytopes.front().m();
  Vector bound = Vector::Zero(m);
  for (const auto& p : polytopes) {
    auto prog = polytope_lp(p);
    prog.set_sense(lp::Sense::Maximize);
    for (int i = 0; i < m; ++i) {
      for (double sign : {1.0, -1.0}) {
        for (int c = 0; c < m; ++c) prog.set_objective(c, c == i ? sign : 0.0);
        const auto res = lp::solve(prog);
        if (res.status == lp::Status::Unbounded) {
          fail(ErrorCode::InvalidArgument, "subset polytope is unbounded");
        }
        if (!res.optimal()) {
          fail(ErrorCode::SolverFailure,
               std::string("Big-M LP ended ") + lp::to_string(res.status));
        }
        bound(i) = std::max(bound(i), std::abs(res.objective));
      }
    }
  }
  return 1.1 * bound.array() + 1e-6;
}

CausSet build_caus(std::span<const gmm::ConditionalGmm> models,
                   std::span<const calibration::CalibratedRadius> radii,
                   const DirectionSet& directions) {
  require(!models.empty(), ErrorCode::InvalidArgument, "at least one period is required");
  require(models.size() == radii.size(), ErrorCode::DimensionMismatch,
          "one radius per period model expected");
  require(positively_spans(directions.directions), ErrorCode::TooFewDirections,
          "directions do not positively span the space");
  const int m = models.front().m();
  const int k = models.front().k();
  std::vector<std::vector<Polytope>> periods;
  std::vector<double> gammas;
  for (std::size_t t = 0; t < models.size(); ++t) {
    require(models[t].m() == m, ErrorCode::DimensionMismatch, "dimension differs across periods");
    require(models[t].k() == k, ErrorCode::DimensionMismatch,
            "component count differs across periods");
    std::vector<Polytope> subsets;
    for (const auto& c : models[t].components())
      subsets.push_back(build_subset_polytope(c, radii[t].gamma, directions));
    periods.push_back(std::move(subsets));
    gammas.push_back(radii[t].gamma);
  }
  return CausSet(SetKind::Caus, std::move(periods), std::move(gammas));
}

bool membership(const UnionSet& set, const Matrix& trajectory, double tolerance) {
  require(trajectory.rows() == set.periods() && trajectory.cols() == set.m(),
          ErrorCode::DimensionMismatch, "trajectory must be T x m");
  for (int t = 0; t < set.periods(); ++t)
    if (set.containing_subset(t, trajectory.row(t).transpose(), tolerance) < 0) return false;
  return true;
}

MilpEncoding encode_milp(const UnionSet& set) {
  if (!set.has_big_m()) fail(ErrorCode::MissingBigM, "set carries no Big-M bounds");
  MilpEncoding enc;
  enc.periods = set.periods();
  enc.subsets = set.max_subsets();
  enc.m = set.m();
  auto& prog = enc.block;
  const int T = enc.periods, K = enc.subsets, m = enc.m;

  enc.xi_offset = prog.num_variables();
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < m; ++i)
      prog.add_variable(-lp::kInf, lp::kInf, 0.0, lp::VarKind::Continuous,
                        "xi_" + std::to_string(t) + "_" + std::to_string(i));
  enc.alpha_offset = prog.num_variables();
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k) {
      const int col = prog.add_binary(0.0, "alpha_" + std::to_string(k) + "_" + std::to_string(t));
      if (k >= set.subsets(t)) prog.set_bounds(col, 0.0, 0.0);
    }
  enc.w_offset = prog.num_variables();
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < m; ++i)
        prog.add_variable(-lp::kInf, lp::kInf, 0.0, lp::VarKind::Continuous,
                          "w_" + std::to_string(k) + "_" + std::to_string(t) + "_" +
                              std::to_string(i));

  for (int t = 0; t < T; ++t) {
    const Vector& big = set.big_m()[t];
    const int sos = prog.add_row(lp::RowSense::Equal, 1.0, "sos_" + std::to_string(t));
    for (int k = 0; k < K; ++k) prog.add_coefficient(sos, enc.alpha_col(k, t), 1.0);
    enc.sos_rows.push_back(sos);
    for (int k = 0; k < K; ++k) {
      const int a = enc.alpha_col(k, t);
      if (k < set.subsets(t)) {
        const Polytope& p = set.subset(t, k);
        // D w - d alpha <= 0
        for (int r = 0; r < p.rows(); ++r) {
          const int row = prog.add_row(lp::RowSense::LessEqual, 0.0);
          for (int i = 0; i < m; ++i) prog.add_coefficient(row, enc.w_col(k, t, i), p.d_matrix(r, i));
          prog.add_coefficient(row, a, -p.d_vector(r));
        }
      }
      for (int i = 0; i < m; ++i) {
        const int w = enc.w_col(k, t, i);
        const int xi = enc.xi_col(t, i);
        // -M alpha <= w <= M alpha
        int row = prog.add_row(lp::RowSense::LessEqual, 0.0);
        prog.add_coefficient(row, w, 1.0);
        prog.add_coefficient(row, a, -big(i));
        row = prog.add_row(lp::RowSense::GreaterEqual, 0.0);
        prog.add_coefficient(row, w, 1.0);
        prog.add_coefficient(row, a, big(i));
        // -M (1 - alpha) <= xi - w <= M (1 - alpha)
        row = prog.add_row(lp::RowSense::LessEqual, big(i));
        prog.add_coefficient(row, xi, 1.0);
        prog.add_coefficient(row, w, -1.0);
        prog.add_coefficient(row, a, big(i));
        row = prog.add_row(lp::RowSense::GreaterEqual, -big(i));
        prog.add_coefficient(row, xi, 1.0);
        prog.add_coefficient(row, w, -1.0);
        prog.add_coefficient(row, a, -big(i));
      }
    }
  }
  return enc;
}

long long combination_count(const UnionSet& set) {
  long long total = 1;
  for (int t = 0; t < set.periods(); ++t) {
    if (total > (1LL << 62) / set.subsets(t)) return -1;
    total *= set.subsets(t);
  }
  return total;
}

bool next_combination(std::vector<int>& combo, const UnionSet& set) {
  for (int t = set.periods() - 1; t >= 0; --t) {
    if (++combo[t] < set.subsets(t)) return true;
    combo[t] = 0;
  }
  return false;
}

WorstCase worst_case_enumerate(const UnionSet& set, const Matrix& objective, long long cap) {
  const int T = set.periods(), m = set.m();
  require(objective.rows() == T && objective.cols() == m, ErrorCode::DimensionMismatch,
          "objective must be T x m");
  const long long count = combination_count(set);
  if (count < 0 || count > cap) {
    fail(ErrorCode::EnumerationTooLarge,
         "subset combinations exceed the enumeration cap of " + std::to_string(cap));
  }
  // Periods decouple for a fixed combination, so each LP is a per-period support value.
  std::vector<std::vector<double>> values(T);
  std::vector<std::vector<Vector>> points(T);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < set.subsets(t); ++k) {
      const Polytope& p = set.subset(t, k);
      auto prog = polytope_lp(p);
      prog.set_sense(lp::Sense::Maximize);
      for (int i = 0; i < m; ++i) prog.set_objective(i, objective(t, i));
      const auto res = lp::solve(prog);
      if (!res.optimal()) {
        fail(ErrorCode::SolverFailure,
             std::string("enumeration LP ended ") + lp::to_string(res.status));
      }
      values[t].push_back(res.objective);
      points[t].push_back(Eigen::Map<const Vector>(res.primal.data(), m));
    }
  }
  WorstCase best;
  best.value = -lp::kInf;
  std::vector<int> combo(T, 0);
  do {
    double v = 0.0;
    for (int t = 0; t < T; ++t) v += values[t][combo[t]];
    if (v > best.value + 1e-9 * std::max(1.0, std::abs(v))) {
      best.value = v;
      best.subsets = combo;
    }
  } while (next_combination(combo, set));
  best.trajectory.resize(T, m);
  for (int t = 0; t < T; ++t) best.trajectory.row(t) = points[t][best.subsets[t]].transpose();
  return best;
}

WorstCase decode(const UnionSet& set, const MilpEncoding& encoding,
                 std::span<const double> solution, int column_offset) {
  const int T = encoding.periods, m = encoding.m;
  WorstCase out;
  out.trajectory.resize(T, m);
  out.subsets.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    Vector xi(m);
    for (int i = 0; i < m; ++i) xi(i) = solution[column_offset + encoding.xi_col(t, i)];
    int chosen = set.containing_subset(t, xi, 1e-6 * std::max(1.0, xi.cwiseAbs().maxCoeff()));
    if (chosen < 0) {
      double top = -1.0;
      for (int k = 0; k < set.subsets(t); ++k) {
        const double a = solution[column_offset + encoding.alpha_col(k, t)];
        if (a > top) {
          top = a;
          chosen = k;
        }
      }
    }
    out.subsets[t] = chosen;
    out.trajectory.row(t) = set.subset(t, chosen).pull_inside(xi).transpose();
  }
  return out;
}

WorstCase worst_case_milp(const UnionSet& set, const Matrix& objective) {
  const int T = set.periods(), m = set.m();
  require(objective.rows() == T && objective.cols() == m, ErrorCode::DimensionMismatch,
          "objective must be T x m");
  auto enc = encode_milp(set);
  enc.block.set_sense(lp::Sense::Maximize);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < m; ++i) enc.block.set_objective(enc.xi_col(t, i), objective(t, i));
  lp::SolveOptions opts;
  opts.backend = lp::Backend::Highs;
  opts.mip_relative_gap = 1e-9;
  const auto res = lp::solve(enc.block, opts);
  if (!res.optimal()) {
    fail(ErrorCode::SolverFailure, std::string("encoding MILP ended ") + lp::to_string(res.status));
  }
  auto out = decode(set, enc, res.primal);
  out.value = res.objective;
  return out;
}

BoxSet build_box(std::vector<Vector> lower, std::vector<Vector> upper) {
  require(!lower.empty() && lower.size() == upper.size(), ErrorCode::EmptyBounds,
          "box needs matching, nonempty per-period bounds");
  for (std::size_t t = 0; t < lower.size(); ++t) {
    require(lower[t].size() == upper[t].size() && lower[t].size() > 0,
            ErrorCode::DimensionMismatch, "box bound lengths disagree");
    require(lower[t].allFinite() && upper[t].allFinite(), ErrorCode::EmptyBounds,
            "box bounds must be finite");
    require((lower[t].array() <= upper[t].array()).all(), ErrorCode::EmptyBounds,
            "box lower bound exceeds upper bound at period " + std::to_string(t + 1));
  }
  return {std::move(lower), std::move(upper)};
}

BoxSet build_box(std::span<const SampleMatrix> per_period_samples) {
  std::vector<Vector> lower, upper;
  for (const auto& s : per_period_samples) {
    require(s.rows() > 0, ErrorCode::EmptyBounds, "no samples for a box period");
    lower.push_back(s.colwise().minCoeff().transpose());
    upper.push_back(s.colwise().maxCoeff().transpose());
  }
  return build_box(std::move(lower), std::move(upper));
}

UnionSet to_union(const BoxSet& box) {
  std::vector<std::vector<Polytope>> periods;
  for (std::size_t t = 0; t < box.lower.size(); ++t) {
    const auto m = box.lower[t].size();
    Polytope p;
    p.d_matrix.resize(2 * m, m);
    p.d_matrix << Matrix::Identity(m, m), -Matrix::Identity(m, m);
    p.d_vector.resize(2 * m);
    p.d_vector << box.upper[t], -box.lower[t];
    p.center = 0.5 * (box.lower[t] + box.upper[t]);
    periods.push_back({std::move(p)});
  }
  return UnionSet(SetKind::Box, std::move(periods));
}

double default_uos_lambda(int m) {
  require(m >= 1, ErrorCode::InvalidArgument, "dimension must be positive");
  return std::sqrt(boost::math::quantile(boost::math::chi_squared(m), 0.95));
}

UosBaselineSet build_uos_baseline(const gmm::ConditionalGmm& marginal, int periods,
                                  double lambda, std::vector<double> phi) {
  require(periods >= 1, ErrorCode::InvalidArgument, "periods must be positive");
  require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::InvalidArgument,
          "lambda must be positive");
  const int m = marginal.m();
  const int k = marginal.k();
  if (phi.empty()) phi.assign(k, static_cast<double>(m));
  if (phi.size() == 1) phi.assign(k, phi.front());
  require(static_cast<int>(phi.size()) == k, ErrorCode::DimensionMismatch,
          "one budget per component expected");
  for (double p : phi)
    require(p > 0.0 && p <= m, ErrorCode::InvalidArgument, "budgets must lie in (0, m]");
  std::vector<UosSubset> subsets;
  for (int c = 0; c < k; ++c) {
    const auto& comp = marginal.component(c);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(comp.covariance));
    require(eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 0.0,
            ErrorCode::SingularCholesky, "baseline covariance is not PD");
    subsets.push_back({comp.mean, lambda * eig.operatorSqrt(), phi[c]});
  }
  UosBaselineSet out;
  out.lambda = lambda;
  out.periods.assign(periods, subsets);
  return out;
}

UnionSet to_union(const UosBaselineSet& set) {
  std::vector<std::vector<Polytope>> periods;
  for (const auto& subsets : set.periods) {
    std::vector<Polytope> polys;
    for (const auto& s : subsets) {
      const int m = static_cast<int>(s.center.size());
      const bool budget_active = s.phi < m;
      require(!budget_active || m <= 20, ErrorCode::InvalidArgument,
              "latent budget rows are enumerated; dimension too large");
      const int sign_rows = budget_active ? (1 << m) : 0;
      Matrix h = Matrix::Zero(2 * m + sign_rows, m);
      Vector rhs = Vector::Ones(2 * m + sign_rows);
      for (int i = 0; i < m; ++i) {
        h(2 * i, i) = 1.0;
        h(2 * i + 1, i) = -1.0;
      }
      for (int mask = 0; mask < sign_rows; ++mask) {
        for (int i = 0; i < m; ++i) h(2 * m + mask, i) = (mask >> i) & 1 ? -1.0 : 1.0;
        rhs(2 * m + mask) = s.phi;
      }
      polys.push_back(from_affine_image(h, rhs, s.center, s.factor));
    }
    periods.push_back(std::move(polys));
  }
  return UnionSet(SetKind::Uos, std::move(periods));
}

nlohmann::json to_json(const UnionSet& set) {
  nlohmann::json periods = nlohmann::json::array();
  for (int t = 0; t < set.periods(); ++t) {
    nlohmann::json subsets = nlohmann::json::array();
    const double gamma = set.gamma_per_period().empty() ? 0.0 : set.gamma_per_period()[t];
    for (const auto& p : set.all_periods()[t]) {
      nlohmann::json s{{"rows", p.rows()},
                       {"D", flatten(p.d_matrix)},
                       {"d", std::vector<double>(p.d_vector.begin(), p.d_vector.end())},
                       {"center", std::vector<double>(p.center.begin(), p.center.end())}};
      if (set.kind() == SetKind::Caus) s["gamma"] = gamma;
      if (p.cholesky.size() > 0) s["cholesky"] = flatten(p.cholesky);
      subsets.push_back(std::move(s));
    }
    nlohmann::json entry{{"period", t + 1}, {"subsets", std::move(subsets)}};
    if (set.kind() == SetKind::Caus) entry["gamma"] = gamma;
    const Vector& big = set.big_m()[t];
    entry["big_m"] = std::vector<double>(big.begin(), big.end());
    periods.push_back(std::move(entry));
  }
  return {{"kind", to_string(set.kind())}, {"m", set.m()}, {"periods", std::move(periods)}};
}

UnionSet union_set_from_json(const nlohmann::json& doc) {
  try {
    const SetKind kind = parse_set_kind(doc.at("kind").get<std::string>());
    const int m = doc.at("m").get<int>();
    std::vector<std::vector<Polytope>> periods;
    std::vector<double> gammas;
    for (const auto& entry : doc.at("periods")) {
      std::vector<Polytope> polys;
      for (const auto& s : entry.at("subsets")) {
        Polytope p;
        const int rows = s.at("rows").get<int>();
        p.d_matrix = rows_to_matrix(s.at("D"), rows, m);
        p.d_vector = to_vector(s.at("d"));
        p.center = to_vector(s.at("center"));
        if (s.contains("cholesky")) p.cholesky = rows_to_matrix(s.at("cholesky"), m, m);
        polys.push_back(std::move(p));
      }
      if (kind == SetKind::Caus) gammas.push_back(entry.at("gamma").get<double>());
      periods.push_back(std::move(polys));
    }
    return UnionSet(kind, std::move(periods), std::move(gammas));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("set JSON: ") + e.what());
  }
}

}  // namespace caus::sets
