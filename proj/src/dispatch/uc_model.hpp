#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <json.hpp>

#include "core/linalg.hpp"

namespace caus::dispatch {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Unit {
  std::string name;
  int bus = 0;
  double p_min = 0.0;
  double p_max = 0.0;
  double ramp_up = 0.0;
  double ramp_down = 0.0;
  int min_up = 1;
  int min_down = 1;
  double cost_commit = 0.0;
  double cost_startup = 0.0;
  double cost_energy = 0.0;
  bool initial_on = false;
};

struct WindFarm {
  std::string name;
  int bus = 0;
};

// Transport-model line: flow in [-capacity, capacity], positive from -> to.
struct Line {
  std::string name;
  int from = 0;
  int to = 0;
  double capacity = 0.0;
};

struct UcInstance {
  std::string name;
  int periods = 1;
  int buses = 1;
  std::vector<double> loads;        // system load per period, MW
  std::vector<double> load_shares;  // fraction of load at each bus
  std::vector<Unit> units;
  std::vector<WindFarm> farms;
  std::vector<Line> lines;
  double shed_penalty = 1000.0;
  double spill_penalty = 100.0;

  double bus_load(int b, int t) const { return loads[t] * load_shares[b]; }
};

/// Throws InconsistentInstance on any violated invariant.
void validate(const UcInstance& instance);

UcInstance instance_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const UcInstance& instance);

/// min c^T X + b^T Y
/// s.t. A X (<= | =) h,  E X + G Y (<= | =) l - U xi,  y_lower <= Y <= y_upper.
/// X = (u, v, w) commitment/startup/shutdown binaries; Y = per period
/// (p, shed, spill, flow). xi is stacked period-major: xi[t * farms + j].
struct MatrixForm {
  int periods = 0;
  int units = 0;
  int buses = 0;
  int farms = 0;
  int lines = 0;
  int nx = 0;
  int ny = 0;
  int nxi = 0;

  Vector c;
  Vector b;
  SparseRows A;
  Vector h;
  std::vector<bool> a_equal;
  SparseRows E;
  SparseRows G;
  SparseRows U;
  Vector l;
  std::vector<bool> g_equal;
  Vector y_lower;
  Vector y_upper;

  // Magnitude bound on each Y column at any optimal recourse, used to size
  // complementarity constants: y_bound_base plus, when y_bound_row >= 0,
  // the xi bounds of the uncertain terms in that row.
  Vector y_bound_base;
  std::vector<int> y_bound_row;

  std::vector<std::string> x_names;
  std::vector<std::string> y_names;
  std::vector<std::string> a_row_names;
  std::vector<std::string> g_row_names;

  int u_col(int g, int t) const { return g * periods + t; }
  int v_col(int g, int t) const { return (units + g) * periods + t; }
  int w_col(int g, int t) const { return (2 * units + g) * periods + t; }
  int y_stride() const { return units + 2 * buses + lines; }
  int p_col(int g, int t) const { return t * y_stride() + g; }
  int shed_col(int bus, int t) const { return t * y_stride() + units + bus; }
  int spill_col(int bus, int t) const { return t * y_stride() + units + buses + bus; }
  int flow_col(int line, int t) const { return t * y_stride() + units + 2 * buses + line; }
  int xi_index(int t, int j) const { return t * farms + j; }
};

MatrixForm assemble(const UcInstance& instance);

struct Dimensions {
  int nx = 0;
  int ny = 0;
  int nxi = 0;
  int first_stage_rows = 0;
  int first_stage_equalities = 0;
  int recourse_rows = 0;
  int recourse_equalities = 0;
  int u_nonzeros = 0;
};

Dimensions dimensions(const MatrixForm& form);
nlohmann::json to_json(const Dimensions& dims);

/// Stacks a T x m trajectory into the period-major xi vector.
Vector stack(const Matrix& trajectory);
Matrix unstack(const Vector& xi, int periods, int farms);

/// u block of X as a units x periods 0/1 matrix.
Matrix commitment_matrix(const MatrixForm& form, const Vector& x);

}  // namespace caus::dispatch
