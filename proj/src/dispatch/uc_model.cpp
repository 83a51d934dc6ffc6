#include "dispatch/uc_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace caus::dispatch {
namespace {

void check(bool ok, const std::string& what) {
  require(ok, ErrorCode::InconsistentInstance, what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Row builder that keeps triplets until the matrix sizes are known.
struct RowBlock {
  std::vector<Eigen::Triplet<double>> left;   // against X (A or E)
  std::vector<Eigen::Triplet<double>> right;  // against Y (G)
  std::vector<Eigen::Triplet<double>> xi;     // against xi (U)
  std::vector<double> rhs;
  std::vector<bool> equal;
  std::vector<std::string> names;

  int add(double r, bool eq, std::string name) {
    rhs.push_back(r);
    equal.push_back(eq);
    names.push_back(std::move(name));
    return static_cast<int>(rhs.size()) - 1;
  }
  int rows() const { return static_cast<int>(rhs.size()); }
};

SparseRows build(int rows, int cols, const std::vector<Eigen::Triplet<double>>& t) {
  SparseRows m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

std::string tag(const std::string& base, int a, int t) {
  return base + "_" + std::to_string(a) + "_" + std::to_string(t);
}

}  // namespace

void validate(const UcInstance& in) {
  check(in.periods >= 1, "periods must be at least 1");
  check(in.buses >= 1, "buses must be at least 1");
  check(static_cast<int>(in.loads.size()) == in.periods, "loads must have one entry per period");
  for (double d : in.loads) check(finite_nonneg(d), "loads must be finite and nonnegative");
  check(static_cast<int>(in.load_shares.size()) == in.buses,
        "load_shares must have one entry per bus");
  double share_sum = 0.0;
  for (double s : in.load_shares) {
    check(finite_nonneg(s), "load shares must be nonnegative");
    share_sum += s;
  }
  check(std::abs(share_sum - 1.0) <= 1e-9, "load shares must sum to 1");
  check(!in.units.empty(), "at least one unit is required");
  double top_cost = 0.0;
  for (const auto& u : in.units) {
    const std::string who = "unit '" + u.name + "': ";
    check(u.bus >= 0 && u.bus < in.buses, who + "bus out of range");
    check(finite_nonneg(u.p_min) && finite_nonneg(u.p_max), who + "limits must be nonnegative");
    check(u.p_min <= u.p_max, who + "p_min exceeds p_max");
    check(finite_nonneg(u.ramp_up) && finite_nonneg(u.ramp_down), who + "ramps must be nonnegative");
    check(u.min_up >= 1 && u.min_down >= 1, who + "min up/down must be at least 1");
    check(finite_nonneg(u.cost_commit) && finite_nonneg(u.cost_startup) &&
              finite_nonneg(u.cost_energy),
          who + "costs must be nonnegative");
    top_cost = std::max(top_cost, u.cost_energy);
  }
  for (const auto& f : in.farms)
    check(f.bus >= 0 && f.bus < in.buses, "farm '" + f.name + "': bus out of range");
  for (const auto& l : in.lines) {
    const std::string who = "line '" + l.name + "': ";
    check(l.from >= 0 && l.from < in.buses && l.to >= 0 && l.to < in.buses && l.from != l.to,
          who + "endpoints invalid");
    check(finite_nonneg(l.capacity), who + "capacity must be nonnegative");
  }
  check(std::isfinite(in.shed_penalty) && in.shed_penalty > top_cost,
        "shed_penalty must exceed every energy cost");
  check(std::isfinite(in.spill_penalty) && in.spill_penalty > 0.0,
        "spill_penalty must be positive");
}

UcInstance instance_from_json(const nlohmann::json& doc) {
  try {
    UcInstance in;
    in.name = doc.value("name", std::string("instance"));
    in.periods = doc.at("periods").get<int>();
    in.buses = doc.value("buses", 1);
    in.loads = doc.at("loads").get<std::vector<double>>();
    if (doc.contains("load_shares")) {
      in.load_shares = doc.at("load_shares").get<std::vector<double>>();
    } else {
      in.load_shares.assign(in.buses, 0.0);
      in.load_shares[0] = 1.0;
    }
    for (const auto& j : doc.at("units")) {
      Unit u;
      u.name = j.value("name", "G" + std::to_string(in.units.size() + 1));
      u.bus = j.value("bus", 0);
      u.p_min = j.at("p_min").get<double>();
      u.p_max = j.at("p_max").get<double>();
      u.ramp_up = j.value("ramp_up", u.p_max);
      u.ramp_down = j.value("ramp_down", u.p_max);
      u.min_up = j.value("min_up", 1);
      u.min_down = j.value("min_down", 1);
      u.cost_commit = j.value("cost_commit", 0.0);
      u.cost_startup = j.value("cost_startup", 0.0);
      u.cost_energy = j.value("cost_energy", 0.0);
      u.initial_on = j.value("initial_on", false);
      in.units.push_back(std::move(u));
    }
    if (doc.contains("wind_farms")) {
      for (const auto& j : doc.at("wind_farms")) {
        in.farms.push_back({j.value("name", "W" + std::to_string(in.farms.size() + 1)),
                            j.value("bus", 0)});
      }
    }
    if (doc.contains("lines")) {
      for (const auto& j : doc.at("lines")) {
        in.lines.push_back({j.value("name", "L" + std::to_string(in.lines.size() + 1)),
                            j.at("from").get<int>(), j.at("to").get<int>(),
                            j.at("capacity").get<double>()});
      }
    }
    in.shed_penalty = doc.value("shed_penalty", 1000.0);
    in.spill_penalty = doc.value("spill_penalty", 100.0);
    validate(in);
    return in;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("instance JSON: ") + e.what());
  }
}

nlohmann::json to_json(const UcInstance& in) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : in.units) {
    units.push_back({{"name", u.name}, {"bus", u.bus}, {"p_min", u.p_min}, {"p_max", u.p_max},
                     {"ramp_up", u.ramp_up}, {"ramp_down", u.ramp_down},
                     {"min_up", u.min_up}, {"min_down", u.min_down},
                     {"cost_commit", u.cost_commit}, {"cost_startup", u.cost_startup},
                     {"cost_energy", u.cost_energy}, {"initial_on", u.initial_on}});
  }
  nlohmann::json farms = nlohmann::json::array();
  for (const auto& f : in.farms) farms.push_back({{"name", f.name}, {"bus", f.bus}});
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& l : in.lines)
    lines.push_back({{"name", l.name}, {"from", l.from}, {"to", l.to}, {"capacity", l.capacity}});
  return {{"name", in.name},       {"periods", in.periods},
          {"buses", in.buses},     {"loads", in.loads},
          {"load_shares", in.load_shares}, {"units", units},
          {"wind_farms", farms},   {"lines", lines},
          {"shed_penalty", in.shed_penalty}, {"spill_penalty", in.spill_penalty}};
}

MatrixForm assemble(const UcInstance& in) {
  validate(in);
  MatrixForm f;
  f.periods = in.periods;
  f.units = static_cast<int>(in.units.size());
  f.buses = in.buses;
  f.farms = static_cast<int>(in.farms.size());
  f.lines = static_cast<int>(in.lines.size());
  const int T = f.periods, G = f.units, B = f.buses, L = f.lines;
  f.nx = 3 * G * T;
  f.ny = f.y_stride() * T;
  f.nxi = f.farms * T;

  f.c = Vector::Zero(f.nx);
  f.x_names.resize(f.nx);
  for (int g = 0; g < G; ++g) {
    for (int t = 0; t < T; ++t) {
      f.c(f.u_col(g, t)) = in.units[g].cost_commit;
      f.c(f.v_col(g, t)) = in.units[g].cost_startup;
      f.x_names[f.u_col(g, t)] = tag("u", g, t);
      f.x_names[f.v_col(g, t)] = tag("v", g, t);
      f.x_names[f.w_col(g, t)] = tag("w", g, t);
    }
  }

  f.b = Vector::Zero(f.ny);
  f.y_lower = Vector::Zero(f.ny);
  f.y_upper = Vector::Constant(f.ny, std::numeric_limits<double>::infinity());
  f.y_bound_base = Vector::Zero(f.ny);
  f.y_bound_row.assign(f.ny, -1);
  f.y_names.resize(f.ny);

  // Unit and line capacity touching each bus, for shed/spill magnitude bounds.
  std::vector<double> bus_gen(B, 0.0), bus_lines(B, 0.0);
  for (const auto& u : in.units) bus_gen[u.bus] += u.p_max;
  for (const auto& l : in.lines) {
    bus_lines[l.from] += l.capacity;
    bus_lines[l.to] += l.capacity;
  }

  RowBlock first;
  for (int g = 0; g < G; ++g) {
    const auto& u = in.units[g];
    for (int t = 0; t < T; ++t) {
      // u_t - u_{t-1} - v_t + w_t = 0, with u_{-1} the initial state
      const int r = first.add(t == 0 && u.initial_on ? 1.0 : 0.0, true, tag("logic", g, t));
      first.left.emplace_back(r, f.u_col(g, t), 1.0);
      if (t > 0) first.left.emplace_back(r, f.u_col(g, t - 1), -1.0);
      first.left.emplace_back(r, f.v_col(g, t), -1.0);
      first.left.emplace_back(r, f.w_col(g, t), 1.0);
    }
    for (int t = 0; t < T; ++t) {
      const int r = first.add(1.0, false, tag("onoff", g, t));
      first.left.emplace_back(r, f.v_col(g, t), 1.0);
      first.left.emplace_back(r, f.w_col(g, t), 1.0);
    }
    if (u.min_up >= 2) {
      for (int t = 0; t < T; ++t) {
        const int r = first.add(0.0, false, tag("minup", g, t));
        for (int s = std::max(0, t - u.min_up + 1); s <= t; ++s)
          first.left.emplace_back(r, f.v_col(g, s), 1.0);
        first.left.emplace_back(r, f.u_col(g, t), -1.0);
      }
    }
    if (u.min_down >= 2) {
      for (int t = 0; t < T; ++t) {
        const int r = first.add(1.0, false, tag("mindown", g, t));
        for (int s = std::max(0, t - u.min_down + 1); s <= t; ++s)
          first.left.emplace_back(r, f.w_col(g, s), 1.0);
        first.left.emplace_back(r, f.u_col(g, t), 1.0);
      }
    }
  }

  RowBlock rec;
  for (int t = 0; t < T; ++t) {
    for (int g = 0; g < G; ++g) {
      f.b(f.p_col(g, t)) = in.units[g].cost_energy;
      f.y_bound_base(f.p_col(g, t)) = in.units[g].p_max;
      f.y_names[f.p_col(g, t)] = tag("p", g, t);
    }
    for (int bus = 0; bus < B; ++bus) {
      const int r = rec.add(in.bus_load(bus, t), true, tag("balance", bus, t));
      for (int g = 0; g < G; ++g)
        if (in.units[g].bus == bus) rec.right.emplace_back(r, f.p_col(g, t), 1.0);
      rec.right.emplace_back(r, f.shed_col(bus, t), 1.0);
      rec.right.emplace_back(r, f.spill_col(bus, t), -1.0);
      for (int li = 0; li < L; ++li) {
        if (in.lines[li].to == bus) rec.right.emplace_back(r, f.flow_col(li, t), 1.0);
        if (in.lines[li].from == bus) rec.right.emplace_back(r, f.flow_col(li, t), -1.0);
      }
      for (int j = 0; j < f.farms; ++j)
        if (in.farms[j].bus == bus) rec.xi.emplace_back(r, f.xi_index(t, j), 1.0);

      f.b(f.shed_col(bus, t)) = in.shed_penalty;
      f.b(f.spill_col(bus, t)) = in.spill_penalty;
      f.y_names[f.shed_col(bus, t)] = tag("shed", bus, t);
      f.y_names[f.spill_col(bus, t)] = tag("spill", bus, t);
      // At an optimum shed and spill are never both positive, so each is
      // bounded by the rest of the balance row.
      f.y_bound_base(f.shed_col(bus, t)) = in.bus_load(bus, t) + bus_lines[bus];
      f.y_bound_base(f.spill_col(bus, t)) = bus_gen[bus] + bus_lines[bus];
      f.y_bound_row[f.shed_col(bus, t)] = r;
      f.y_bound_row[f.spill_col(bus, t)] = r;
    }
    for (int g = 0; g < G; ++g) {
      const auto& u = in.units[g];
      const int p = f.p_col(g, t);
      int r = rec.add(0.0, false, tag("pmin", g, t));  // -p + p_min u <= 0
      rec.right.emplace_back(r, p, -1.0);
      if (u.p_min > 0.0) rec.left.emplace_back(r, f.u_col(g, t), u.p_min);
      r = rec.add(0.0, false, tag("pmax", g, t));  // p - p_max u <= 0
      rec.right.emplace_back(r, p, 1.0);
      if (u.p_max > 0.0) rec.left.emplace_back(r, f.u_col(g, t), -u.p_max);
      if (t == 0) continue;
      const int prev = f.p_col(g, t - 1);
      r = rec.add(u.ramp_up, false, tag("rampup", g, t));  // p_t - p_{t-1} - p_max v_t <= R_up
      rec.right.emplace_back(r, p, 1.0);
      rec.right.emplace_back(r, prev, -1.0);
      if (u.p_max > 0.0) rec.left.emplace_back(r, f.v_col(g, t), -u.p_max);
      r = rec.add(u.ramp_down, false, tag("rampdown", g, t));  // p_{t-1} - p_t - p_max w_t <= R_dn
      rec.right.emplace_back(r, prev, 1.0);
      rec.right.emplace_back(r, p, -1.0);
      if (u.p_max > 0.0) rec.left.emplace_back(r, f.w_col(g, t), -u.p_max);
    }
    for (int li = 0; li < L; ++li) {
      const int col = f.flow_col(li, t);
      f.y_lower(col) = -std::numeric_limits<double>::infinity();
      f.y_bound_base(col) = in.lines[li].capacity;
      f.y_names[col] = tag("flow", li, t);
      int r = rec.add(in.lines[li].capacity, false, tag("flowmax", li, t));
      rec.right.emplace_back(r, col, 1.0);
      r = rec.add(in.lines[li].capacity, false, tag("flowmin", li, t));
      rec.right.emplace_back(r, col, -1.0);
    }
  }

  f.A = build(first.rows(), f.nx, first.left);
  f.h = Eigen::Map<const Vector>(first.rhs.data(), first.rows());
  f.a_equal = first.equal;
  f.a_row_names = first.names;
  f.E = build(rec.rows(), f.nx, rec.left);
  f.G = build(rec.rows(), f.ny, rec.right);
  f.U = build(rec.rows(), f.nxi, rec.xi);
  f.l = Eigen::Map<const Vector>(rec.rhs.data(), rec.rows());
  f.g_equal = rec.equal;
  f.g_row_names = rec.names;
  return f;
}

Dimensions dimensions(const MatrixForm& f) {
  Dimensions d;
  d.nx = f.nx;
  d.ny = f.ny;
  d.nxi = f.nxi;
  d.first_stage_rows = static_cast<int>(f.A.rows());
  d.first_stage_equalities = static_cast<int>(std::count(f.a_equal.begin(), f.a_equal.end(), true));
  d.recourse_rows = static_cast<int>(f.G.rows());
  d.recourse_equalities = static_cast<int>(std::count(f.g_equal.begin(), f.g_equal.end(), true));
  d.u_nonzeros = static_cast<int>(f.U.nonZeros());
  return d;
}

nlohmann::json to_json(const Dimensions& d) {
  return {{"nx", d.nx},
          {"ny", d.ny},
          {"nxi", d.nxi},
          {"first_stage_rows", d.first_stage_rows},
          {"first_stage_equalities", d.first_stage_equalities},
          {"recourse_rows", d.recourse_rows},
          {"recourse_equalities", d.recourse_equalities},
          {"u_nonzeros", d.u_nonzeros}};
}

Vector stack(const Matrix& trajectory) {
  Vector out(trajectory.size());
  for (Eigen::Index t = 0; t < trajectory.rows(); ++t)
    for (Eigen::Index j = 0; j < trajectory.cols(); ++j) out(t * trajectory.cols() + j) = trajectory(t, j);
  return out;
}

Matrix unstack(const Vector& xi, int periods, int farms) {
  require(xi.size() == static_cast<Eigen::Index>(periods) * farms, ErrorCode::DimensionMismatch,
          "xi length must be periods * farms");
  Matrix out(periods, farms);
  for (int t = 0; t < periods; ++t)
    for (int j = 0; j < farms; ++j) out(t, j) = xi(t * farms + j);
  return out;
}

Matrix commitment_matrix(const MatrixForm& f, const Vector& x) {
  Matrix out(f.units, f.periods);
  for (int g = 0; g < f.units; ++g)
    for (int t = 0; t < f.periods; ++t) out(g, t) = std::round(x(f.u_col(g, t)));
  return out;
}

}  // namespace caus::dispatch
