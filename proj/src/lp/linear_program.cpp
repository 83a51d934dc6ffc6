#include "lp/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "core/error.hpp"

namespace caus::lp {

int LinearProgram::add_variable(double lower, double upper, double objective,
                                VarKind kind, std::string name) {
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  lower_.push_back(lower);
  upper_.push_back(upper);
  objective_.push_back(objective);
  kinds_.push_back(kind);
  var_names_.push_back(std::move(name));
  return num_variables() - 1;
}

int LinearProgram::add_row(RowSense sense, double rhs, std::string name) {
  senses_.push_back(sense);
  rhs_.push_back(rhs);
  row_names_.push_back(std::move(name));
  return num_rows() - 1;
}

int LinearProgram::add_row(std::span<const std::pair<int, double>> terms,
                           RowSense sense, double rhs, std::string name) {
  const int row = add_row(sense, rhs, std::move(name));
  for (const auto& [col, value] : terms) add_coefficient(row, col, value);
  return row;
}

void LinearProgram::add_coefficient(int row, int col, double value) {
  if (value == 0.0) return;
  triplets_.push_back({row, col, value});
}

int LinearProgram::append(const LinearProgram& block) {
  const int col_offset = num_variables();
  const int row_offset = num_rows();
  for (int j = 0; j < block.num_variables(); ++j) {
    add_variable(block.lower_[j], block.upper_[j], block.objective_[j],
                 block.kinds_[j], block.var_names_[j]);
  }
  for (int i = 0; i < block.num_rows(); ++i) {
    add_row(block.senses_[i], block.rhs_[i], block.row_names_[i]);
  }
  for (const auto& t : block.triplets_) {
    triplets_.push_back({t.row + row_offset, t.col + col_offset, t.value});
  }
  objective_offset_ += block.objective_offset_;
  return col_offset;
}

void LinearProgram::set_bounds(int col, double lower, double upper) {
  lower_.at(col) = lower;
  upper_.at(col) = upper;
}

int LinearProgram::num_binaries() const {
  return static_cast<int>(std::count(kinds_.begin(), kinds_.end(), VarKind::Binary));
}

std::vector<double> LinearProgram::row_activity(std::span<const double> point) const {
  require(static_cast<int>(point.size()) == num_variables(), ErrorCode::DimensionMismatch,
          "point length does not match the variable count");
  std::vector<double> activity(rhs_.size(), 0.0);
  for (const auto& t : triplets_) activity[t.row] += t.value * point[t.col];
  return activity;
}

double LinearProgram::evaluate_objective(std::span<const double> point) const {
  require(static_cast<int>(point.size()) == num_variables(), ErrorCode::DimensionMismatch,
          "point length does not match the variable count");
  double value = objective_offset_;
  for (std::size_t j = 0; j < point.size(); ++j) value += objective_[j] * point[j];
  return value;
}

void LinearProgram::validate() const {
  const int n = num_variables();
  const int m = num_rows();
  for (const auto& t : triplets_) {
    require(t.row >= 0 && t.row < m && t.col >= 0 && t.col < n, ErrorCode::InvalidArgument,
            "constraint coefficient index out of range");
    require(std::isfinite(t.value), ErrorCode::InvalidArgument,
            "non-finite constraint coefficient");
  }
  for (int j = 0; j < n; ++j) {
    require(std::isfinite(objective_[j]), ErrorCode::InvalidArgument,
            "non-finite objective coefficient");
    require(!std::isnan(lower_[j]) && !std::isnan(upper_[j]), ErrorCode::InvalidArgument,
            "NaN variable bound");
    require(lower_[j] != kInf && upper_[j] != -kInf, ErrorCode::InvalidArgument,
            "variable bound on the wrong side of infinity");
    if (kinds_[j] == VarKind::Binary) {
      require(lower_[j] >= 0.0 && upper_[j] <= 1.0, ErrorCode::InvalidArgument,
              "binary variable with bounds outside [0, 1]");
    }
  }
  for (int i = 0; i < m; ++i) {
    require(std::isfinite(rhs_[i]), ErrorCode::InvalidArgument, "non-finite right-hand side");
  }
}

const char* to_string(Status status) {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::Limit: return "limit";
  }
  return "unknown";
}

const char* to_string(Backend backend) {
  return backend == Backend::Highs ? "highs" : "exact";
}

Backend parse_backend(std::string_view name) {
  if (name == "highs") return Backend::Highs;
  if (name == "exact") return Backend::ExactRational;
  fail(ErrorCode::BackendUnavailable, "unknown LP backend '" + std::string(name) + "'");
}

Backend default_backend() {
  const char* env = std::getenv("CAUS_LP_BACKEND");
  if (env == nullptr || *env == '\0') return Backend::Highs;
  return parse_backend(env);
}

SolveResult solve(const LinearProgram& problem, const SolveOptions& options) {
  problem.validate();
  SolveResult result = options.backend == Backend::Highs
                           ? detail::solve_highs(problem, options)
                           : detail::solve_exact(problem);
  if (options.verify && result.optimal()) {
    const auto report = check_feasibility(problem, result.primal, options.feasibility_tolerance);
    if (!report.rows.empty() || !report.bounds.empty()) {
      fail(ErrorCode::NumericalFailure,
           "backend returned an optimal point violating constraints by " +
               std::to_string(report.max_violation));
    }
  }
  return result;
}

ViolationReport check_feasibility(const LinearProgram& problem, std::span<const double> point,
                                  double tolerance) {
  require(static_cast<int>(point.size()) == problem.num_variables(),
          ErrorCode::DimensionMismatch, "point length does not match the variable count");
  ViolationReport report;
  const auto activity = problem.row_activity(point);

  // Tolerance is relative to the largest term in the row; Big-M rows carry
  // large coefficients.
  std::vector<double> row_scale(problem.num_rows(), 0.0);
  for (const auto& t : problem.triplets()) {
    row_scale[t.row] = std::max(row_scale[t.row], std::abs(t.value * point[t.col]));
  }

  for (int i = 0; i < problem.num_rows(); ++i) {
    const double rhs = problem.rhs()[i];
    double violation = 0.0;
    switch (problem.row_senses()[i]) {
      case RowSense::LessEqual: violation = activity[i] - rhs; break;
      case RowSense::GreaterEqual: violation = rhs - activity[i]; break;
      case RowSense::Equal: violation = std::abs(activity[i] - rhs); break;
    }
    violation = std::max(violation, 0.0);
    report.max_violation = std::max(report.max_violation, violation);
    const double scale = std::max({1.0, std::abs(rhs), row_scale[i]});
    if (violation > tolerance * scale) report.rows.push_back({i, violation});
  }
  for (int j = 0; j < problem.num_variables(); ++j) {
    const double violation =
        std::max({problem.lower()[j] - point[j], point[j] - problem.upper()[j], 0.0});
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > tolerance * std::max(1.0, std::abs(point[j]))) {
      report.bounds.push_back({j, violation});
    }
  }
  return report;
}

double dual_objective(const LinearProgram& problem, const SolveResult& result) {
  require(result.row_duals.size() == static_cast<std::size_t>(problem.num_rows()) &&
              result.column_duals.size() == static_cast<std::size_t>(problem.num_variables()),
          ErrorCode::InvalidArgument, "result carries no duals");
  double value = problem.objective_offset();
  for (int i = 0; i < problem.num_rows(); ++i) value += result.row_duals[i] * problem.rhs()[i];
  for (int j = 0; j < problem.num_variables(); ++j) {
    const double r = result.column_duals[j];
    if (r == 0.0) continue;
    const double lo = problem.lower()[j];
    const double hi = problem.upper()[j];
    const double x = result.primal[j];
    double bound = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      bound = std::abs(x - lo) <= std::abs(x - hi) ? lo : hi;
    } else if (std::isfinite(lo)) {
      bound = lo;
    } else if (std::isfinite(hi)) {
      bound = hi;
    }
    value += r * bound;
  }
  return value;
}

namespace {

std::string format_number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& token, int line) {
  if (token == "inf" || token == "+inf") return kInf;
  if (token == "-inf") return -kInf;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line) + ": expected a number, got '" + token + "'");
  }
  return v;
}

std::string sanitize(const std::string& name, char prefix, int index) {
  if (name.empty()) return prefix + std::to_string(index);
  std::string out = name;
  for (char& c : out) {
    if (c == ' ' || c == '\t' || c == ':') c = '_';
  }
  return out;
}

}  // namespace

std::string to_text(const LinearProgram& problem) {
  std::ostringstream out;
  out << "caus-lp 1\n";
  out << "objective " << (problem.sense() == Sense::Maximize ? "max" : "min") << ' '
      << format_number(problem.objective_offset()) << '\n';
  for (int j = 0; j < problem.num_variables(); ++j) {
    out << "var " << j << ' ' << sanitize(problem.variable_names()[j], 'x', j) << ' '
        << (problem.kinds()[j] == VarKind::Binary ? 'B' : 'C') << ' '
        << format_number(problem.lower()[j]) << ' ' << format_number(problem.upper()[j]) << ' '
        << format_number(problem.objective()[j]) << '\n';
  }
  std::vector<std::vector<std::pair<int, double>>> rows(problem.num_rows());
  for (const auto& t : problem.triplets()) rows[t.row].emplace_back(t.col, t.value);
  for (int i = 0; i < problem.num_rows(); ++i) {
    const char sense = problem.row_senses()[i] == RowSense::LessEqual      ? 'L'
                       : problem.row_senses()[i] == RowSense::GreaterEqual ? 'G'
                                                                           : 'E';
    out << "row " << i << ' ' << sanitize(problem.row_names()[i], 'r', i) << ' ' << sense << ' '
        << format_number(problem.rhs()[i]);
    for (const auto& [col, value] : rows[i]) out << ' ' << col << ':' << format_number(value);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

LinearProgram from_text(std::string_view text) {
  LinearProgram problem;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header = false;
  bool finished = false;
  auto parse_fail = [&](const std::string& what) {
    fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream tokens(line);
    std::string keyword;
    tokens >> keyword;
    if (!header) {
      int version = 0;
      if (keyword != "caus-lp" || !(tokens >> version) || version != 1) {
        parse_fail("missing 'caus-lp 1' header");
      }
      header = true;
      continue;
    }
    if (keyword == "objective") {
      std::string sense, offset;
      tokens >> sense >> offset;
      if (sense != "min" && sense != "max") parse_fail("objective sense must be min or max");
      problem.set_sense(sense == "max" ? Sense::Maximize : Sense::Minimize);
      problem.set_objective_offset(parse_number(offset, line_no));
    } else if (keyword == "var") {
      int index = -1;
      std::string name, kind, lo, hi, obj;
      if (!(tokens >> index >> name >> kind >> lo >> hi >> obj)) parse_fail("truncated var line");
      if (index != problem.num_variables()) parse_fail("variables must be listed in order");
      if (kind != "C" && kind != "B") parse_fail("variable kind must be C or B");
      problem.add_variable(parse_number(lo, line_no), parse_number(hi, line_no),
                           parse_number(obj, line_no),
                           kind == "B" ? VarKind::Binary : VarKind::Continuous, name);
    } else if (keyword == "row") {
      int index = -1;
      std::string name, sense, rhs;
      if (!(tokens >> index >> name >> sense >> rhs)) parse_fail("truncated row line");
      if (index != problem.num_rows()) parse_fail("rows must be listed in order");
      RowSense row_sense;
      if (sense == "L") row_sense = RowSense::LessEqual;
      else if (sense == "G") row_sense = RowSense::GreaterEqual;
      else if (sense == "E") row_sense = RowSense::Equal;
      else parse_fail("row sense must be L, G or E");
      const int row = problem.add_row(row_sense, parse_number(rhs, line_no), name);
      std::string term;
      while (tokens >> term) {
        const auto colon = term.find(':');
        if (colon == std::string::npos) parse_fail("coefficient must be col:value");
        const int col = std::atoi(term.substr(0, colon).c_str());
        if (col < 0 || col >= problem.num_variables()) parse_fail("column index out of range");
        problem.add_coefficient(row, col, parse_number(term.substr(colon + 1), line_no));
      }
    } else if (keyword == "end") {
      finished = true;
      break;
    } else {
      parse_fail("unknown keyword '" + keyword + "'");
    }
  }
  if (!header) fail(ErrorCode::ParseError, "empty LP text");
  if (!finished) fail(ErrorCode::ParseError, "missing 'end' line");
  return problem;
}

}  // namespace caus::lp
