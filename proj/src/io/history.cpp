#include "io/history.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "core/error.hpp"

namespace caus::io {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void parse_fail(const std::string& source, int line, int column,
                             const std::string& what) {
  fail(ErrorCode::ParseError, source + ":" + std::to_string(line) + ":" + std::to_string(column) +
                                  ": " + what);
}

struct Field {
  std::string text;
  int column;  // 1-based character column
};

std::vector<Field> split(std::string_view line) {
  std::vector<Field> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    out.push_back({trim(line.substr(start, end - start)), static_cast<int>(start) + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const Field& f, const std::string& source, int line) {
  double v = 0.0;
  const char* begin = f.text.data();
  const char* end = begin + f.text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (f.text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    parse_fail(source, line, f.column, "expected a finite number, got '" + f.text + "'");
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

int History::periods() const {
  std::set<int> seen;
  for (const auto& s : samples) seen.insert(s.period);
  return static_cast<int>(seen.size());
}

History parse_history_csv(std::string_view text, const std::string& source) {
  History h;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    const auto fields = split(raw);
    if (!header_seen) {
      header_seen = true;
      if (fields.front().text != "period")
        parse_fail(source, line, fields.front().column, "first header field must be 'period'");
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto& name = fields[i].text;
        if (name == "covariate_" + std::to_string(h.n + 1) && h.m == 0) {
          ++h.n;
        } else if (name == "uncertainty_" + std::to_string(h.m + 1)) {
          ++h.m;
        } else {
          parse_fail(source, line, fields[i].column,
                     "unexpected header '" + name + "'; want covariate_i then uncertainty_j");
        }
      }
      if (h.n == 0 || h.m == 0)
        parse_fail(source, line, 1, "header needs at least one covariate and one uncertainty");
      continue;
    }
    const std::size_t want = 1 + h.n + h.m;
    if (fields.size() != want) {
      const int col = fields.size() > want ? fields[want].column
                                           : static_cast<int>(raw.size()) + 1;
      parse_fail(source, line, col,
                 "expected " + std::to_string(want) + " fields, got " + std::to_string(fields.size()));
    }
    gmm::Sample s;
    const double period = to_double(fields[0], source, line);
    if (period < 1.0 || period != std::floor(period))
      parse_fail(source, line, fields[0].column, "period must be a positive integer");
    s.period = static_cast<int>(period);
    s.covariate.resize(h.n);
    s.uncertainty.resize(h.m);
    for (int i = 0; i < h.n; ++i) s.covariate(i) = to_double(fields[1 + i], source, line);
    for (int j = 0; j < h.m; ++j) s.uncertainty(j) = to_double(fields[1 + h.n + j], source, line);
    h.samples.push_back(std::move(s));
  }
  if (!header_seen) parse_fail(source, 1, 1, "empty history file");
  if (h.samples.empty()) parse_fail(source, line + 1, 1, "history has no data rows");
  return h;
}

History read_history(const std::string& path) { return parse_history_csv(read_file(path), path); }

std::string to_csv(const History& h) {
  std::string out = "period";
  for (int i = 1; i <= h.n; ++i) out += ",covariate_" + std::to_string(i);
  for (int j = 1; j <= h.m; ++j) out += ",uncertainty_" + std::to_string(j);
  out += '\n';
  for (const auto& s : h.samples) {
    out += std::to_string(s.period);
    for (int i = 0; i < h.n; ++i) out += "," + format_double(s.covariate(i));
    for (int j = 0; j < h.m; ++j) out += "," + format_double(s.uncertainty(j));
    out += '\n';
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) fail(ErrorCode::MissingInput, "no such file: " + path);
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::IoError, "cannot read " + path);
  return buf.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    fail(ErrorCode::IoError, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

gmm::JointGmm synthetic_wind_model() {
  // Each regime: forecast f ~ N(mu_f, S_f), actual = slope * f + offset + e.
  struct Regime {
    double weight;
    Eigen::Vector2d mu_f;
    Eigen::Matrix2d s_f;
    double slope;
    double offset;
    Eigen::Matrix2d s_e;
  };
  Eigen::Matrix2d s_f;
  s_f << 144.0, 40.0, 40.0, 144.0;
  Eigen::Matrix2d e_low, e_high;
  e_low << 25.0, 5.0, 5.0, 25.0;
  e_high << 36.0, 6.0, 6.0, 36.0;
  const Regime regimes[] = {{0.5, {35.0, 30.0}, s_f, 0.8, 0.0, e_low},
                            {0.5, {70.0, 65.0}, s_f, 1.0, 6.0, e_high}};
  std::vector<gmm::GaussianComponent> comps;
  for (const auto& r : regimes) {
    gmm::GaussianComponent c;
    c.weight = r.weight;
    c.mean.resize(4);
    c.mean << r.mu_f, r.slope * r.mu_f.array() + r.offset;
    c.covariance = Matrix::Zero(4, 4);
    c.covariance.topLeftCorner(2, 2) = r.s_f;
    c.covariance.topRightCorner(2, 2) = r.slope * r.s_f;
    c.covariance.bottomLeftCorner(2, 2) = r.slope * r.s_f;
    c.covariance.bottomRightCorner(2, 2) = r.slope * r.slope * r.s_f + r.s_e;
    comps.push_back(std::move(c));
  }
  return gmm::JointGmm(2, 2, std::move(comps));
}

History synthetic_history(const gmm::JointGmm& model, int periods, int rows_per_period,
                          std::uint64_t seed) {
  require(periods >= 1 && rows_per_period >= 1, ErrorCode::InvalidArgument,
          "periods and rows per period must be positive");
  History h;
  h.n = model.n();
  h.m = model.m();
  for (int t = 1; t <= periods; ++t) {
    auto rows = gmm::sample_joint(model, rows_per_period, seed + static_cast<std::uint64_t>(t), t);
    for (auto& s : rows) h.samples.push_back(std::move(s));
  }
  return h;
}

}  // namespace caus::io
