#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gmm/gmm.hpp"

namespace caus::io {

/// Rows of a history CSV: header `period,covariate_1..n,uncertainty_1..m`.
struct History {
  int n = 0;
  int m = 0;
  std::vector<gmm::Sample> samples;

  int periods() const;
};

/// Throws ParseError naming the line and column of the first bad field.
History parse_history_csv(std::string_view text, const std::string& source = "history");
History read_history(const std::string& path);
std::string to_csv(const History& history);

/// Reads a whole file; MissingInput when it does not exist, IoError otherwise.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

std::string sha256_hex(std::string_view data);

/// Two wind regimes over (forecast, actual) for two farms; the forecasts
/// are the covariates. Used for demos and tests in place of field data.
gmm::JointGmm synthetic_wind_model();

/// `rows_per_period` joint draws for each of `periods` periods.
History synthetic_history(const gmm::JointGmm& model, int periods, int rows_per_period,
                          std::uint64_t seed);

}  // namespace caus::io
