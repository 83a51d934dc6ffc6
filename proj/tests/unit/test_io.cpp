#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <set>

#include "core/error.hpp"
#include "io/history.hpp"
#include "io/pipeline.hpp"

using namespace caus;
using namespace caus::io;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("caus_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST(HistoryCsv, ParsesHeaderAndRows) {
  const auto h = parse_history_csv(
      "period,covariate_1,uncertainty_1,uncertainty_2\n1,0.5,2,3\n2, 1.5 ,4,5\n", "h.csv");
  EXPECT_EQ(h.n, 1);
  EXPECT_EQ(h.m, 2);
  ASSERT_EQ(h.samples.size(), 2u);
  EXPECT_EQ(h.samples[1].period, 2);
  EXPECT_EQ(h.samples[1].covariate(0), 1.5);
  EXPECT_EQ(h.samples[1].uncertainty(1), 5.0);
  EXPECT_EQ(h.periods(), 2);
}

TEST(HistoryCsv, BadNumberReportsLineAndColumn) {
  const std::string text = "period,covariate_1,uncertainty_1\n1,0.5,2\n1,abc,3\n";
  EXPECT_EQ(code_of([&] { parse_history_csv(text, "h.csv"); }), ErrorCode::ParseError);
  EXPECT_NE(message_of([&] { parse_history_csv(text, "h.csv"); }).find("h.csv:3:3:"),
            std::string::npos);
}

TEST(HistoryCsv, RaggedRow) {
  const std::string text = "period,covariate_1,uncertainty_1\n1,0.5\n";
  EXPECT_NE(message_of([&] { parse_history_csv(text, "h.csv"); }).find("h.csv:2:"),
            std::string::npos);
}

TEST(HistoryCsv, BadHeader) {
  const std::string text = "period,uncertainty_1,covariate_1\n1,2,3\n";
  EXPECT_EQ(code_of([&] { parse_history_csv(text, "h.csv"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([&] { parse_history_csv("", "h.csv"); }), ErrorCode::ParseError);
}

TEST(HistoryCsv, RoundTrip) {
  const auto h = synthetic_history(synthetic_wind_model(), 2, 20, 3);
  const auto back = parse_history_csv(to_csv(h), "mem");
  ASSERT_EQ(back.samples.size(), h.samples.size());
  for (std::size_t i = 0; i < h.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].covariate, h.samples[i].covariate);
    EXPECT_EQ(back.samples[i].uncertainty, h.samples[i].uncertainty);
  }
}

TEST(Files, MissingInput) {
  EXPECT_EQ(code_of([] { read_file("/nonexistent/definitely/not/here.csv"); }),
            ErrorCode::MissingInput);
}

TEST(Files, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ExitCodes, Distinct) {
  EXPECT_EQ(exit_code(ErrorCode::ParseError), 3);
  EXPECT_EQ(exit_code(ErrorCode::MissingInput), 4);
  EXPECT_EQ(exit_code(ErrorCode::IoError), 5);
  EXPECT_EQ(exit_code(ErrorCode::IterationLimit), 6);
  EXPECT_EQ(exit_code(ErrorCode::InvalidArgument), 11);
  std::set<int> seen;
  for (int c = 1; c <= static_cast<int>(ErrorCode::IoError); ++c)
    EXPECT_TRUE(seen.insert(exit_code(static_cast<ErrorCode>(c))).second) << c;
}

TEST(Pipeline, FitAndCalibrate) {
  TempDir dir;
  write_file(dir.file("history.csv"), to_csv(synthetic_history(synthetic_wind_model(), 2, 300, 5)));
  const auto fit = cmd_fit({{"history", dir.file("history.csv")}, {"k", 2}, {"seed", 0}});
  const auto& comps = fit.artifact.at("model").at("components");
  ASSERT_EQ(comps.size(), 2u);
  double total = 0.0;
  for (const auto& c : comps) total += c.at("weight").get<double>();
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(fit.artifact.at("inputs").at("history").at("sha256"),
            sha256_hex(read_file(dir.file("history.csv"))));
  write_file(dir.file("model.json"), fit.artifact.dump());

  const auto cal = cmd_calibrate({{"model", dir.file("model.json")},
                                  {"covariates", {{40, 35}, {60, 55}}},
                                  {"epsilon", 0.05},
                                  {"n_samples", 10000},
                                  {"seed", 1}});
  EXPECT_EQ(cal.artifact.at("kappa"), 9501);
  EXPECT_EQ(cal.artifact.at("radii").size(), 2u);
}

TEST(Pipeline, CommandsAreDeterministic) {
  TempDir dir;
  write_file(dir.file("history.csv"), to_csv(synthetic_history(synthetic_wind_model(), 2, 200, 5)));
  const nlohmann::json opts = {{"history", dir.file("history.csv")}, {"k", 2}, {"seed", 4}};
  EXPECT_EQ(strip_timing(cmd_fit(opts).artifact).dump(), strip_timing(cmd_fit(opts).artifact).dump());
  EXPECT_EQ(strip_timing(cmd_synth({{"periods", 2}, {"rows_per_period", 10}, {"seed", 1}}).artifact),
            strip_timing(cmd_synth({{"periods", 2}, {"rows_per_period", 10}, {"seed", 1}}).artifact));
}

TEST(Pipeline, MissingFileMapsToMissingInput) {
  EXPECT_EQ(code_of([] { cmd_fit({{"history", "/nonexistent/h.csv"}, {"k", 2}}); }),
            ErrorCode::MissingInput);
}

TEST(Pipeline, MalformedJsonMapsToParseError) {
  TempDir dir;
  write_file(dir.file("model.json"), "{\n  \"n\": 2,\n  oops\n}");
  const auto msg = message_of([&] {
    cmd_calibrate({{"model", dir.file("model.json")}, {"covariates", {{1, 2}}}});
  });
  EXPECT_NE(msg.find("model.json:3:"), std::string::npos) << msg;
}

TEST(Pipeline, StripTimingIsRecursive) {
  nlohmann::json a = {{"x", 1}, {"timing", 2}, {"inner", {{"timing", 3}, {"y", 4}}}};
  EXPECT_EQ(strip_timing(a), (nlohmann::json{{"x", 1}, {"inner", {{"y", 4}}}}));
}
