#include <cmath>
#include <filesystem>
#include <fstream>
#include <gtest/gtest.h>
#include <limits>

#include "degenbranch/config_io.hpp"
#include "degenbranch/error.hpp"
#include "degenbranch/report.hpp"

using namespace degenbranch;

namespace {

const char* kMinimal = R"({
  "alphas": [0.66666666666666663],
  "gamma": 1.0,
  "theta": 1.0,
  "kappa": 0.5,
  "n_schedule": [8, 16],
  "replicates": 200,
  "master_seed": 5
})";

std::string error_path(std::string_view text) {
  try {
    parse_config_text(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST(ConfigIo, MinimalDocumentUsesDefaults) {
  const auto c = parse_config_text(kMinimal);
  EXPECT_EQ(c.alphas, std::vector<double>{2.0 / 3.0});
  EXPECT_EQ(c.replicates, 200U);
  EXPECT_EQ(c.master_seed, 5U);
  EXPECT_EQ(c.t_grid, (std::vector<double>{0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(c.centering_mode, CenteringMode::TruncationCorrected);
}

TEST(ConfigIo, RoundTrip) {
  auto c = parse_config_text(kMinimal);
  c.name = "round trip";
  c.phi = {{{0.1}, {0.7}, 2.0}, {{-1.0 / 3.0}, {1.3}, -0.5}};
  c.centering_mode = CenteringMode::ExactInfinite;
  c.box.max_expected_roots = 1234;
  c.gates.max_abs_skewness = 0.25;
  const auto text = format_json(config_to_json(c));
  EXPECT_EQ(parse_config_text(text), c);
}

TEST(ConfigIo, ShippedConfigsParse) {
  for (const char* name : {"intermediate.json", "critical.json"}) {
    EXPECT_NO_THROW(load_config(std::filesystem::path(DEGENBRANCH_CONFIG_DIR) / name)) << name;
  }
}

TEST(ConfigIo, Errors) {
  auto with = [](const std::string& extra) {
    std::string s = kMinimal;
    s.insert(s.rfind('}'), "," + extra);
    return s;
  };
  EXPECT_EQ(error_path(with(R"("bogus": 1)")), "$.bogus");
  EXPECT_EQ(error_path(with(R"("box": {"scale": 1, "extra": 2})")), "$.box.extra");
  EXPECT_EQ(error_path(with(R"("centering_mode": "Sideways")")), "$.centering_mode");
  EXPECT_EQ(error_path(R"({"gamma": 1})"), "$.alphas");
  EXPECT_EQ(error_path("{not json"), "$");
  std::string bad_kappa = kMinimal;
  bad_kappa.replace(bad_kappa.find("0.5"), 3, "1.5");
  EXPECT_EQ(error_path(bad_kappa), "$.kappa");
  try {
    parse_config_text(bad_kappa);
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()), "$.kappa: must lie in the open interval (0, 1); got 1.5");
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(FormatJson, SeventeenDigitsAndNull) {
  Json j = {{"x", 0.1}, {"y", std::numeric_limits<double>::quiet_NaN()}, {"v", {1.0, 2.5}}};
  const auto s = format_json(j, -1);
  EXPECT_NE(s.find("0.10000000000000001"), std::string::npos);
  EXPECT_NE(s.find("\"y\":null"), std::string::npos);
  const auto back = Json::parse(s);
  EXPECT_EQ(back["x"].get<double>(), 0.1);
  EXPECT_EQ(format_json(Json::parse(format_json(j))), format_json(j));
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto p = std::filesystem::temp_directory_path() / "degenbranch_sha_test.txt";
  std::ofstream(p) << "abc";
  EXPECT_EQ(sha256_file(p), sha256_hex("abc"));
  std::filesystem::remove(p);
}

TEST(SampleRecords, JsonlAndCsv) {
  FluctuationSample s;
  s.n = 16;
  s.t = 0.5;
  s.value = -0.25;
  s.replicate_id = 12;
  s.half_widths = {64.0};
  s.centering_mode = CenteringMode::TruncationCorrected;
  const Json j = Json::parse(sample_jsonl(s));
  EXPECT_EQ(j["n"].get<double>(), 16.0);
  EXPECT_EQ(j["t"].get<double>(), 0.5);
  EXPECT_EQ(j["replicate"].get<int>(), 12);
  EXPECT_EQ(j["value"].get<double>(), -0.25);
  EXPECT_EQ(j["L"].get<double>(), 64.0);
  EXPECT_EQ(j["centering_mode"].get<std::string>(), "TruncationCorrected");
  EXPECT_EQ(j["accuracy_flag"].get<bool>(), false);
  EXPECT_EQ(sample_jsonl(s).find('\n'), std::string::npos);
  const std::string header = sample_csv_header();
  const std::string row = sample_csv(s);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(RunWriter, WritesManifestSummaryAndSamples) {
  const auto dir = std::filesystem::temp_directory_path() / "degenbranch_writer_test";
  std::filesystem::remove_all(dir);
  auto c = parse_config_text(kMinimal);
  c.n_schedule = {4, 8};
  c.replicates = 100;
  c.t_grid = {0.5, 1.0};
  c.box.max_expected_roots = 32;
  c.bootstrap_resamples = 100;
  RunWriter writer(dir, SampleFormat::Jsonl, c, 1);
  {
    const Json m = Json::parse(std::ifstream(dir / "manifest.json"));
    EXPECT_FALSE(m["complete"].get<bool>());
  }
  RunOptions opt;
  opt.sink = [&](const std::vector<FluctuationSample>& s) { writer.write_samples(s); };
  const auto report = run_experiment(c, opt);
  writer.finish(report);
  const Json m = Json::parse(std::ifstream(dir / "manifest.json"));
  EXPECT_TRUE(m["complete"].get<bool>());
  const Json summary = Json::parse(std::ifstream(dir / "summary.json"));
  EXPECT_EQ(summary["all_gates_passed"].get<bool>(), report.all_gates_passed());
  EXPECT_EQ(summary["scales"].size(), 2U);
  std::ifstream samples(dir / "samples.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(samples, line); ++lines) ASSERT_NO_THROW(Json::parse(line));
  EXPECT_EQ(lines, 2U * 2U * 100U * 2U);
  EXPECT_TRUE(std::filesystem::exists(dir / "variances.csv"));
  std::filesystem::remove_all(dir);
}
