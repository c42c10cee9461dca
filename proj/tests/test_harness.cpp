#include <gtest/gtest.h>
#include <vector>

#include "degenbranch/config_io.hpp"
#include "degenbranch/error.hpp"
#include "degenbranch/harness.hpp"
#include "degenbranch/report.hpp"

using namespace degenbranch;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.name = "small";
  c.alphas = {2.0 / 3.0};
  c.n_schedule = {4, 8};
  c.replicates = 120;
  c.t_grid = {0.5, 1.0};
  c.box.max_expected_roots = 64;
  c.master_seed = 77;
  c.bootstrap_resamples = 200;
  return c;
}

std::string path_of(const ExperimentConfig& c) {
  try {
    validate(c);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST(Validate, AcceptsDefaults) { EXPECT_NO_THROW(validate(small_config())); }

TEST(Validate, NamesTheOffendingField) {
  auto c = small_config();
  c.kappa = 1.5;
  EXPECT_EQ(path_of(c), "$.kappa");
  try {
    validate(c);
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("open interval (0, 1); got 1.5"), std::string::npos);
  }
  c = small_config();
  c.alphas = {2.5};
  EXPECT_EQ(path_of(c), "$.alphas[0]");
  c = small_config();
  c.alphas = {2.0};
  EXPECT_EQ(path_of(c), "$.alphas");
  c = small_config();
  c.n_schedule = {8, 4};
  EXPECT_EQ(path_of(c), "$.n_schedule[1]");
  c = small_config();
  c.replicates = 10;
  EXPECT_EQ(path_of(c), "$.replicates");
  c = small_config();
  c.phi[0].widths = {0.0};
  EXPECT_EQ(path_of(c), "$.phi[0].widths[0]");
  c = small_config();
  c.delta = 0.3;
  EXPECT_EQ(path_of(c), "$.delta");
  c = small_config();
  c.t_grid = {0.5, 1.5};
  EXPECT_EQ(path_of(c), "$.t_grid[1]");
  c = small_config();
  c.alphas = {0.5};
  c.n_schedule = {1, 8};
  EXPECT_EQ(path_of(c), "$.n_schedule[0]");
}

TEST(BoxSchedule, CappedHalfWidth) {
  auto c = small_config();
  c.box.max_expected_roots = 1e9;
  EXPECT_NEAR(primary_half_width(c, 8.0), 8.0 * std::sqrt(8.0), 1e-9);
  c.box.max_expected_roots = 16;
  EXPECT_DOUBLE_EQ(primary_half_width(c, 8.0), 8.0);
}

TEST(RunExperiment, DeterministicAcrossWorkerCounts) {
  const auto c = small_config();
  auto run = [&](std::size_t workers) {
    std::vector<FluctuationSample> all;
    RunOptions opt;
    opt.workers = workers;
    opt.sink = [&](const std::vector<FluctuationSample>& s) { all.insert(all.end(), s.begin(), s.end()); };
    const auto report = run_experiment(c, opt);
    std::string text;
    for (const auto& s : all) text += sample_jsonl(s) + "\n";
    return std::make_pair(text, format_json(summary_to_json(report)));
  };
  const auto one = run(1);
  const auto four = run(4);
  EXPECT_EQ(one.first, four.first);
  EXPECT_EQ(one.second, four.second);
  // (2 boxes) x (2 scales) x 120 replicates x 2 times
  EXPECT_EQ(std::count(one.first.begin(), one.first.end(), '\n'), 960);
}

TEST(RunExperiment, ReportStructure) {
  const auto report = run_experiment(small_config());
  EXPECT_EQ(report.regime, Regime::Intermediate);
  EXPECT_DOUBLE_EQ(report.bar_alpha, 1.5);
  ASSERT_EQ(report.scales.size(), 2U);
  for (const auto& s : report.scales) {
    EXPECT_EQ(s.primary.cells.size(), 2U);
    EXPECT_DOUBLE_EQ(s.secondary.half_width, 0.5 * s.primary.half_width);
    EXPECT_GT(s.primary.cells.back().variance.variance, 0.0);
    EXPECT_EQ(s.refined_replicates, 6U);
    EXPECT_TRUE(s.normality.has_value());
  }
  EXPECT_EQ(report.exponent_fits.size(), 2U);
  EXPECT_FALSE(report.degenerate);
  EXPECT_EQ(report.prediction.constant_name, "C2");
  EXPECT_NEAR(report.prediction.exponent, 0.75, 1e-15);
  std::vector<std::string> names;
  for (const auto& g : report.gates) names.push_back(g.name);
  for (const char* n : {"mean_zero", "truncation_monotone", "variance_envelope", "scaling_exponent",
                        "gaussianity"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
}

TEST(RunExperiment, ZeroAmplitudeIsDegenerate) {
  auto c = small_config();
  c.phi[0].amplitude = 0.0;
  const auto report = run_experiment(c);
  EXPECT_TRUE(report.degenerate);
  ASSERT_EQ(report.gates.size(), 1U);
  EXPECT_EQ(report.gates[0].name, "non_degenerate");
  EXPECT_FALSE(report.all_gates_passed());
  for (const auto& s : report.scales) {
    for (const auto& cell : s.primary.cells) EXPECT_EQ(cell.variance.variance, 0.0);
  }
}
