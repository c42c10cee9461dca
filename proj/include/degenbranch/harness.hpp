#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "degenbranch/branching.hpp"
#include "degenbranch/fluctuation.hpp"
#include "degenbranch/limit_constants.hpp"
#include "degenbranch/stats.hpp"
#include "degenbranch/test_function.hpp"

namespace degenbranch {

struct GaussianSpec {
  std::vector<double> centers;
  std::vector<double> widths;
  double amplitude = 1.0;

  bool operator==(const GaussianSpec&) const = default;
};

TestFunction make_test_function(const std::vector<GaussianSpec>& terms);

// Box half-width L(n) = scale * n^(1/alpha_min) in every coordinate, shrunk
// so that the expected number of roots stays within max_expected_roots. The
// secondary box for the truncation diagnostic has half-width
// secondary_factor * L.
struct BoxSchedule {
  double scale = 1.0;
  double secondary_factor = 0.5;
  double max_expected_roots = 4096.0;

  bool operator==(const BoxSchedule&) const = default;
};

struct RefinementPolicy {
  // Every round(1 / fraction)-th replicate is also integrated at spacing / 2.
  double fraction = 0.05;
  // Largest accepted |value(Delta) - value(Delta/2)|, in normalized units.
  double tolerance = 0.25;

  bool operator==(const RefinementPolicy&) const = default;
};

// Acceptance thresholds. No convergence rate is known, so all of
// these are engineering choices.
struct GateSettings {
  double mean_zero_sigmas = 4.0;
  double slope_tolerance = 0.20;
  double max_abs_skewness = 0.3;
  double max_abs_excess_kurtosis = 0.6;
  double envelope_low = 0.1;
  double envelope_high = 10.0;

  bool operator==(const GateSettings&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<double> alphas;
  double gamma = 1.0;
  double theta = 1.0;
  double kappa = 0.5;
  std::vector<double> n_schedule;
  std::size_t replicates = 1000;
  std::vector<GaussianSpec> phi{{{0.0}, {1.0}, 1.0}};
  std::vector<double> t_grid{0.25, 0.5, 0.75, 1.0};
  BoxSchedule box;
  std::uint64_t master_seed = 1;
  double delta = 0.25;
  CenteringMode centering_mode = CenteringMode::TruncationCorrected;
  RefinementPolicy refinement;
  std::size_t bootstrap_resamples = kDefaultResamples;
  double intensity = 1.0;
  std::size_t population_cap = kDefaultPopulationCap;
  GateSettings gates;

  bool operator==(const ExperimentConfig&) const = default;
};

// Throws ConfigError with a "$.field" path for the first violated rule.
void validate(const ExperimentConfig& config);

double primary_half_width(const ExperimentConfig& config, double n);

struct CellSummary {
  double t = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double mean_se = 0.0;
  // Of the normalized statistic <X_n(t), phi>.
  VarianceEstimate variance;
  // Integral of the centering over [0, n t].
  double centering_integral = 0.0;
};

struct BoxSummary {
  double half_width = 0.0;
  std::vector<CellSummary> cells;
  // Pearson correlation between the t_grid columns.
  std::vector<std::vector<double>> correlation;
};

struct ScaleSummary {
  double n = 0.0;
  double delta_n = 0.0;
  double fn = 0.0;
  BoxSummary primary;
  BoxSummary secondary;
  double mean_roots = 0.0;
  double mean_particles = 0.0;
  std::size_t refined_replicates = 0;
  std::size_t flagged_replicates = 0;
  double max_refinement_gap = 0.0;
  std::optional<NormalityResult> normality;
};

struct Prediction {
  double exponent = 0.0;
  // "C1", "C2" or "large_dim_covariance".
  std::string constant_name;
  std::optional<ConstantResult> constant;
  // C^2 (int phi)^2, or the large-dimension covariance of phi with itself.
  double limit_variance = 0.0;
  std::string provenance;
};

struct GateResult {
  std::string name;
  bool passed = false;
  bool enforced = true;
  std::string detail;
};

struct SummaryReport {
  ExperimentConfig config;
  Regime regime = Regime::Intermediate;
  double bar_alpha = 0.0;
  Prediction prediction;
  std::vector<ScaleSummary> scales;
  // Fit of the unnormalized variance F_n^2 Var<X_n(t), phi> per t.
  std::vector<std::optional<ExponentFit>> exponent_fits;
  std::optional<LogCorrectedFit> log_corrected_fit;
  bool degenerate = false;
  std::vector<GateResult> gates;

  bool all_gates_passed() const;
};

// Receives the samples of one scale, in (box, replicate, t) order, before
// the next scale starts.
using SampleSink = std::function<void(const std::vector<FluctuationSample>&)>;

struct RunOptions {
  std::size_t workers = 1;
  SampleSink sink;
};

SummaryReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Fills report.gates from the statistics already in the report.
void evaluate_gates(SummaryReport& report);

}  // namespace degenbranch
