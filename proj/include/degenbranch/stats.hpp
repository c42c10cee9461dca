#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "degenbranch/rng.hpp"

namespace degenbranch {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const { return lo <= x && x <= hi; }
};

double sample_mean(std::span<const double> x);
// Bessel-corrected.
double sample_variance(std::span<const double> x);

struct VarianceEstimate {
  double variance = 0.0;
  Interval ci;
  // Variance of each bootstrap resample, in draw order.
  std::vector<double> bootstrap;
};

inline constexpr std::size_t kDefaultResamples = 1000;

// Unbiased variance with a percentile bootstrap interval. Needs >= 30 samples.
VarianceEstimate estimate_variance(std::span<const double> samples, Stream& rng,
                                   std::size_t resamples = kDefaultResamples,
                                   double level = 0.95);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  // From the regression residuals; 0 when only two points are given.
  double stderr_slope = 0.0;
  double residual_se = 0.0;
  // Percentile interval of the slope refitted on paired bootstrap variances.
  std::optional<Interval> ci;
};

// Least-squares fit of log variance against log n. `bootstrap[i]` holds the
// bootstrap variances at ns[i]; all must have equal length.
ExponentFit scaling_exponent(std::span<const double> ns, std::span<const double> variances,
                             std::span<const std::vector<double>> bootstrap = {},
                             double level = 0.95);

// Fit of log V = a + kappa log n + log log n with only the intercept free
// (the shape of a variance growing like n^kappa ln n).
struct LogCorrectedFit {
  double intercept = 0.0;
  double residual_se = 0.0;
};

LogCorrectedFit fit_log_corrected(std::span<const double> ns, std::span<const double> variances,
                                  double kappa);

struct NormalityResult {
  double ks_statistic = 0.0;
  // Asymptotic Kolmogorov p-value. The normal's mean and variance are
  // estimated from the same samples, so this is conservative guidance.
  double p_value = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};

NormalityResult normality_test(std::span<const double> samples);

// P(sup |B(t)| > lambda) for a Brownian bridge.
double kolmogorov_survival(double lambda);

// Pearson correlation between columns (one column per time point, rows are
// matched replicates).
std::vector<std::vector<double>> cross_time_correlation(
    std::span<const std::vector<double>> columns);

}  // namespace degenbranch
