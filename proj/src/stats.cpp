#include "degenbranch/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "degenbranch/error.hpp"

namespace degenbranch {

namespace {

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + frac * (v[i + 1] - v[i]);
}

struct Line {
  double slope;
  double intercept;
  double stderr_slope;
  double residual_se;
};

Line least_squares(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  const double mx = sample_mean(x);
  const double my = sample_mean(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("regression needs at least two distinct abscissae");
  Line out{sxy / sxx, 0.0, 0.0, 0.0};
  out.intercept = my - out.slope * mx;
  if (m > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - out.intercept - out.slope * x[i];
      rss += r * r;
    }
    out.residual_se = std::sqrt(rss / static_cast<double>(m - 2));
    out.stderr_slope = out.residual_se / std::sqrt(sxx);
  }
  return out;
}

std::vector<double> logs_of_positive(std::span<const double> v, const char* what) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw DomainError(fmt::format("{} must be finite and > 0; entry {} is {}", what, i, v[i]));
    }
    out[i] = std::log(v[i]);
  }
  return out;
}

}  // namespace

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw DomainError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("variance needs at least two samples");
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

VarianceEstimate estimate_variance(std::span<const double> samples, Stream& rng,
                                   std::size_t resamples, double level) {
  if (samples.size() < 30) {
    throw DomainError(
        fmt::format("variance estimate needs >= 30 samples, got {}", samples.size()));
  }
  if (resamples < 2) throw DomainError("bootstrap needs at least two resamples");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  VarianceEstimate out;
  out.variance = sample_variance(samples);
  out.bootstrap.reserve(resamples);
  std::vector<double> draw(samples.size());
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& v : draw) v = samples[rng.index(samples.size())];
    out.bootstrap.push_back(sample_variance(draw));
  }
  const double tail = 0.5 * (1.0 - level);
  out.ci = {percentile(out.bootstrap, tail), percentile(out.bootstrap, 1.0 - tail)};
  return out;
}

ExponentFit scaling_exponent(std::span<const double> ns, std::span<const double> variances,
                             std::span<const std::vector<double>> bootstrap, double level) {
  if (ns.size() != variances.size()) throw DomainError("scaling_exponent: size mismatch");
  if (ns.size() < 2) throw DomainError("scaling_exponent needs at least two scales");
  const std::vector<double> lx = logs_of_positive(ns, "scale n");
  const std::vector<double> ly = logs_of_positive(variances, "variance");
  const Line line = least_squares(lx, ly);
  ExponentFit out{line.slope, line.intercept, line.stderr_slope, line.residual_se, std::nullopt};

  if (!bootstrap.empty()) {
    if (bootstrap.size() != ns.size()) throw DomainError("bootstrap table size mismatch");
    const std::size_t b_count = bootstrap.front().size();
    for (const auto& col : bootstrap) {
      if (col.size() != b_count) throw DomainError("bootstrap columns differ in length");
    }
    std::vector<double> slopes;
    slopes.reserve(b_count);
    std::vector<double> y(ns.size());
    for (std::size_t b = 0; b < b_count; ++b) {
      bool usable = true;
      for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(bootstrap[i][b] > 0.0)) {
          usable = false;
          break;
        }
        y[i] = std::log(bootstrap[i][b]);
      }
      if (usable) slopes.push_back(least_squares(lx, y).slope);
    }
    if (slopes.size() >= 2) {
      const double tail = 0.5 * (1.0 - level);
      out.ci = Interval{percentile(slopes, tail), percentile(slopes, 1.0 - tail)};
    }
  }
  return out;
}

LogCorrectedFit fit_log_corrected(std::span<const double> ns, std::span<const double> variances,
                                  double kappa) {
  if (ns.size() != variances.size()) throw DomainError("fit_log_corrected: size mismatch");
  if (ns.size() < 2) throw DomainError("fit_log_corrected needs at least two scales");
  const std::vector<double> ly = logs_of_positive(variances, "variance");
  std::vector<double> shape(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 1.0)) throw DomainError("log-corrected model needs n > 1");
    shape[i] = kappa * std::log(ns[i]) + std::log(std::log(ns[i]));
  }
  LogCorrectedFit out;
  double s = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) s += ly[i] - shape[i];
  out.intercept = s / static_cast<double>(ns.size());
  double rss = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double r = ly[i] - shape[i] - out.intercept;
    rss += r * r;
  }
  out.residual_se = std::sqrt(rss / static_cast<double>(ns.size() - 1));
  return out;
}

double kolmogorov_survival(double lambda) {
  if (!(lambda > 0.0)) return 1.0;
  constexpr double kPi = std::numbers::pi;
  if (lambda < 1.18) {
    // CDF = sqrt(2 pi)/lambda * sum_k exp(-(2k-1)^2 pi^2 / (8 lambda^2))
    double cdf = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double j = 2.0 * k - 1.0;
      cdf += std::exp(-j * j * kPi * kPi / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * kPi) / lambda * cdf, 0.0, 1.0);
  }
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

NormalityResult normality_test(std::span<const double> samples) {
  if (samples.size() < 100) {
    throw DomainError(fmt::format("normality test needs >= 100 samples, got {}", samples.size()));
  }
  const double n = static_cast<double>(samples.size());
  const double mean = sample_mean(samples);
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  for (double v : samples) {
    const double c = v - mean;
    m2 += c * c;
    m3 += c * c * c;
    m4 += c * c * c * c;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw DomainError("normality test: samples have zero variance");

  NormalityResult out;
  out.skewness = m3 / std::pow(m2, 1.5);
  out.excess_kurtosis = m4 / (m2 * m2) - 3.0;

  const double sd = std::sqrt(sample_variance(samples));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = 0.5 * std::erfc(-(sorted[i] - mean) / (sd * std::numbers::sqrt2));
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  out.ks_statistic = d;
  out.p_value = kolmogorov_survival(std::sqrt(n) * d);
  return out;
}

std::vector<std::vector<double>> cross_time_correlation(
    std::span<const std::vector<double>> columns) {
  if (columns.empty()) throw DomainError("correlation needs at least one column");
  const std::size_t rows = columns.front().size();
  if (rows < 2) throw DomainError("correlation needs at least two rows");
  std::vector<std::vector<double>> centered;
  std::vector<double> sums;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c].size() != rows) throw DomainError("correlation columns differ in length");
    const double m = sample_mean(columns[c]);
    std::vector<double> v(rows);
    double ss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      v[i] = columns[c][i] - m;
      ss += v[i] * v[i];
    }
    if (!(ss > 0.0)) throw DomainError(fmt::format("correlation column {} is constant", c));
    centered.push_back(std::move(v));
    sums.push_back(ss);
  }
  const std::size_t k = columns.size();
  std::vector<std::vector<double>> out(k, std::vector<double>(k, 1.0));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += centered[a][i] * centered[b][i];
      const double r = std::clamp(s / std::sqrt(sums[a] * sums[b]), -1.0, 1.0);
      out[a][b] = out[b][a] = r;
    }
  }
  return out;
}

}  // namespace degenbranch
