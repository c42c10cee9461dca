#include "degenbranch/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fmt/format.h>
#include <thread>

#include "degenbranch/error.hpp"
#include "degenbranch/rng.hpp"

namespace degenbranch {

namespace {

[[noreturn]] void rethrow_annotated(std::exception_ptr error, const std::string& where) {
  try {
    std::rethrow_exception(error);
  } catch (const NumericAccuracyError& e) {
    throw NumericAccuracyError(where + e.what(), e.achieved_bound());
  } catch (const PopulationExplosionError& e) {
    throw PopulationExplosionError(where + e.what());
  } catch (const UnsupportedRegimeError& e) {
    throw UnsupportedRegimeError(where + e.what());
  } catch (const DivergenceError& e) {
    throw DivergenceError(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  } catch (const std::exception& e) {
    throw Error(where + e.what());
  }
}

// Runs body(i) for i in [0, count) on `workers` threads. Indices are
// claimed in increasing order; after a failure no new index is claimed, so
// the lowest failing index is the same for every worker count.
template <class Body, class Where>
void parallel_for(std::size_t count, std::size_t workers, Body&& body, Where&& where) {
  if (count == 0) return;
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  auto work = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
        stop = true;
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, count);
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) rethrow_annotated(errors[i], where(i));
  }
}

std::string scale_tag(double n, std::string_view purpose) {
  return fmt::format("n={:.17g}/{}", n, purpose);
}

Prediction make_prediction(const ExperimentConfig& config, const StableIndexVector& indices,
                           const TestFunction& phi) {
  Prediction p;
  const double mass = phi.integral();
  switch (indices.regime()) {
    case Regime::Critical:
      p.exponent = config.kappa;
      p.constant_name = "C1";
      p.constant = c1(indices, config.gamma, config.theta, config.kappa);
      p.limit_variance = p.constant->value * p.constant->value * mass * mass;
      p.provenance = "c1: closed-form cubic integral, cross-checked by direct quadrature";
      break;
    case Regime::Intermediate:
      p.exponent = (3.0 - indices.bar_alpha()) * config.kappa;
      p.constant_name = "C2";
      p.constant = c2(indices, config.gamma, config.theta);
      p.limit_variance = p.constant->value * p.constant->value * mass * mass;
      p.provenance = "c2: reduced nested quadrature, cross-checked by the exchanged-order form";
      break;
    case Regime::Large:
      p.exponent = config.kappa;
      p.constant_name = "large_dim_covariance";
      p.limit_variance = large_dim_covariance(phi, phi, indices, config.gamma, config.theta);
      p.provenance = "large_dim_covariance: Fourier-side quadrature";
      break;
    case Regime::Subcritical:
      throw UnsupportedRegimeError("no limit constant for bar_alpha <= 1");
  }
  p.limit_variance *= config.intensity;
  return p;
}

std::optional<std::size_t> find_t(const std::vector<double>& grid, double t) {
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (std::abs(grid[j] - t) < 1e-12) return j;
  }
  return std::nullopt;
}

}  // namespace

TestFunction make_test_function(const std::vector<GaussianSpec>& terms) {
  if (terms.empty()) throw DomainError("test function needs at least one term");
  std::vector<GaussianTestFunction> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.emplace_back(t.centers, t.widths, t.amplitude);
  return TestFunction(std::move(out));
}

void validate(const ExperimentConfig& c) {
  auto fail = [](std::string path, const std::string& msg) { throw ConfigError(path, msg); };
  if (c.alphas.empty()) fail("$.alphas", "needs at least one stability index");
  for (std::size_t k = 0; k < c.alphas.size(); ++k) {
    if (!(c.alphas[k] > 0.0 && c.alphas[k] <= 2.0)) {
      fail(fmt::format("$.alphas[{}]", k),
           fmt::format("must lie in the interval (0, 2]; got {}", c.alphas[k]));
    }
  }
  const StableIndexVector indices(c.alphas);
  if (indices.regime() == Regime::Subcritical) {
    fail("$.alphas", fmt::format("bar_alpha = sum 1/alpha_k must exceed 1; got {}",
                                 indices.bar_alpha()));
  }
  if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) fail("$.gamma", "must be > 0");
  if (!(c.theta > 0.0) || !std::isfinite(c.theta)) fail("$.theta", "must be > 0");
  if (!(c.kappa > 0.0 && c.kappa < 1.0)) {
    fail("$.kappa", fmt::format("must lie in the open interval (0, 1); got {}", c.kappa));
  }
  if (c.n_schedule.empty()) fail("$.n_schedule", "needs at least one scale");
  const double n_min = indices.regime() == Regime::Critical ? 2.0 : 1.0;
  for (std::size_t i = 0; i < c.n_schedule.size(); ++i) {
    const double n = c.n_schedule[i];
    const std::string path = fmt::format("$.n_schedule[{}]", i);
    if (!(n >= n_min) || !std::isfinite(n)) {
      fail(path, fmt::format("must be >= {} in this regime; got {}", n_min, n));
    }
    if (i > 0 && !(n > c.n_schedule[i - 1])) fail(path, "scales must be strictly increasing");
    if (!(c.theta * std::pow(n, -c.kappa) < c.gamma)) {
      fail(path, "delta_n = theta n^-kappa must stay below gamma");
    }
  }
  if (c.replicates < 100) {
    fail("$.replicates", fmt::format("must be >= 100; got {}", c.replicates));
  }
  if (c.phi.empty()) fail("$.phi", "needs at least one Gaussian term");
  for (std::size_t i = 0; i < c.phi.size(); ++i) {
    const auto& g = c.phi[i];
    if (g.centers.size() != c.alphas.size()) {
      fail(fmt::format("$.phi[{}].centers", i), "length must equal the number of alphas");
    }
    if (g.widths.size() != c.alphas.size()) {
      fail(fmt::format("$.phi[{}].widths", i), "length must equal the number of alphas");
    }
    for (std::size_t k = 0; k < g.widths.size(); ++k) {
      if (!(g.widths[k] > 0.0) || !std::isfinite(g.widths[k])) {
        fail(fmt::format("$.phi[{}].widths[{}]", i, k), "must be finite and > 0");
      }
      if (!std::isfinite(g.centers[k])) {
        fail(fmt::format("$.phi[{}].centers[{}]", i, k), "must be finite");
      }
    }
    if (!std::isfinite(g.amplitude)) fail(fmt::format("$.phi[{}].amplitude", i), "must be finite");
  }
  if (c.t_grid.empty()) fail("$.t_grid", "needs at least one time");
  for (std::size_t j = 0; j < c.t_grid.size(); ++j) {
    const std::string path = fmt::format("$.t_grid[{}]", j);
    if (!(c.t_grid[j] > 0.0 && c.t_grid[j] <= 1.0)) {
      fail(path, fmt::format("must lie in (0, 1]; got {}", c.t_grid[j]));
    }
    if (j > 0 && !(c.t_grid[j] > c.t_grid[j - 1])) fail(path, "times must be strictly increasing");
  }
  if (!(c.delta > 0.0) || !std::isfinite(c.delta)) fail("$.delta", "must be > 0");
  for (double n : c.n_schedule) {
    for (double t : c.t_grid) {
      const double k = std::round(n * t / c.delta);
      if (std::abs(k * c.delta - n * t) > 1e-9 * n * t) {
        fail("$.delta", fmt::format("n t = {} is not a multiple of delta = {}", n * t, c.delta));
      }
    }
  }
  if (!(c.box.scale > 0.0) || !std::isfinite(c.box.scale)) fail("$.box.scale", "must be > 0");
  if (!(c.box.secondary_factor > 0.0 && c.box.secondary_factor < 1.0)) {
    fail("$.box.secondary_factor", "must lie in the open interval (0, 1)");
  }
  if (!(c.box.max_expected_roots >= 1.0)) fail("$.box.max_expected_roots", "must be >= 1");
  if (!(c.refinement.fraction >= 0.0 && c.refinement.fraction <= 1.0)) {
    fail("$.refinement.fraction", "must lie in [0, 1]");
  }
  if (!(c.refinement.tolerance > 0.0)) fail("$.refinement.tolerance", "must be > 0");
  if (c.bootstrap_resamples < 100) fail("$.bootstrap_resamples", "must be >= 100");
  if (!(c.intensity > 0.0) || !std::isfinite(c.intensity)) fail("$.intensity", "must be > 0");
  if (c.population_cap < 1) fail("$.population_cap", "must be >= 1");
  const auto& g = c.gates;
  if (!(g.mean_zero_sigmas > 0.0)) fail("$.gates.mean_zero_sigmas", "must be > 0");
  if (!(g.slope_tolerance > 0.0)) fail("$.gates.slope_tolerance", "must be > 0");
  if (!(g.max_abs_skewness > 0.0)) fail("$.gates.max_abs_skewness", "must be > 0");
  if (!(g.max_abs_excess_kurtosis > 0.0)) fail("$.gates.max_abs_excess_kurtosis", "must be > 0");
  if (!(g.envelope_low > 0.0 && g.envelope_low < g.envelope_high)) {
    fail("$.gates.envelope_low", "must satisfy 0 < envelope_low < envelope_high");
  }
}

double primary_half_width(const ExperimentConfig& config, double n) {
  const StableIndexVector indices(config.alphas);
  const double d = static_cast<double>(indices.dim());
  const double natural = config.box.scale * std::pow(n, 1.0 / indices.alpha_min());
  // intensity * (2L)^d <= max_expected_roots
  const double budget =
      0.5 * std::pow(config.box.max_expected_roots / config.intensity, 1.0 / d);
  return std::min(natural, budget);
}

bool SummaryReport::all_gates_passed() const {
  return std::all_of(gates.begin(), gates.end(),
                     [](const GateResult& g) { return g.passed || !g.enforced; });
}

SummaryReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  const StableIndexVector indices(config.alphas);
  const TestFunction phi = make_test_function(config.phi);
  const std::size_t d = indices.dim();
  const std::size_t J = config.t_grid.size();
  const std::size_t M = config.replicates;
  const std::size_t stride =
      config.refinement.fraction > 0.0
          ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                         std::llround(1.0 / config.refinement.fraction)))
          : 0;

  SummaryReport report;
  report.config = config;
  report.regime = indices.regime();
  report.bar_alpha = indices.bar_alpha();
  report.prediction = make_prediction(config, indices, phi);

  for (std::size_t si = 0; si < config.n_schedule.size(); ++si) {
    const double n = config.n_schedule[si];
    const ModelParams params(config.gamma, config.theta, config.kappa, n);
    const double fn = scaling_Fn(params, indices);
    const double half = primary_half_width(config, n);
    const SimulationDomain boxes[2] = {
        SimulationDomain(std::vector<double>(d, half), config.intensity),
        SimulationDomain(std::vector<double>(d, config.box.secondary_factor * half),
                         config.intensity)};
    std::vector<double> horizons(J);
    for (std::size_t j = 0; j < J; ++j) {
      horizons[j] = std::round(n * config.t_grid[j] / config.delta) * config.delta;
    }
    const std::string where_n = fmt::format("n = {}: ", n);

    // Centering integrals over [T_{j-1}, T_j] for both boxes.
    std::vector<double> segment(2 * J);
    parallel_for(
        2 * J, options.workers,
        [&](std::size_t task) {
          const std::size_t b = task / J;
          const std::size_t j = task % J;
          const double lo = j == 0 ? 0.0 : horizons[j - 1];
          segment[task] = centering_integral(lo, horizons[j], phi, params, boxes[b], indices,
                                             config.centering_mode);
        },
        [&](std::size_t) { return where_n + "centering: "; });
    std::vector<double> centering(2 * J);
    for (std::size_t b = 0; b < 2; ++b) {
      double acc = 0.0;
      for (std::size_t j = 0; j < J; ++j) {
        acc += segment[b * J + j];
        centering[b * J + j] = acc;
      }
    }

    std::vector<ReplicateOccupation> reps(M);
    parallel_for(
        M, options.workers,
        [&](std::size_t r) {
          ReplicatePlan plan;
          plan.indices = &indices;
          plan.rates = params.rates();
          plan.phi = &phi;
          plan.primary = boxes[0];
          plan.secondary = boxes[1];
          plan.grid = OccupationGrid{config.delta, stride != 0 && r % stride == 0, horizons};
          plan.population_cap = config.population_cap;
          Stream field = derive_stream(config.master_seed, r, scale_tag(n, "field"));
          Stream branching = derive_stream(config.master_seed, r, scale_tag(n, "branching"));
          Stream motion = derive_stream(config.master_seed, r, scale_tag(n, "motion"));
          reps[r] = simulate_occupation(plan, field, branching, motion);
        },
        [&](std::size_t r) { return fmt::format("{}replicate {}: ", where_n, r); });

    ScaleSummary scale;
    scale.n = n;
    scale.delta_n = params.delta_n();
    scale.fn = fn;
    std::vector<FluctuationSample> samples;
    samples.reserve(2 * M * J);
    // values[b][j][r]
    std::vector<std::vector<std::vector<double>>> values(
        2, std::vector<std::vector<double>>(J, std::vector<double>(M)));
    double roots = 0.0;
    double particles = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t r = 0; r < M; ++r) {
        const ReplicateOccupation& rep = reps[r];
        const OccupationIntegrals& occ = b == 0 ? rep.primary : *rep.secondary;
        const bool refined = stride != 0 && r % stride == 0;
        if (b == 0) {
          roots += static_cast<double>(rep.roots);
          particles += static_cast<double>(rep.particles);
          if (refined) ++scale.refined_replicates;
        }
        bool flagged = false;
        for (std::size_t j = 0; j < J; ++j) {
          FluctuationSample s;
          s.n = n;
          s.t = config.t_grid[j];
          s.value = (occ.coarse[j] - centering[b * J + j]) / fn;
          s.replicate_id = r;
          s.seed = config.master_seed;
          s.half_widths = boxes[b].half_widths();
          s.centering_mode = config.centering_mode;
          if (refined) {
            s.refinement_gap = std::abs(occ.coarse[j] - occ.fine[j]) / fn;
            s.accuracy_flag = *s.refinement_gap > config.refinement.tolerance;
            flagged = flagged || s.accuracy_flag;
            scale.max_refinement_gap = std::max(scale.max_refinement_gap, *s.refinement_gap);
          }
          values[b][j][r] = s.value;
          samples.push_back(std::move(s));
        }
        if (b == 0 && flagged) ++scale.flagged_replicates;
      }
    }
    scale.mean_roots = roots / static_cast<double>(M);
    scale.mean_particles = particles / static_cast<double>(M);
    if (options.sink) options.sink(samples);

    for (std::size_t b = 0; b < 2; ++b) {
      BoxSummary& box = b == 0 ? scale.primary : scale.secondary;
      box.half_width = boxes[b].half_widths()[0];
      bool constant_column = false;
      for (std::size_t j = 0; j < J; ++j) {
        CellSummary cell;
        cell.t = config.t_grid[j];
        cell.mean = sample_mean(values[b][j]);
        cell.sd = std::sqrt(sample_variance(values[b][j]));
        cell.mean_se = cell.sd / std::sqrt(static_cast<double>(M));
        cell.centering_integral = centering[b * J + j];
        Stream boot = derive_stream(config.master_seed, si * 2 * J + b * J + j,
                                    scale_tag(n, "bootstrap"));
        cell.variance = estimate_variance(values[b][j], boot, config.bootstrap_resamples);
        constant_column = constant_column || cell.variance.variance == 0.0;
        box.cells.push_back(std::move(cell));
      }
      if (!constant_column) box.correlation = cross_time_correlation(values[b]);
    }
    if (scale.primary.cells.back().variance.variance > 0.0) {
      scale.normality = normality_test(values[0][J - 1]);
    } else {
      report.degenerate = true;
    }
    report.scales.push_back(std::move(scale));
  }

  if (!report.degenerate && report.scales.size() >= 2) {
    std::vector<double> ns;
    for (const auto& s : report.scales) ns.push_back(s.n);
    for (std::size_t j = 0; j < J; ++j) {
      std::vector<double> v;
      std::vector<std::vector<double>> boot;
      for (const auto& s : report.scales) {
        const double f2 = s.fn * s.fn;
        const VarianceEstimate& e = s.primary.cells[j].variance;
        v.push_back(f2 * e.variance);
        boot.emplace_back();
        for (double x : e.bootstrap) boot.back().push_back(f2 * x);
      }
      report.exponent_fits.push_back(scaling_exponent(ns, v, boot));
      if (j + 1 == J && report.regime == Regime::Critical) {
        report.log_corrected_fit = fit_log_corrected(ns, v, config.kappa);
      }
    }
  }
  evaluate_gates(report);
  return report;
}

void evaluate_gates(SummaryReport& report) {
  report.gates.clear();
  const ExperimentConfig& c = report.config;
  const GateSettings& g = c.gates;
  auto add = [&](std::string name, bool passed, bool enforced, std::string detail) {
    report.gates.push_back({std::move(name), passed, enforced, std::move(detail)});
  };
  if (report.scales.empty()) {
    add("non_degenerate", false, true, "no scales were simulated");
    return;
  }
  if (report.degenerate) {
    add("non_degenerate", false, true,
        "normalized samples have zero variance at some scale (e.g. phi amplitude 0); "
        "statistical gates skipped");
    return;
  }
  const std::size_t J = c.t_grid.size();
  const auto& first = report.scales.front();
  const auto& last = report.scales.back();

  {
    double worst = 0.0;
    std::string at = "none";
    for (const auto& s : report.scales) {
      for (const BoxSummary* box : {&s.primary, &s.secondary}) {
        for (const auto& cell : box->cells) {
          const double ratio = std::abs(cell.mean) / cell.mean_se;
          if (ratio > worst) {
            worst = ratio;
            at = fmt::format("n = {}, t = {}, L = {}", s.n, cell.t, box->half_width);
          }
        }
      }
    }
    const bool exact = c.centering_mode == CenteringMode::TruncationCorrected;
    add("mean_zero", worst <= g.mean_zero_sigmas, exact,
        fmt::format("max |mean| / (sd / sqrt(M)) = {:.4g} at {} (limit {})", worst, at,
                    g.mean_zero_sigmas));
  }
  {
    bool ok = true;
    std::string detail = "larger-L variance CI reaches the smaller-L CI at every (n, t)";
    for (const auto& s : report.scales) {
      for (std::size_t j = 0; j < J; ++j) {
        const auto& big = s.primary.cells[j].variance;
        const auto& small = s.secondary.cells[j].variance;
        if (big.ci.hi < small.ci.lo) {
          ok = false;
          detail = fmt::format("n = {}, t = {}: CI [{:.4g}, {:.4g}] (L = {}) below [{:.4g}, {:.4g}] (L = {})",
                               s.n, c.t_grid[j], big.ci.lo, big.ci.hi, s.primary.half_width,
                               small.ci.lo, small.ci.hi, s.secondary.half_width);
        }
      }
    }
    add("truncation_monotone", ok, true, detail);
  }
  {
    const double target = report.prediction.limit_variance;
    bool ok = true;
    std::string detail;
    for (const auto& s : report.scales) {
      const double ratio = s.primary.cells.back().variance.variance / target;
      if (!(ratio >= g.envelope_low && ratio <= g.envelope_high)) ok = false;
      detail += fmt::format("{}n = {}: {:.4g}", detail.empty() ? "" : ", ", s.n, ratio);
    }
    add("variance_envelope", ok, true,
        fmt::format("Var / limit variance at t = {} [engineering band {}..{}]: {}",
                    c.t_grid.back(), g.envelope_low, g.envelope_high, detail));
  }

  const bool have_fit = !report.exponent_fits.empty() && report.exponent_fits.back();
  if (report.regime == Regime::Intermediate) {
    if (have_fit) {
      const ExponentFit& fit = *report.exponent_fits.back();
      add("scaling_exponent",
          std::abs(fit.slope - report.prediction.exponent) <= g.slope_tolerance, true,
          fmt::format("slope {:.4f} +- {:.4f} vs predicted {:.4f} [engineering band +-{}]",
                      fit.slope, fit.stderr_slope, report.prediction.exponent,
                      g.slope_tolerance));
    } else {
      add("scaling_exponent", false, true, "needs at least two scales");
    }
    if (last.normality) {
      const NormalityResult& nr = *last.normality;
      add("gaussianity",
          std::abs(nr.skewness) <= g.max_abs_skewness &&
              std::abs(nr.excess_kurtosis) <= g.max_abs_excess_kurtosis,
          true,
          fmt::format("n = {}: skewness {:.4f} (limit {}), excess kurtosis {:.4f} (limit {})",
                      last.n, nr.skewness, g.max_abs_skewness, nr.excess_kurtosis,
                      g.max_abs_excess_kurtosis));
      add("ks_descriptive", nr.p_value > 0.01, false,
          fmt::format("KS {:.4f}, nominal p {:.4g} (parameters estimated from the sample)",
                      nr.ks_statistic, nr.p_value));
    }
    const auto j_half = find_t(c.t_grid, 0.5);
    const auto j_one = find_t(c.t_grid, 1.0);
    if (j_half && j_one && report.scales.size() >= 2 && !first.primary.correlation.empty() &&
        !last.primary.correlation.empty()) {
      const double r_first = first.primary.correlation[*j_half][*j_one];
      const double r_last = last.primary.correlation[*j_half][*j_one];
      add("time_flatness_trend", r_last > r_first, true,
          fmt::format("corr(t = 0.5, t = 1): {:.4f} at n = {}, {:.4f} at n = {}", r_first,
                      first.n, r_last, last.n));
    } else {
      add("time_flatness_trend", false, false, "needs t = 0.5 and t = 1 and two scales");
    }
  }
  if (report.regime == Regime::Critical) {
    if (report.log_corrected_fit && have_fit && report.scales.size() >= 3) {
      const double rse_log = report.log_corrected_fit->residual_se;
      const double rse_pow = report.exponent_fits.back()->residual_se;
      add("log_corrected_fit", rse_log < rse_pow, true,
          fmt::format("residual SE: log-corrected {:.4g}, power law {:.4g} (slope {:.4f})",
                      rse_log, rse_pow, report.exponent_fits.back()->slope));
    } else {
      add("log_corrected_fit", false, true, "needs at least three scales");
    }
  }
  {
    std::size_t flagged = 0;
    std::size_t refined = 0;
    double worst = 0.0;
    for (const auto& s : report.scales) {
      flagged += s.flagged_replicates;
      refined += s.refined_replicates;
      worst = std::max(worst, s.max_refinement_gap);
    }
    add("grid_refinement", flagged == 0, false,
        fmt::format("{} of {} refined replicates beyond tolerance {}; largest gap {:.4g}",
                    flagged, refined, c.refinement.tolerance, worst));
  }
}

}  // namespace degenbranch
