#include "degenbranch/selftest.hpp"

#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "degenbranch/branching.hpp"
#include "degenbranch/error.hpp"
#include "degenbranch/fluctuation.hpp"
#include "degenbranch/limit_constants.hpp"
#include "degenbranch/rng.hpp"
#include "degenbranch/stable_motion.hpp"

namespace degenbranch {

namespace {

constexpr double kPi = std::numbers::pi;

SelftestCheck check_cf() {
  constexpr std::size_t kDraws = 100'000;
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(-3.0 + 0.1 * i);
  const double limit = 5.0 / std::sqrt(static_cast<double>(kDraws));
  double worst = 0.0;
  std::string at;
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    for (double t : {0.5, 1.0}) {
      Stream rng = derive_stream(7, static_cast<std::uint64_t>(alpha * 10 + t * 100), "selftest/cf");
      std::vector<double> x(kDraws);
      for (double& v : x) v = sample_stable_increment(alpha, t, rng);
      const double dev = empirical_cf_deviation(x, alpha, t, grid);
      if (dev > worst) {
        worst = dev;
        at = fmt::format("alpha {}, t {}", alpha, t);
      }
    }
  }
  return {"stable_cf", worst <= limit,
          fmt::format("max deviation {:.5f} ({}) vs 5/sqrt(N) = {:.5f}", worst, at, limit)};
}

SelftestCheck check_plancherel() {
  const GaussianTestFunction a({0.3}, {0.8}, 1.2);
  const GaussianTestFunction b({-0.5}, {1.3}, 0.7);
  const double s2 = 0.8 * 0.8 + 1.3 * 1.3;
  const double direct = 1.2 * 0.7 * std::sqrt(2.0 * kPi) * 0.8 * 1.3 / std::sqrt(s2) *
                        std::exp(-0.64 / (2.0 * s2));
  auto f = [&](double z) {
    const double zz[1] = {z};
    return (a.fourier(zz) * std::conj(b.fourier(zz))).real();
  };
  const auto breaks = oscillation_breaks(12.0, 0.8);
  quad::Result r = quad::integrate_panels(f, breaks, {1e-13, 1e-12, 4000});
  std::vector<double> neg(breaks.size());
  for (std::size_t i = 0; i < breaks.size(); ++i) neg[i] = -breaks[breaks.size() - 1 - i];
  r += quad::integrate_panels(f, neg, {1e-13, 1e-12, 4000});
  const double fourier_side = r.value / (2.0 * kPi);
  const double gap = std::abs(fourier_side - direct) / direct;
  return {"plancherel", gap <= 1e-8,
          fmt::format("<a, b> = {:.12f}, Fourier side {:.12f}, relative gap {:.2e}", direct,
                      fourier_side, gap)};
}

SelftestCheck check_semigroup() {
  const StableIndexVector cauchy({1.0});
  const double zero[1] = {0.0};
  const double value = semigroup_apply(GaussianTestFunction::standard(1), 1.0, zero, cauchy);
  const double oracle = std::exp(0.5) * std::erfc(1.0 / std::sqrt(2.0));
  const double gap = std::abs(value - oracle);
  return {"semigroup_cauchy", gap <= 1e-8,
          fmt::format("T_1 phi(0) = {:.12f}, Cauchy-kernel closed form {:.12f}", value, oracle)};
}

// Sum of phi over the particles alive at `s` of one tree from x = 0.
double alive_sum(double s, const BranchingRates& rates, const StableIndexVector& indices,
                 const TestFunction& phi, Stream& rng) {
  TreeOptions options;
  options.record_times = {s};
  const TreeRealization tree = simulate_tree(RootBirth{0.0, {0.0}}, s, rates, indices, rng, options);
  double total = 0.0;
  for (const Particle& p : tree.particles) {
    if (!p.death_time) total += phi(p.recorded_path.back().position);
  }
  return total;
}

SelftestCheck check_expectation_identity() {
  constexpr std::size_t kTrees = 20'000;
  const StableIndexVector indices({1.0});
  const BranchingRates rates{1.0, 0.2};
  const TestFunction phi = GaussianTestFunction::standard(1);
  Stream rng = derive_stream(11, 0, "selftest/expectation");
  double sum = 0.0;
  double sum2 = 0.0;
  double count = 0.0;
  double count2 = 0.0;
  for (std::size_t i = 0; i < kTrees; ++i) {
    const double v = alive_sum(1.0, rates, indices, phi, rng);
    sum += v;
    sum2 += v * v;
  }
  Stream pop = derive_stream(11, 1, "selftest/population");
  for (std::size_t i = 0; i < kTrees; ++i) {
    const TreeRealization tree =
        simulate_tree(RootBirth{0.0, {0.0}}, 1.0, {1.0, 0.5}, indices, pop);
    const auto v = static_cast<double>(count_alive(tree, 1.0));
    count += v;
    count2 += v * v;
  }
  const double m = static_cast<double>(kTrees);
  const double mean = sum / m;
  const double se = std::sqrt((sum2 / m - mean * mean) / (m - 1.0));
  const double zero[1] = {0.0};
  const double target =
      expected_population(1.0, 1.0, 0.2) * semigroup_apply(phi, 1.0, zero, indices);
  const double pop_mean = count / m;
  const double pop_se = std::sqrt((count2 / m - pop_mean * pop_mean) / (m - 1.0));
  const double pop_target = expected_population(1.0, 1.0, 0.5);
  const bool ok =
      std::abs(mean - target) <= 4.0 * se && std::abs(pop_mean - pop_target) <= 4.0 * pop_se;
  return {"mean_identities", ok,
          fmt::format("E<N(1), phi>: {:.5f} +- {:.5f} vs {:.5f}; E N(1) (delta 0.5): {:.5f} +- "
                      "{:.5f} vs {:.6f}",
                      mean, se, target, pop_mean, pop_se, pop_target)};
}

SelftestCheck check_constants() {
  const double cubic_1 = anisotropic_cubic_integral(StableIndexVector({0.5})).value();
  const double cubic_2 = anisotropic_cubic_integral(StableIndexVector({1.0, 1.0})).value();
  const double v1 = c1(StableIndexVector({0.5}), 1.0, 1.0, 0.5).value;
  const ConstantResult v2 = c2(StableIndexVector({2.0 / 3.0}), 1.0, 1.0);
  const double cov = large_dim_covariance(GaussianTestFunction::standard(1),
                                          GaussianTestFunction::standard(1),
                                          StableIndexVector({0.4}), 1.0, 1.0);
  const double cov_oracle = 2.0 * std::tgamma(0.3) + std::tgamma(0.1);
  const bool ok = std::abs(cubic_1 - 2.0) <= 1e-9 && std::abs(cubic_2 - 2.0) <= 1e-9 &&
                  std::abs(v1 - 1.0 / std::sqrt(kPi)) <= 1e-9 &&
                  std::abs(v2.value - std::sqrt(0.75)) <= 1e-7 &&
                  std::abs(cov - cov_oracle) <= 1e-7 * cov_oracle;
  return {"limit_constants", ok,
          fmt::format("cubic {:.9f} / {:.9f}, c1 {:.9f}, c2 {:.9f}, covariance {:.7f} vs {:.7f}",
                      cubic_1, cubic_2, v1, v2.value, cov, cov_oracle)};
}

SelftestCheck check_box_mass() {
  const StableIndexVector indices({2.0 / 3.0});
  const TestFunction phi = GaussianTestFunction({1.0}, {0.7}, 1.0);
  const SimulationDomain box({6.0});
  const double at_zero = box_mass(phi, 0.0, box, indices);
  const double tiny = box_mass(phi, 1e-9, box, indices);
  const double later = box_mass(phi, 3.0, box, indices);
  const bool ok = std::abs(at_zero - tiny) <= 1e-7 && later < at_zero && later > 0.0 &&
                  at_zero <= phi.integral();
  return {"box_mass", ok,
          fmt::format("s = 0: {:.10f}, s = 1e-9 (Fourier): {:.10f}, s = 3: {:.10f}, total {:.10f}",
                      at_zero, tiny, later, phi.integral())};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(const std::function<void(const SelftestCheck&)>& progress) {
  std::vector<SelftestCheck> out;
  for (auto check : {check_cf, check_plancherel, check_semigroup, check_expectation_identity,
                     check_constants, check_box_mass}) {
    SelftestCheck c;
    try {
      c = check();
    } catch (const std::exception& e) {
      c = {"(exception)", false, e.what()};
    }
    if (progress) progress(c);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace degenbranch
