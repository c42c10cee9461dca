#include <cmath>
#include <gtest/gtest.h>
#include <numbers>
#include <vector>

#include "degenbranch/error.hpp"
#include "degenbranch/rng.hpp"
#include "degenbranch/stable_motion.hpp"

using namespace degenbranch;

TEST(StableIndexVector, Regimes) {
  EXPECT_EQ(StableIndexVector({0.5}).regime(), Regime::Critical);
  EXPECT_EQ(StableIndexVector({1.0, 1.0}).regime(), Regime::Critical);
  EXPECT_EQ(StableIndexVector({2.0 / 3.0}).regime(), Regime::Intermediate);
  EXPECT_EQ(StableIndexVector({0.4}).regime(), Regime::Large);
  EXPECT_EQ(StableIndexVector({2.0}).regime(), Regime::Subcritical);
  EXPECT_EQ(StableIndexVector({1.0}).regime(), Regime::Subcritical);
  EXPECT_DOUBLE_EQ(StableIndexVector({0.5, 2.0}).bar_alpha(), 2.5);
}

TEST(StableIndexVector, RejectsBadIndices) {
  EXPECT_THROW(StableIndexVector({}), DomainError);
  EXPECT_THROW(StableIndexVector({0.0}), DomainError);
  EXPECT_THROW(StableIndexVector({2.5}), DomainError);
  EXPECT_THROW(StableIndexVector({std::nan("")}), DomainError);
}

TEST(MotionCf, Values) {
  const StableIndexVector idx({0.5, 2.0});
  const double z[2] = {4.0, 1.0};
  // exp(-t (|4|^0.5 + |1|^2)) = exp(-3 t)
  EXPECT_NEAR(motion_cf(z, 0.5, idx), std::exp(-1.5), 1e-15);
  EXPECT_DOUBLE_EQ(motion_cf(z, 0.0, idx), 1.0);
  EXPECT_THROW(motion_cf(z, -1.0, idx), DomainError);
  const double bad[2] = {std::nan(""), 0.0};
  EXPECT_THROW(motion_cf(bad, 1.0, idx), DomainError);
}

TEST(Sampler, EmpiricalCharacteristicFunction) {
  constexpr std::size_t kDraws = 100000;
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(-3.0 + 0.1 * i);
  for (double alpha : {0.5, 1.0, 1.5, 2.0}) {
    for (double t : {0.5, 1.0}) {
      Stream rng = derive_stream(3, static_cast<std::uint64_t>(alpha * 100 + t * 10), "cf");
      std::vector<double> x(kDraws);
      for (double& v : x) v = sample_stable_increment(alpha, t, rng);
      EXPECT_LE(empirical_cf_deviation(x, alpha, t, grid), 5.0 / std::sqrt(double(kDraws)))
          << "alpha " << alpha << " t " << t;
    }
  }
}

TEST(Sampler, GaussianCaseHasVarianceTwoT) {
  Stream rng(17);
  const int n = 200000;
  double s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_stable_increment(2.0, 1.5, rng);
    s2 += x * x;
  }
  // Var = 2 t = 3, sd of the estimate ~ 3 sqrt(2/n)
  EXPECT_NEAR(s2 / n, 3.0, 4.0 * 3.0 * std::sqrt(2.0 / n));
}

TEST(Sampler, CauchyQuartiles) {
  // Standard Cauchy (alpha = 1) has quartiles at +-1.
  Stream rng(23);
  const int n = 100000;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::abs(sample_standard_stable(1.0, rng)) < 1.0;
  EXPECT_NEAR(double(inside) / n, 0.5, 4.0 * 0.5 / std::sqrt(double(n)));
}

TEST(Sampler, DomainErrors) {
  Stream rng(1);
  EXPECT_THROW(sample_stable_increment(2.5, 1.0, rng), DomainError);
  EXPECT_THROW(sample_stable_increment(1.0, -1.0, rng), DomainError);
  EXPECT_THROW(sample_stable_increment(1.0, 0.0, rng), DomainError);
}

TEST(Semigroup, FrozenFourierInversionValues) {
  // Values from an independent arbitrary-precision Fourier inversion.
  const double a = semigroup_coordinate(0.0, 1.0, 0.5, 1.0, 0.7).value;
  EXPECT_NEAR(a, 0.399379979777323776, 1e-9);
  const double b = semigroup_coordinate(0.3, 0.5, 1.5, 2.0, -1.0).value;
  EXPECT_NEAR(b, 0.175923629178658118, 1e-9);
}

TEST(Semigroup, CauchyKernelClosedForm) {
  // Gaussian convolved with the Cauchy kernel at the origin: e^{1/2} erfc(1/sqrt 2).
  const StableIndexVector idx({1.0});
  const double x[1] = {0.0};
  const auto v = semigroup_apply_detailed(GaussianTestFunction::standard(1), 1.0, x, idx);
  EXPECT_NEAR(v.value, std::exp(0.5) * std::erfc(1.0 / std::sqrt(2.0)), 1e-10);
  EXPECT_LT(v.abs_error, 1e-8);
}

TEST(Semigroup, GaussianCaseAndTimeZero) {
  // alpha = 2: N(0, 2t) kernel, so the width grows to sqrt(sigma^2 + 2t).
  const double v = semigroup_coordinate(1.0, 0.5, 2.0, 0.375, 2.0).value;
  EXPECT_NEAR(v, 0.5 * std::exp(-0.5), 1e-15);
  EXPECT_DOUBLE_EQ(semigroup_coordinate(1.0, 0.5, 0.7, 0.0, 2.0).value, std::exp(-2.0));
}

TEST(Semigroup, SymmetryAboutTheCenter) {
  for (double alpha : {0.5, 1.3}) {
    const double l = semigroup_coordinate(0.4, 0.8, alpha, 1.2, 0.4 - 1.7).value;
    const double r = semigroup_coordinate(0.4, 0.8, alpha, 1.2, 0.4 + 1.7).value;
    EXPECT_NEAR(l, r, 1e-12);
  }
}

TEST(Semigroup, SmallTimeApproachesIdentity) {
  const double v = semigroup_coordinate(0.0, 1.0, 0.8, 1e-8, 0.5).value;
  EXPECT_NEAR(v, std::exp(-0.125), 1e-6);
}

TEST(Semigroup, ProductOverCoordinates) {
  const StableIndexVector idx({0.8, 1.6});
  const GaussianTestFunction phi({0.1, -0.2}, {0.9, 1.4}, 2.0);
  const double x[2] = {0.5, 0.3};
  const double v = semigroup_apply(phi, 0.7, x, idx);
  const double expect = 2.0 * semigroup_coordinate(0.1, 0.9, 0.8, 0.7, 0.5).value *
                        semigroup_coordinate(-0.2, 1.4, 1.6, 0.7, 0.3).value;
  EXPECT_NEAR(v, expect, 1e-14);
}

TEST(FrequencyWindow, TailBoundIsSmall) {
  const auto w = frequency_window(1.0, 0.5, 0.0);
  EXPECT_LT(w.tail_bound, 1e-14);
  const auto v = frequency_window(1.0, 0.5, 50.0);
  EXPECT_LT(v.upper, w.upper);
  EXPECT_LT(v.tail_bound, 1e-12);
}

TEST(OscillationBreaks, HalfPeriodPanels) {
  const auto b = oscillation_breaks(10.0, std::numbers::pi);
  ASSERT_EQ(b.size(), 11U);
  EXPECT_DOUBLE_EQ(b[3], 3.0);
  EXPECT_DOUBLE_EQ(b.back(), 10.0);
  EXPECT_EQ(oscillation_breaks(1.0, 0.0).size(), 2U);
}
