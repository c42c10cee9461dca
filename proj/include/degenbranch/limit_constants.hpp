#pragma once

#include <optional>
#include <string_view>

#include "degenbranch/quadrature.hpp"
#include "degenbranch/stable_motion.hpp"
#include "degenbranch/test_function.hpp"

namespace degenbranch {

enum class ConstantMethod { ClosedForm, Quadrature };

std::string_view to_string(ConstantMethod m);

struct ConstantResult {
  double value = 0.0;
  ConstantMethod method = ConstantMethod::ClosedForm;
  double est_abs_error = 0.0;
  Regime regime = Regime::Critical;
  // Independent evaluation of the same quantity, when one exists.
  std::optional<double> cross_check;
  // Outer truncation radius of a semi-infinite quadrature, when one was used.
  std::optional<double> truncation_radius;
};

// int_{R^d} dy / (1 + sum_k |y_k|^alpha_k)^3, finite iff bar_alpha < 3.
struct CubicIntegral {
  double closed_form = 0.0;
  // Direct adaptive quadrature; computed for d <= 2 only.
  std::optional<double> direct;
  double direct_error = 0.0;

  double value() const { return closed_form; }
};

// Closed form Gamma(3 - bar_alpha)/2 * prod_k 2 Gamma(1/alpha_k)/alpha_k,
// cross-checked against direct quadrature for d <= 2 (1e-6 relative).
// Throws DivergenceError for bar_alpha >= 3 and NumericAccuracyError when the
// two routes disagree.
CubicIntegral anisotropic_cubic_integral(const StableIndexVector& indices);

enum class RequestedConstant { C1, C2, LargeDimCov };

// Returns the regime when it admits the requested constant, otherwise throws
// UnsupportedRegimeError naming the valid bar_alpha window. The critical
// window is |bar_alpha - 2| <= kCriticalTolerance.
Regime regime_validate(const StableIndexVector& indices, RequestedConstant requested);

// Critical-dimension constant
//   C1 = sqrt(2 gamma kappa / (theta (2 pi)^d) * cubic integral).
ConstantResult c1(const StableIndexVector& indices, double gamma, double theta, double kappa);

// Intermediate-dimension constant
//   C2 = sqrt(gamma / pi^d prod_k Gamma(1/alpha_k)/alpha_k * T(theta))
// where T is the triple time integral. T is evaluated after reducing the
// innermost integral to incomplete gamma functions, by nested adaptive
// quadrature in rotated coordinates a = u + v, b = |u - v|, with the
// b^(1 - bar_alpha) singularity flattened by b = b'^(1/(2 - bar_alpha)).
ConstantResult c2(const StableIndexVector& indices, double gamma, double theta);

// The rotated-coordinate quadrature for T alone (exposed for testing).
struct TimeIntegral {
  double value;
  double abs_error;
  double radius;
};
TimeIntegral c2_time_integral(double bar_alpha, double theta, const quad::Options& opt = {});

// Limit covariance of <X, phi1> and <X, phi2> for bar_alpha > 2:
//   1/(theta (2 pi)^d) int [2/S(z) + gamma/S(z)^2] phi1^(z) conj(phi2^(z)) dz,
// S(z) = sum_k |z_k|^alpha_k.
double large_dim_covariance(const TestFunction& phi1, const TestFunction& phi2,
                            const StableIndexVector& indices, double gamma, double theta);

}  // namespace degenbranch
