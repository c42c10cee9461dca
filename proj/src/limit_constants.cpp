#include "degenbranch/limit_constants.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <fmt/format.h>
#include <numbers>

#include "degenbranch/error.hpp"

namespace degenbranch {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kCrossCheckTolerance = 1e-6;

// Per-level targets for nested quadrature.
quad::Options nested_options() { return {1e-9, 1e-8, 20000}; }

double relative_gap(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

double cubic_direct_1d(double alpha, const quad::Options& opt) {
  auto f = [alpha](double y) {
    const double s = 1.0 + std::pow(y, alpha);
    return 1.0 / (s * s * s);
  };
  quad::Result r = quad::integrate(f, 0.0, 1.0, opt);
  r += quad::integrate_power_tail(f, 1.0, 3.0 * alpha, opt);
  quad::require_converged(r, "cubic integral (d = 1)");
  return 2.0 * r.value;
}

double cubic_direct_2d(double a1, double a2, double& err) {
  const quad::Options inner_opt{1e-13, 1e-11, 20000};
  const quad::Options outer_opt{1e-11, 1e-10, 20000};
  auto inner = [&](double y1) {
    const double c = 1.0 + std::pow(y1, a1);
    auto f = [&](double y2) {
      const double s = c + std::pow(y2, a2);
      return 1.0 / (s * s * s);
    };
    quad::Result r = quad::integrate(f, 0.0, 1.0, inner_opt);
    r += quad::integrate_power_tail(f, 1.0, 3.0 * a2, inner_opt);
    quad::require_converged(r, "cubic integral inner level");
    return r.value;
  };
  quad::Result r = quad::integrate(inner, 0.0, 1.0, outer_opt);
  r += quad::integrate_power_tail(inner, 1.0, a1 * (3.0 - 1.0 / a2), outer_opt);
  quad::require_converged(r, "cubic integral outer level");
  err = 4.0 * r.abs_error;
  return 4.0 * r.value;
}

// Upper incomplete gamma Gamma(nu, x) for nu in (-1, 0), via
// Gamma(nu, x) = (Gamma(nu + 1, x) - x^nu e^-x) / nu.
double upper_gamma_negative_order(double nu, double x) {
  return (boost::math::tgamma(nu + 1.0, x) - std::pow(x, nu) * std::exp(-x)) / nu;
}

}  // namespace

std::string_view to_string(ConstantMethod m) {
  return m == ConstantMethod::ClosedForm ? "closed_form" : "quadrature";
}

CubicIntegral anisotropic_cubic_integral(const StableIndexVector& indices) {
  const double bar = indices.bar_alpha();
  if (!(bar < 3.0)) {
    throw DivergenceError(
        fmt::format("cubic integral diverges for bar_alpha = {} (needs bar_alpha < 3)", bar));
  }
  CubicIntegral out;
  double product = 1.0;
  for (double a : indices.alphas()) product *= 2.0 * std::tgamma(1.0 / a) / a;
  out.closed_form = 0.5 * std::tgamma(3.0 - bar) * product;

  if (indices.dim() == 1) {
    out.direct = cubic_direct_1d(indices.alpha(0), {1e-13, 1e-11, 20000});
  } else if (indices.dim() == 2) {
    out.direct = cubic_direct_2d(indices.alpha(0), indices.alpha(1), out.direct_error);
  }
  if (out.direct) {
    out.direct_error = std::max(out.direct_error, std::abs(*out.direct - out.closed_form));
    if (relative_gap(*out.direct, out.closed_form) > kCrossCheckTolerance) {
      throw NumericAccuracyError(
          fmt::format("cubic integral: closed form {:.12g} and quadrature {:.12g} disagree",
                      out.closed_form, *out.direct),
          std::abs(*out.direct - out.closed_form));
    }
  }
  return out;
}

Regime regime_validate(const StableIndexVector& indices, RequestedConstant requested) {
  const Regime r = indices.regime();
  const double bar = indices.bar_alpha();
  switch (requested) {
    case RequestedConstant::C1:
      if (r != Regime::Critical) {
        throw UnsupportedRegimeError(fmt::format(
            "C1 needs the critical dimension |bar_alpha - 2| <= {:g}; got bar_alpha = {}",
            kCriticalTolerance, bar));
      }
      break;
    case RequestedConstant::C2:
      if (r != Regime::Intermediate) {
        throw UnsupportedRegimeError(fmt::format(
            "C2 needs the intermediate dimension 1 < bar_alpha < 2; got bar_alpha = {}", bar));
      }
      break;
    case RequestedConstant::LargeDimCov:
      if (r != Regime::Large) {
        throw DivergenceError(fmt::format(
            "large-dimension covariance needs bar_alpha > 2; got bar_alpha = {}", bar));
      }
      break;
  }
  return r;
}

ConstantResult c1(const StableIndexVector& indices, double gamma, double theta, double kappa) {
  const Regime regime = regime_validate(indices, RequestedConstant::C1);
  const CubicIntegral cubic = anisotropic_cubic_integral(indices);
  const double d = static_cast<double>(indices.dim());
  const double factor = 2.0 * gamma * kappa / (theta * std::pow(2.0 * kPi, d));
  ConstantResult out;
  out.value = std::sqrt(factor * cubic.value());
  out.method = ConstantMethod::ClosedForm;
  out.regime = regime;
  out.est_abs_error = 0.5 * out.value * cubic.direct_error / cubic.value();
  if (cubic.direct) out.cross_check = std::sqrt(factor * *cubic.direct);
  return out;
}

TimeIntegral c2_time_integral(double bar_alpha, double theta, const quad::Options& opt) {
  if (!(bar_alpha > 1.0 && bar_alpha < 2.0)) {
    throw UnsupportedRegimeError("time integral needs 1 < bar_alpha < 2");
  }
  const double nu = 1.0 - bar_alpha;
  const double q = 1.0 / (2.0 - bar_alpha);
  const double scale = std::pow(0.5 * theta, bar_alpha - 1.0);

  // G(b, a) = int_b^a e^{-theta w/2} w^-bar_alpha dw
  auto g = [&](double b, double a) {
    return scale * (upper_gamma_negative_order(nu, 0.5 * theta * b) -
                    upper_gamma_negative_order(nu, 0.5 * theta * a));
  };
  // int_0^a G(b, a) db with b = s^q.
  auto inner = [&](double a) {
    const double top = std::pow(a, 2.0 - bar_alpha);
    auto f = [&](double s) { return g(std::pow(s, q), a) * q * std::pow(s, q - 1.0); };
    return quad::require_converged(quad::integrate(f, 0.0, top, opt), "C2 inner level").value;
  };
  auto outer = [&](double a) { return 0.5 * std::exp(-0.5 * theta * a) * inner(a); };

  const double core = 20.0 / theta;
  quad::Result r = quad::integrate(outer, 0.0, core, opt);
  // int_R^inf outer <= (1/theta) e^{-theta R/2} Gamma(2 - bar_alpha) (2/theta)^(2 - bar_alpha)
  const double inner_bound = std::tgamma(2.0 - bar_alpha) * std::pow(2.0 / theta, 2.0 - bar_alpha);
  const double target = 1e-10 * std::abs(r.value);
  const double radius =
      std::max(core, (2.0 / theta) * std::log(inner_bound / (theta * target)));
  if (radius > core) r += quad::integrate(outer, core, radius, opt);
  quad::require_converged(r, "C2 outer level");
  const double tail = inner_bound / theta * std::exp(-0.5 * theta * radius);
  return {r.value, r.abs_error + tail, radius};
}

ConstantResult c2(const StableIndexVector& indices, double gamma, double theta) {
  const Regime regime = regime_validate(indices, RequestedConstant::C2);
  if (!(gamma > 0.0) || !(theta > 0.0)) throw DomainError("c2 needs gamma > 0 and theta > 0");
  const double bar = indices.bar_alpha();
  double prefactor = gamma / std::pow(kPi, static_cast<double>(indices.dim()));
  for (double a : indices.alphas()) prefactor *= std::tgamma(1.0 / a) / a;

  const TimeIntegral t = c2_time_integral(bar, theta, nested_options());
  // Exchanging the order of integration collapses T to a single gamma value.
  const double closed_t = std::tgamma(2.0 - bar) * std::pow(theta, bar - 3.0);
  if (relative_gap(t.value, closed_t) > kCrossCheckTolerance) {
    throw NumericAccuracyError(
        fmt::format("C2 time integral: quadrature {:.12g} vs closed form {:.12g}", t.value,
                    closed_t),
        std::abs(t.value - closed_t));
  }
  ConstantResult out;
  out.value = std::sqrt(prefactor * t.value);
  out.method = ConstantMethod::Quadrature;
  out.regime = regime;
  out.est_abs_error = 0.5 * out.value * t.abs_error / t.value;
  out.cross_check = std::sqrt(prefactor * closed_t);
  out.truncation_radius = t.radius;
  return out;
}

double large_dim_covariance(const TestFunction& phi1, const TestFunction& phi2,
                            const StableIndexVector& indices, double gamma, double theta) {
  regime_validate(indices, RequestedConstant::LargeDimCov);
  const std::size_t d = indices.dim();
  if (phi1.dim() != d || phi2.dim() != d) throw DomainError("covariance: dimension mismatch");

  std::vector<double> upper(d);
  for (std::size_t k = 0; k < d; ++k) {
    double w1 = std::numeric_limits<double>::infinity();
    double w2 = w1;
    for (const auto& t : phi1.terms()) w1 = std::min(w1, t.widths()[k]);
    for (const auto& t : phi2.terms()) w2 = std::min(w2, t.widths()[k]);
    upper[k] = std::sqrt(2.0 * 36.0 / (w1 * w1 + w2 * w2));
  }

  // The real part of the integrand is even under z -> -z, so integrate over
  // z_1 >= 0 and all sign patterns of the remaining coordinates.
  std::vector<double> z(d);
  std::vector<double> signed_z(d);
  double max_imag = 0.0;
  double max_real = 0.0;
  auto leaf = [&]() {
    double total = 0.0;
    const std::size_t patterns = std::size_t{1} << (d - 1);
    for (std::size_t mask = 0; mask < patterns; ++mask) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const bool flip = k > 0 && ((mask >> (k - 1)) & 1U);
        signed_z[k] = flip ? -z[k] : z[k];
        s += std::pow(z[k], indices.alpha(k));
      }
      const std::complex<double> plus = phi1.fourier(signed_z) * std::conj(phi2.fourier(signed_z));
      for (auto& v : signed_z) v = -v;
      const std::complex<double> minus = phi1.fourier(signed_z) * std::conj(phi2.fourier(signed_z));
      const std::complex<double> pair = plus + minus;
      max_imag = std::max(max_imag, std::abs(pair.imag()));
      max_real = std::max(max_real, std::abs(pair.real()));
      total += (2.0 / s + gamma / (s * s)) * pair.real();
    }
    return total;
  };
  const quad::Options opt{1e-300, 1e-10, 200000};
  std::function<double(std::size_t)> level = [&](std::size_t k) -> double {
    auto f = [&, k](double zk) {
      z[k] = zk;
      return k + 1 == d ? leaf() : level(k + 1);
    };
    return quad::require_converged(quad::integrate(f, 0.0, upper[k], opt),
                                   "large-dimension covariance")
        .value;
  };
  const double integral = level(0);
  if (max_imag > 1e-10 * std::max(max_real, 1e-300)) {
    throw NumericAccuracyError("large-dimension covariance: integrand not real", max_imag);
  }
  return integral / (theta * std::pow(2.0 * kPi, static_cast<double>(d)));
}

}  // namespace degenbranch
