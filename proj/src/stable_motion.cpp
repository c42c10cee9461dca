#include "degenbranch/stable_motion.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

#include "degenbranch/error.hpp"

namespace degenbranch {

namespace {

constexpr double kPi = std::numbers::pi;

// exp(-34) ~ 1.7e-15: the envelope cut used for frequency windows.
constexpr double kEnvelopeCut = 34.0;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw DomainError(fmt::format("stability index {} outside (0, 2]", alpha));
  }
}

}  // namespace

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Large: return "large";
    case Regime::Critical: return "critical";
    case Regime::Intermediate: return "intermediate";
    case Regime::Subcritical: return "subcritical";
  }
  return "unknown";
}

StableIndexVector::StableIndexVector(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  if (alphas_.empty()) throw DomainError("stable index vector needs d >= 1");
  bar_alpha_ = 0.0;
  for (double a : alphas_) {
    check_alpha(a);
    bar_alpha_ += 1.0 / a;
  }
  if (std::abs(bar_alpha_ - 2.0) <= kCriticalTolerance) {
    regime_ = Regime::Critical;
  } else if (bar_alpha_ > 2.0) {
    regime_ = Regime::Large;
  } else if (bar_alpha_ > 1.0) {
    regime_ = Regime::Intermediate;
  } else {
    regime_ = Regime::Subcritical;
  }
}

double StableIndexVector::alpha_min() const {
  return *std::min_element(alphas_.begin(), alphas_.end());
}

double MotionLaw::characteristic_function(std::span<const double> z, double t) const {
  return motion_cf(z, t, indices_);
}

double motion_cf(std::span<const double> z, double t, const StableIndexVector& indices) {
  if (z.size() != indices.dim()) throw DomainError("frequency dimension mismatch");
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("motion_cf needs finite t >= 0");
  double exponent = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!std::isfinite(z[k])) throw DomainError("motion_cf needs finite frequencies");
    exponent += std::pow(std::abs(z[k]), indices.alpha(k));
  }
  return std::exp(-t * exponent);
}

double sample_standard_stable(double alpha, Stream& rng) {
  if (alpha == 2.0) return std::numbers::sqrt2 * rng.normal();
  // Chambers-Mallows-Stuck, symmetric case.
  const double v = kPi * (rng.uniform_open() - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = -std::log(rng.uniform_open());
  const double cos_v = std::cos(v);
  return std::sin(alpha * v) / std::pow(cos_v, 1.0 / alpha) *
         std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

double sample_stable_increment(double alpha, double t, Stream& rng) {
  check_alpha(alpha);
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError(fmt::format("stable increment needs elapsed time > 0, got {}", t));
  }
  return sample_standard_stable(alpha, rng) * std::pow(t, 1.0 / alpha);
}

double empirical_cf_deviation(std::span<const double> samples, double alpha, double t,
                              std::span<const double> z_grid) {
  if (samples.empty()) throw DomainError("empirical CF needs at least one sample");
  check_alpha(alpha);
  double worst = 0.0;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (double z : z_grid) {
    if (!std::isfinite(z)) throw DomainError("CF grid must be finite");
    double acc = 0.0;
    for (double x : samples) acc += std::cos(z * x);
    const double target = std::exp(-t * std::pow(std::abs(z), alpha));
    worst = std::max(worst, std::abs(acc * inv_n - target));
  }
  return worst;
}

FrequencyWindow frequency_window(double width, double alpha, double t) {
  const double z_phi = std::sqrt(2.0 * kEnvelopeCut) / width;
  // int_Z^inf exp(-w^2 z^2/2) dz <= exp(-w^2 Z^2/2) / (w^2 Z)
  FrequencyWindow win{z_phi, std::exp(-kEnvelopeCut) / (width * width * z_phi)};
  if (t > 0.0) {
    const double z_t = std::pow(kEnvelopeCut / t, 1.0 / alpha);
    if (z_t < z_phi) {
      const double a = 1.0 / alpha;
      win = {z_t, boost::math::tgamma(a, kEnvelopeCut) / (alpha * std::pow(t, a))};
    }
  }
  return win;
}

std::vector<double> oscillation_breaks(double upper, double frequency) {
  std::vector<double> breaks{0.0};
  const double half_period = kPi / std::max(std::abs(frequency), 1e-300);
  if (!(frequency != 0.0) || half_period >= upper) {
    breaks.push_back(upper);
    return breaks;
  }
  const auto panels = static_cast<std::size_t>(std::ceil(upper / half_period));
  if (panels > 2'000'000) {
    throw NumericAccuracyError(
        fmt::format("oscillatory integral needs {} panels; frequency {} too high", panels,
                    frequency),
        std::numeric_limits<double>::infinity());
  }
  breaks.reserve(panels + 1);
  for (std::size_t i = 1; i < panels; ++i) breaks.push_back(half_period * static_cast<double>(i));
  breaks.push_back(upper);
  return breaks;
}

SemigroupValue semigroup_coordinate(double center, double width, double alpha, double t,
                                    double x, const quad::Options& opt) {
  check_alpha(alpha);
  if (!(t >= 0.0)) throw DomainError("semigroup time must be >= 0");
  const double u = x - center;
  if (t == 0.0) return {std::exp(-0.5 * u * u / (width * width)), 0.0};
  if (alpha == 2.0) {
    // Gaussian kernel N(0, 2t) convolved with the Gaussian factor.
    const double var = width * width + 2.0 * t;
    return {width / std::sqrt(var) * std::exp(-0.5 * u * u / var), 0.0};
  }
  const FrequencyWindow win = frequency_window(width, alpha, t);
  const double prefactor = width * std::sqrt(2.0 * kPi) / kPi;
  auto integrand = [&](double z) {
    return std::exp(-0.5 * width * width * z * z - t * std::pow(z, alpha)) * std::cos(z * u);
  };
  const auto breaks = oscillation_breaks(win.upper, u);
  quad::Options o = opt;
  o.abs_tol = opt.abs_tol / prefactor;
  const quad::Result r = quad::require_converged(
      quad::integrate_panels(integrand, breaks, o), "semigroup Fourier inversion");
  return {prefactor * r.value, prefactor * (r.abs_error + win.tail_bound)};
}

SemigroupValue semigroup_apply_detailed(const TestFunction& phi, double t,
                                        std::span<const double> x,
                                        const StableIndexVector& indices,
                                        const quad::Options& opt) {
  if (phi.dim() != indices.dim() || x.size() != indices.dim()) {
    throw DomainError("semigroup_apply: dimension mismatch");
  }
  SemigroupValue total{0.0, 0.0};
  for (const auto& term : phi.terms()) {
    double product = term.amplitude();
    double rel_err = 0.0;
    for (std::size_t k = 0; k < indices.dim(); ++k) {
      const SemigroupValue c = semigroup_coordinate(term.centers()[k], term.widths()[k],
                                                    indices.alpha(k), t, x[k], opt);
      product *= c.value;
      rel_err += c.abs_error / std::max(std::abs(c.value), 1e-300);
    }
    total.value += product;
    total.abs_error += std::abs(product) * rel_err;
  }
  return total;
}

double semigroup_apply(const TestFunction& phi, double t, std::span<const double> x,
                       const StableIndexVector& indices) {
  return semigroup_apply_detailed(phi, t, x, indices).value;
}

}  // namespace degenbranch
