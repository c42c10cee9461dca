#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "degenbranch/quadrature.hpp"
#include "degenbranch/rng.hpp"
#include "degenbranch/test_function.hpp"

namespace degenbranch {

// Dimension regime of the motion, classified by bar_alpha = sum_k 1/alpha_k.
enum class Regime { Large, Critical, Intermediate, Subcritical };

std::string_view to_string(Regime r);

// |bar_alpha - 2| at or below this counts as the critical dimension.
inline constexpr double kCriticalTolerance = 1e-12;

class StableIndexVector {
 public:
  explicit StableIndexVector(std::vector<double> alphas);

  std::size_t dim() const { return alphas_.size(); }
  const std::vector<double>& alphas() const { return alphas_; }
  double alpha(std::size_t k) const { return alphas_[k]; }
  double alpha_min() const;
  double bar_alpha() const { return bar_alpha_; }
  Regime regime() const { return regime_; }

 private:
  std::vector<double> alphas_;
  double bar_alpha_;
  Regime regime_;
};

// Law of the motion: independent symmetric alpha_k-stable coordinates with
//   E exp(i<z, xi(t)>) = exp(-t sum_k |z_k|^alpha_k).
class MotionLaw {
 public:
  explicit MotionLaw(StableIndexVector indices) : indices_(std::move(indices)) {}

  const StableIndexVector& indices() const { return indices_; }
  double characteristic_function(std::span<const double> z, double t) const;

 private:
  StableIndexVector indices_;
};

double motion_cf(std::span<const double> z, double t, const StableIndexVector& indices);

// One draw of the standard symmetric alpha-stable law with characteristic
// function exp(-|z|^alpha). Note the scale convention: at alpha = 2 this is
// N(0, 2), not N(0, 1).
double sample_standard_stable(double alpha, Stream& rng);

// Displacement over elapsed time t: standard draw scaled by t^(1/alpha).
double sample_stable_increment(double alpha, double t, Stream& rng);

// max over z in z_grid of |mean_i cos(z x_i) - exp(-t |z|^alpha)|.
double empirical_cf_deviation(std::span<const double> samples, double alpha, double t,
                              std::span<const double> z_grid);

// Truncated frequency window [0, upper] for integrands dominated by
// exp(-width^2 z^2 / 2 - t z^alpha). `tail_bound` bounds the discarded mass
// of that envelope.
struct FrequencyWindow {
  double upper;
  double tail_bound;
};

FrequencyWindow frequency_window(double width, double alpha, double t);

// Panel breakpoints on [0, upper] at multiples of pi / frequency, so that each
// panel holds half a period of cos(frequency z) or sin(frequency z).
std::vector<double> oscillation_breaks(double upper, double frequency);

struct SemigroupValue {
  double value;
  double abs_error;
};

// T_t applied to exp(-(x - center)^2 / (2 width^2)) for one coordinate with
// index alpha. Closed-form Gaussian convolution at alpha = 2, otherwise
// Fourier inversion by adaptive quadrature.
SemigroupValue semigroup_coordinate(double center, double width, double alpha, double t,
                                    double x, const quad::Options& opt = {});

// T_t phi(x). Throws NumericAccuracyError when a coordinate inversion misses
// its tolerance.
SemigroupValue semigroup_apply_detailed(const TestFunction& phi, double t,
                                        std::span<const double> x,
                                        const StableIndexVector& indices,
                                        const quad::Options& opt = {});

double semigroup_apply(const TestFunction& phi, double t, std::span<const double> x,
                       const StableIndexVector& indices);

}  // namespace degenbranch
