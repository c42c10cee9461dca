#include "degenbranch/test_function.hpp"

#include <cmath>
#include <numbers>

#include "degenbranch/error.hpp"

namespace degenbranch {

GaussianTestFunction::GaussianTestFunction(std::vector<double> centers,
                                           std::vector<double> widths, double amplitude)
    : centers_(std::move(centers)), widths_(std::move(widths)), amplitude_(amplitude) {
  if (centers_.empty()) throw DomainError("test function needs dimension >= 1");
  if (centers_.size() != widths_.size()) {
    throw DomainError("test function centers and widths differ in length");
  }
  if (!std::isfinite(amplitude_)) throw DomainError("test function amplitude not finite");
  inv_two_var_.reserve(widths_.size());
  for (std::size_t k = 0; k < widths_.size(); ++k) {
    if (!(widths_[k] > 0.0) || !std::isfinite(widths_[k])) {
      throw DomainError("test function widths must be finite and > 0");
    }
    if (!std::isfinite(centers_[k])) throw DomainError("test function center not finite");
    inv_two_var_.push_back(0.5 / (widths_[k] * widths_[k]));
  }
}

GaussianTestFunction GaussianTestFunction::standard(std::size_t dim, double amplitude) {
  return GaussianTestFunction(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0),
                              amplitude);
}

double GaussianTestFunction::operator()(std::span<const double> x) const {
  double exponent = 0.0;
  for (std::size_t k = 0; k < centers_.size(); ++k) {
    const double u = x[k] - centers_[k];
    exponent += u * u * inv_two_var_[k];
  }
  return amplitude_ * std::exp(-exponent);
}

double GaussianTestFunction::factor_integral(std::size_t k) const {
  return widths_[k] * std::sqrt(2.0 * std::numbers::pi);
}

double GaussianTestFunction::integral() const {
  double v = amplitude_;
  for (std::size_t k = 0; k < dim(); ++k) v *= factor_integral(k);
  return v;
}

std::complex<double> GaussianTestFunction::fourier(std::span<const double> z) const {
  double log_mag = 0.0;
  double phase = 0.0;
  for (std::size_t k = 0; k < dim(); ++k) {
    log_mag -= 0.5 * widths_[k] * widths_[k] * z[k] * z[k];
    phase += centers_[k] * z[k];
  }
  return std::polar(integral() * std::exp(log_mag), phase);
}

GaussianTestFunction GaussianTestFunction::scaled(double factor) const {
  return GaussianTestFunction(centers_, widths_, amplitude_ * factor);
}

TestFunction::TestFunction(const GaussianTestFunction& single) : terms_{single} {}

TestFunction::TestFunction(std::vector<GaussianTestFunction> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw DomainError("test function needs at least one term");
  for (const auto& t : terms_) {
    if (t.dim() != terms_.front().dim()) {
      throw DomainError("test function terms differ in dimension");
    }
  }
}

double TestFunction::operator()(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : terms_) v += t(x);
  return v;
}

double TestFunction::integral() const {
  double v = 0.0;
  for (const auto& t : terms_) v += t.integral();
  return v;
}

std::complex<double> TestFunction::fourier(std::span<const double> z) const {
  std::complex<double> v = 0.0;
  for (const auto& t : terms_) v += t.fourier(z);
  return v;
}

bool TestFunction::is_zero() const {
  for (const auto& t : terms_) {
    if (t.amplitude() != 0.0) return false;
  }
  return true;
}

TestFunction operator+(const TestFunction& a, const TestFunction& b) {
  std::vector<GaussianTestFunction> terms = a.terms_;
  terms.insert(terms.end(), b.terms_.begin(), b.terms_.end());
  return TestFunction(std::move(terms));
}

TestFunction operator*(double c, const TestFunction& f) {
  std::vector<GaussianTestFunction> terms;
  terms.reserve(f.terms_.size());
  for (const auto& t : f.terms_) terms.push_back(t.scaled(c));
  return TestFunction(std::move(terms));
}

}  // namespace degenbranch
