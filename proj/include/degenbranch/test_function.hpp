#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace degenbranch {

// Separable Gaussian
//   phi(x) = A * prod_k exp(-(x_k - m_k)^2 / (2 sigma_k^2))
// with Fourier transform phi^(z) = int e^{i<x,z>} phi(x) dx, i.e.
//   phi^(z) = integral() * prod_k exp(-sigma_k^2 z_k^2 / 2) e^{i m_k z_k}.
class GaussianTestFunction {
 public:
  GaussianTestFunction(std::vector<double> centers, std::vector<double> widths,
                       double amplitude = 1.0);

  // Centered, unit-width Gaussian in d dimensions.
  static GaussianTestFunction standard(std::size_t dim, double amplitude = 1.0);

  std::size_t dim() const { return centers_.size(); }
  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& widths() const { return widths_; }
  double amplitude() const { return amplitude_; }

  double operator()(std::span<const double> x) const;
  double integral() const;
  std::complex<double> fourier(std::span<const double> z) const;

  // Integral of the k-th unit-amplitude factor: sigma_k * sqrt(2 pi).
  double factor_integral(std::size_t k) const;

  GaussianTestFunction scaled(double factor) const;

 private:
  std::vector<double> centers_;
  std::vector<double> widths_;
  double amplitude_;
  std::vector<double> inv_two_var_;
};

// Finite linear combination of separable Gaussians. Every functional in the
// library is linear in the test function and is evaluated term by term.
class TestFunction {
 public:
  TestFunction(const GaussianTestFunction& single);  // NOLINT(implicit)
  explicit TestFunction(std::vector<GaussianTestFunction> terms);

  std::size_t dim() const { return terms_.front().dim(); }
  const std::vector<GaussianTestFunction>& terms() const { return terms_; }

  double operator()(std::span<const double> x) const;
  double integral() const;
  std::complex<double> fourier(std::span<const double> z) const;
  bool is_zero() const;

  friend TestFunction operator+(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator*(double c, const TestFunction& f);

 private:
  std::vector<GaussianTestFunction> terms_;
};

}  // namespace degenbranch
