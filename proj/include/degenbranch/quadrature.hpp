#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace degenbranch::quad {

struct Options {
  double abs_tol = 1e-9;
  double rel_tol = 1e-8;
  std::size_t max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
  bool converged = true;

  Result& operator+=(const Result& other) {
    value += other.value;
    abs_error += other.abs_error;
    evaluations += other.evaluations;
    intervals += other.intervals;
    converged = converged && other.converged;
    return *this;
  }
};

// Throws NumericAccuracyError naming `what` when `r` did not converge.
const Result& require_converged(const Result& r, std::string_view what);

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600525578600, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7, 9).
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651146};

struct Segment {
  double a;
  double b;
  double value;
  double error;
};

template <class F>
Segment kronrod21(F& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kKronrodWeights[10];
  double resabs = std::abs(resk);
  std::array<double, 10> lo{};
  std::array<double, 10> hi{};
  double resg = 0.0;
  for (std::size_t j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    lo[j] = f(center - dx);
    hi[j] = f(center + dx);
    const double pair = lo[j] + hi[j];
    resk += kKronrodWeights[j] * pair;
    resabs += kKronrodWeights[j] * (std::abs(lo[j]) + std::abs(hi[j]));
    if (j % 2 == 1) resg += kGaussWeights[j / 2] * pair;
  }
  const double mean = 0.5 * resk;
  double resasc = kKronrodWeights[10] * std::abs(fc - mean);
  for (std::size_t j = 0; j < 10; ++j) {
    resasc += kKronrodWeights[j] * (std::abs(lo[j] - mean) + std::abs(hi[j] - mean));
  }
  const double ahalf = std::abs(half);
  resasc *= ahalf;
  resabs *= ahalf;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) {
    err = std::max(50.0 * eps * resabs, err);
  }
  return {a, b, resk * half, err};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod (21-point) quadrature on a finite
// interval: the segment with the largest error estimate is bisected until
// the summed error meets max(abs_tol, rel_tol * |value|). Endpoints are
// never evaluated, so integrable endpoint singularities are allowed.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  Result out;
  if (a == b) return out;
  auto by_error = [](const detail::Segment& x, const detail::Segment& y) {
    return x.error < y.error;
  };
  std::vector<detail::Segment> heap;
  heap.reserve(64);
  heap.push_back(detail::kronrod21(f, a, b));
  out.evaluations = 21;
  double total = heap.front().value;
  double total_err = heap.front().error;
  auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
  bool stuck = false;
  while (total_err > target()) {
    if (heap.size() >= opt.max_intervals) break;
    std::pop_heap(heap.begin(), heap.end(), by_error);
    const detail::Segment worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b)) ||
        std::abs(worst.b - worst.a) <= 4.0 * std::numeric_limits<double>::epsilon() *
                                          std::max(std::abs(worst.a), std::abs(worst.b))) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end(), by_error);
      stuck = true;
      break;
    }
    const detail::Segment left = detail::kronrod21(f, worst.a, mid);
    const detail::Segment right = detail::kronrod21(f, mid, worst.b);
    out.evaluations += 42;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_error);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_error);
  }
  // Re-sum to shed the drift of the incremental updates.
  total = 0.0;
  total_err = 0.0;
  for (const auto& s : heap) {
    total += s.value;
    total_err += s.error;
  }
  out.value = total;
  out.abs_error = total_err;
  out.intervals = heap.size();
  out.converged = !stuck && total_err <= target();
  return out;
}

// Sums adaptive integrals over consecutive panels [breaks[i], breaks[i+1]].
// Used for oscillatory integrands, with breaks at the oscillation zeros.
// The absolute tolerance is shared evenly between panels.
template <class F>
Result integrate_panels(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  Result out;
  if (breaks.size() < 2) return out;
  Options panel = opt;
  panel.abs_tol = opt.abs_tol / static_cast<double>(breaks.size() - 1);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    out += integrate(f, breaks[i], breaks[i + 1], panel);
  }
  return out;
}

// Integral of f over [a, inf) for a > 0 and f decaying like y^-decay with
// decay > 1. The substitution y = a * x^(-1/(decay-1)) maps the tail onto
// (0, 1] with an integrand that is bounded at x = 0.
template <class F>
Result integrate_power_tail(F&& f, double a, double decay, const Options& opt = {}) {
  const double p = 1.0 / (decay - 1.0);
  auto mapped = [&](double x) {
    const double y = a * std::pow(x, -p);
    const double jacobian = a * p * std::pow(x, -p - 1.0);
    if (!std::isfinite(y) || !std::isfinite(jacobian)) return 0.0;
    return f(y) * jacobian;
  };
  return integrate(mapped, 0.0, 1.0, opt);
}

}  // namespace degenbranch::quad
