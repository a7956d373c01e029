#include "bqcd/calibrate.hpp"

#include <cmath>
#include <stdexcept>

#include "bqcd/errors.hpp"

namespace bqcd {

namespace {
constexpr double sqrt_pi = 1.7724538509055160273;
constexpr double inv_sqrt2 = 0.70710678118654752440;
}  // namespace

double g_function(double x, std::int64_t term_cap) {
  if (!std::isfinite(x) || x <= 0.0) throw std::domain_error("g_function: x must be > 0");
  if (term_cap < 1) throw std::invalid_argument("g_function: term cap must be >= 1");
  long double sum = 0.0L;
  for (std::int64_t n = 1; n <= term_cap; ++n) {
    // Phi(-x sqrt(n)/2) via erfc
    const double term =
        0.5 * std::erfc(0.5 * x * std::sqrt(static_cast<double>(n)) * inv_sqrt2) /
        static_cast<double>(n);
    sum += term;
    if (term < 1e-12) break;
  }
  return 2.0 / (x * x) * std::exp(-2.0 * static_cast<double>(sum));
}

namespace detail {

double integrate_xg2(int n_panels, double x_lo, double x_hi) {
  if (n_panels < 1) throw std::invalid_argument("integrate_xg2: need at least one panel");
  if (!(x_lo > 0.0) || !(x_hi > x_lo))
    throw std::invalid_argument("integrate_xg2: need 0 < x_lo < x_hi");
  auto f = [](double x) {
    const double g = g_function(x);
    return static_cast<long double>(x) * g * g;
  };
  const long double h = (static_cast<long double>(x_hi) - x_lo) / n_panels;
  long double total = 0.0L;
  long double f_left = f(x_lo);
  for (int i = 0; i < n_panels; ++i) {
    const double a = x_lo + static_cast<double>(h * i);
    const double b = (i + 1 == n_panels) ? x_hi : x_lo + static_cast<double>(h * (i + 1));
    const long double f_mid = f(0.5 * (a + b));
    const long double f_right = f(b);
    total += (static_cast<long double>(b) - a) / 6.0L * (f_left + 4.0L * f_mid + f_right);
    f_left = f_right;
  }
  return static_cast<double>(total);
}

}  // namespace detail

namespace {

CConstant compute_c_impl() {
  const int cap = 16384;
  double prev = detail::integrate_xg2(512);
  for (int panels = 1024;; panels *= 2) {
    const double cur = detail::integrate_xg2(panels);
    const double rel = std::abs(cur - prev) / std::abs(cur);
    if (rel < 1e-7 || panels == cap) {
      if (rel > 1e-4)
        throw numerical_error("calibration constant quadrature failed to converge");
      CConstant c;
      c.value = cur / sqrt_pi;
      c.error_estimate = std::abs(cur - prev) / 15.0 / sqrt_pi;
      return c;
    }
    prev = cur;
  }
}

}  // namespace

const CConstant& compute_c_constant() {
  static const CConstant cached = compute_c_impl();
  return cached;
}

double arl_lower_bound(double threshold, int n_streams, double c_constant) {
  if (!std::isfinite(threshold) || threshold <= 0.0)
    throw std::domain_error("arl_lower_bound: threshold must be > 0");
  if (n_streams < 1) throw std::invalid_argument("arl_lower_bound: need at least one stream");
  if (!std::isfinite(c_constant) || c_constant <= 0.0)
    throw std::invalid_argument("arl_lower_bound: constant must be > 0");
  if (threshold >= 709.0) throw std::range_error("arl_lower_bound: exp(threshold) overflows");
  return std::exp(threshold) /
         (static_cast<double>(n_streams) * std::sqrt(threshold) * c_constant);
}

double calibrate_threshold(double target_arl, int n_streams, double c_constant) {
  if (n_streams < 1) throw std::invalid_argument("calibrate_threshold: need at least one stream");
  if (!std::isfinite(target_arl) || !std::isfinite(c_constant))
    throw std::domain_error("calibrate_threshold: inputs must be finite");
  const double arg = c_constant * static_cast<double>(n_streams) * target_arl;
  if (std::isinf(arg)) throw std::range_error("calibrate_threshold: C * M * target overflows");
  if (arg <= 0.0) throw std::domain_error("calibrate_threshold: C * M * target must be > 0");
  const double lambda = std::log(arg);
  if (lambda <= 0.0)
    throw std::invalid_argument("calibrate_threshold: target too small for a positive threshold");
  return lambda;
}

CalibrationResult calibrate(double target_arl, int n_streams) {
  const CConstant& c = compute_c_constant();
  CalibrationResult r;
  r.c_constant = c.value;
  r.quadrature_error_estimate = c.error_estimate;
  r.threshold = calibrate_threshold(target_arl, n_streams, c.value);
  r.target_arl = target_arl;
  r.n_streams = n_streams;
  return r;
}

}  // namespace bqcd
