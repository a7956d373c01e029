#pragma once

#include <cstdint>

namespace bqcd {

// Threshold calibration for the agent: a universal constant obtained by
// quadrature links the threshold to a guaranteed mean time between false
// alarms, lambda = log(C * M * gamma).

// Boundary-crossing density factor g(x) = (2/x^2) exp(-2 sum_n Phi(-x sqrt(n)/2)/n).
// The series is summed until a term drops below 1e-12 (that term is still
// included) or term_cap terms have been added.
double g_function(double x, std::int64_t term_cap = 10000000);

struct CConstant {
  double value = 0.0;
  double error_estimate = 0.0;  // Richardson estimate from the final refinement
};

// integral of x g(x)^2 / sqrt(pi) over [0.01, 30], Simpson refined until the
// relative change is < 1e-7 (throws numerical_error if still > 1e-4 at the
// panel cap). Computed once and cached.
const CConstant& compute_c_constant();

namespace detail {
// composite Simpson for x g(x)^2 on [x_lo, x_hi]; exposed for convergence tests
double integrate_xg2(int n_panels, double x_lo = 0.01, double x_hi = 30.0);
}  // namespace detail

// Guaranteed mean time between false alarms: exp(lambda) / (M sqrt(lambda) C).
double arl_lower_bound(double threshold, int n_streams, double c_constant);

// Smallest threshold whose guarantee meets target_arl: log(C * M * target_arl).
double calibrate_threshold(double target_arl, int n_streams, double c_constant);

struct CalibrationResult {
  double c_constant = 0.0;
  double threshold = 0.0;
  double target_arl = 0.0;
  int n_streams = 0;
  double quadrature_error_estimate = 0.0;
};

CalibrationResult calibrate(double target_arl, int n_streams);

}  // namespace bqcd
