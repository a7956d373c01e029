#pragma once

#include <stdexcept>

namespace bqcd {

// A numerical routine could not meet its stated accuracy (quadrature
// non-convergence, overflow-adjacent evaluation).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A Monte Carlo estimate ended with no usable trials.
struct estimation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace bqcd
