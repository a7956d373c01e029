#pragma once

#include <cstdint>
#include <vector>

namespace bqcd {

// One-sided CUSUM for a unit-variance Gaussian stream with known post-change
// mean mu1 (log-likelihood-ratio increments, recursion clamped at zero).
struct CusumState {
  double stat = 0.0;  // >= 0 at all times
  double mu1 = 1.0;   // known post-change mean, must be nonzero
  std::int64_t n_obs = 0;
};

CusumState cusum_update(CusumState state, double x);

struct GlrResult {
  double stat = 0.0;
  std::int64_t argmax_index = 0;  // maximizing segment start k; ties -> smallest k
};

// Exact two-sided Gaussian GLR over every segment start: max over 0 <= k < n
// of (sum of x[k..n-1])^2 / (2 (n-k)). Reference oracle for the pruned
// detector; (0, 0) on empty input.
GlrResult glr_stat_bruteforce(const std::vector<double>& xs);

// One potential change start surviving functional pruning. The boundary is
// the point in mean-space from which this candidate's quadratic dominates its
// predecessors; each list starts with a permanent sentinel (everything zero).
struct Candidate {
  std::int64_t n_start = 0;    // stream observations recorded when the segment begins
  double s_start = 0.0;        // running observation sum at that point
  double boundary = 0.0;       // pruning boundary; 0 for the sentinel
  std::int64_t start_time = 0; // global tick when created; 0 for the sentinel
};

struct FocusStreamState {
  std::int64_t n_obs = 0;
  double sum = 0.0;
  std::vector<Candidate> pos{Candidate{}};
  std::vector<Candidate> neg{Candidate{}};
  double stat = 0.0;                 // current GLR value, >= 0
  std::int64_t local_cp_estimate = 0;  // start_time of the maximizing candidate
  std::int64_t last_time = 0;        // global tick of the latest observation
};

// Functional-pruning GLR update. After every call, stat equals
// glr_stat_bruteforce over the stream's full history (the module tests pin
// this to 1e-9), at O(candidates) = O(log n) amortized cost per update.
void focus_update(FocusStreamState& state, double x, std::int64_t t);

std::int64_t focus_candidate_count(const FocusStreamState& state);

}  // namespace bqcd
