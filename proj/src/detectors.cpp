#include "bqcd/detectors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bqcd {

CusumState cusum_update(CusumState state, double x) {
  if (!std::isfinite(x)) throw std::domain_error("cusum_update: non-finite observation");
  if (state.mu1 == 0.0) throw std::invalid_argument("cusum_update: mu1 must be nonzero");
  const double llr = state.mu1 * x - 0.5 * state.mu1 * state.mu1;
  state.stat = std::max(state.stat + llr, 0.0);
  state.n_obs += 1;
  return state;
}

GlrResult glr_stat_bruteforce(const std::vector<double>& xs) {
  GlrResult best;
  const std::int64_t n = static_cast<std::int64_t>(xs.size());
  if (n == 0) return best;
  std::vector<long double> prefix(static_cast<std::size_t>(n) + 1, 0.0L);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!std::isfinite(xs[static_cast<std::size_t>(i)]))
      throw std::domain_error("glr_stat_bruteforce: non-finite observation");
    prefix[static_cast<std::size_t>(i) + 1] =
        prefix[static_cast<std::size_t>(i)] + xs[static_cast<std::size_t>(i)];
  }
  const long double total = prefix[static_cast<std::size_t>(n)];
  for (std::int64_t k = 0; k < n; ++k) {
    const long double seg = total - prefix[static_cast<std::size_t>(k)];
    const double val = static_cast<double>(seg * seg / (2.0L * static_cast<long double>(n - k)));
    if (val > best.stat) {
      best.stat = val;
      best.argmax_index = k;
    }
  }
  return best;
}

void focus_update(FocusStreamState& state, double x, std::int64_t t) {
  if (!std::isfinite(x)) throw std::domain_error("focus_update: non-finite observation");
  if (t <= state.last_time)
    throw std::invalid_argument("focus_update: global time must be strictly increasing");

  state.n_obs += 1;
  state.sum += x;
  state.last_time = t;
  const std::int64_t n = state.n_obs;
  const double s = state.sum;

  // Positive side: pop stored candidates whose quadratic the new one
  // dominates over their whole remaining interval (crossing point at or below
  // the stored boundary). The sentinel is never popped.
  auto& pos = state.pos;
  while (pos.size() > 1) {
    const Candidate& c = pos.back();
    if (2.0 * (s - c.s_start) <= c.boundary * static_cast<double>(n - c.n_start))
      pos.pop_back();
    else
      break;
  }
  {
    const Candidate& c = pos.back();
    const double b = std::max(0.0, 2.0 * (s - c.s_start) / static_cast<double>(n - c.n_start));
    pos.push_back(Candidate{n, s, b, t});
  }

  // Negative side, mirrored.
  auto& neg = state.neg;
  while (neg.size() > 1) {
    const Candidate& c = neg.back();
    if (2.0 * (s - c.s_start) >= c.boundary * static_cast<double>(n - c.n_start))
      neg.pop_back();
    else
      break;
  }
  {
    const Candidate& c = neg.back();
    const double b = std::min(0.0, 2.0 * (s - c.s_start) / static_cast<double>(n - c.n_start));
    neg.push_back(Candidate{n, s, b, t});
  }

  // Statistic: best surviving segment across both sides; ties go to the
  // earliest segment start.
  double best_v = -1.0;
  const Candidate* best_c = nullptr;
  for (const auto* list : {&pos, &neg}) {
    for (const Candidate& c : *list) {
      if (n <= c.n_start) continue;  // the just-appended candidate carries no segment yet
      const double d = s - c.s_start;
      const double v = d * d / (2.0 * static_cast<double>(n - c.n_start));
      if (v > best_v || (v == best_v && best_c != nullptr && c.n_start < best_c->n_start)) {
        best_v = v;
        best_c = &c;
      }
    }
  }
  state.stat = best_v;
  state.local_cp_estimate = best_c->start_time;
}

std::int64_t focus_candidate_count(const FocusStreamState& state) {
  return static_cast<std::int64_t>(state.pos.size() + state.neg.size());
}

}  // namespace bqcd
