#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bqcd/agent.hpp"
#include "bqcd/rng.hpp"

namespace bqcd {

// Monte Carlo harness: Gaussian streams with a mean shift on one stream at a
// (possibly infinite) change point, sampled by the adaptive agent.

struct TrialConfig {
  int n_streams = 1;
  double change_point = 0.0;  // observations at ticks > change_point are post-change;
                              // +infinity means the change never happens
  double mu0 = 0.0;
  double mu1 = 1.0;
  double threshold = 0.0;
  std::int64_t horizon = 50000;
  std::uint64_t seed = 0;
  int changed_stream = -1;  // -1 selects the last stream
};

struct TrialOutcome {
  std::int64_t stopping_time = 0;  // tick of the alarm, or horizon if censored
  std::optional<int> declared_stream;
  std::int64_t cp_estimate_at_stop = 0;
  double final_stat = 0.0;
  bool censored = false;
  std::optional<double> detection_delay;  // stopping_time - change_point, detections only
  bool false_alarm = false;               // alarm at or before a finite change point
};

enum class SummaryStatus { ok, warning, estimation_failure };

struct MonteCarloSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t n_trials = 0;
  std::int64_t n_censored = 0;
  std::int64_t n_false_alarms = 0;
  std::int64_t n_included = 0;  // trials contributing to the mean
  SummaryStatus status = SummaryStatus::ok;
  std::string note;
};

int resolved_changed_stream(const TrialConfig& config);

// Mean mu1 applies only on the changed stream strictly after the change point.
double generate_observation(const TrialConfig& config, int arm, std::int64_t t, Rng& rng);

TrialOutcome run_trial(const TrialConfig& config);

// Runs n_trials independent replicates; trial i uses seed mix_seed(config.seed, i)
// regardless of worker count, so results do not depend on scheduling.
std::vector<TrialOutcome> run_trials(const TrialConfig& config, std::int64_t n_trials,
                                     int workers = 0);

// Mean detection delay over trials that alarm after a finite change point.
MonteCarloSummary estimate_edd(const TrialConfig& config, std::int64_t n_trials,
                               int workers = 0);

// Mean time to (false) alarm with no change; censored runs count at the horizon.
MonteCarloSummary estimate_arl(const TrialConfig& config, std::int64_t n_trials,
                               int workers = 0);

struct SweepCell {
  double mu1 = 0.0;
  int n_streams = 0;
  MonteCarloSummary summary;
};

std::vector<SweepCell> sweep_edd(const std::vector<double>& mu1_grid,
                                 const std::vector<int>& m_grid, double change_point,
                                 double threshold, std::int64_t n_trials,
                                 std::uint64_t master_seed, std::int64_t horizon = 50000,
                                 int workers = 0);

// BQCD_WORKERS env var, else hardware concurrency, else 1.
int default_workers();

}  // namespace bqcd
