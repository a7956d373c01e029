#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bqcd/detectors.hpp"
#include "bqcd/rng.hpp"

namespace bqcd {

// One detector per stream plus an exploration policy that concentrates pulls
// on the stream whose evidence of a mean shift is currently strongest.

struct AgentConfig {
  int n_streams = 1;
  double threshold = 0.0;
  std::uint64_t seed = 0;  // provenance only; callers own the generator
};

struct AgentState {
  AgentConfig config;
  std::int64_t t = 0;  // observations consumed so far; ticks are 1-based
  std::vector<FocusStreamState> streams;
  int leader = 0;                       // argmax of per-stream statistics
  std::int64_t global_cp_estimate = 0;  // leader's change-point estimate
  double max_stat = 0.0;                // cached streams[leader].stat
  bool stopped = false;
  std::optional<int> declared_stream;
  std::vector<std::int64_t> pull_counts;
};

// Exploration probability for the pull at tick t given the current
// change-point estimate: decays like the inverse cube root of the time
// elapsed since the estimated change, floored so it never exceeds 1.
double epsilon_schedule(std::int64_t t, std::int64_t cp_estimate, int n_streams);

AgentState init_agent(const AgentConfig& config, Rng& rng);

struct Selection {
  int arm = 0;
  bool explored = false;
};

// Chooses the stream to sample at tick state.t + 1. Ties among maximal
// statistics are broken uniformly at random on each call.
Selection select_stream(const AgentState& state, Rng& rng);

// Feeds observation x (drawn from stream `arm`) into the agent, advancing the
// tick, refreshing the leader and change-point estimate, and stopping once
// the leading statistic reaches the threshold.
void agent_step(AgentState& state, double x, int arm, Rng& rng);

}  // namespace bqcd
