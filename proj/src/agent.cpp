#include "bqcd/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace bqcd {

namespace {

// Uniform draw among the streams attaining the maximal statistic. `hint`
// short-circuits the common case of a unique maximizer.
int draw_among_maximizers(const std::vector<FocusStreamState>& streams, double max_stat,
                          Rng& rng) {
  std::vector<int> argmax;
  for (std::size_t i = 0; i < streams.size(); ++i)
    if (streams[i].stat == max_stat) argmax.push_back(static_cast<int>(i));
  if (argmax.size() == 1) return argmax.front();
  return argmax[static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(argmax.size())))];
}

}  // namespace

double epsilon_schedule(std::int64_t t, std::int64_t cp_estimate, int n_streams) {
  if (t < 1) throw std::invalid_argument("epsilon_schedule: tick must be >= 1");
  if (cp_estimate < 0 || cp_estimate > t)
    throw std::invalid_argument("epsilon_schedule: change-point estimate out of range");
  if (n_streams < 1) throw std::invalid_argument("epsilon_schedule: need at least one stream");
  const double gap = static_cast<double>(t - cp_estimate);
  const double eps = static_cast<double>(n_streams) / std::cbrt(std::max(1.0, gap));
  return std::min(1.0, eps);
}

AgentState init_agent(const AgentConfig& config, Rng& rng) {
  if (config.n_streams < 1) throw std::invalid_argument("init_agent: need at least one stream");
  if (!(config.threshold > 0.0) || !std::isfinite(config.threshold))
    throw std::invalid_argument("init_agent: threshold must be positive and finite");
  AgentState state;
  state.config = config;
  state.streams.assign(static_cast<std::size_t>(config.n_streams), FocusStreamState{});
  state.pull_counts.assign(static_cast<std::size_t>(config.n_streams), 0);
  // all statistics start equal at zero; break the tie once up front
  state.leader = static_cast<int>(uniform_int(rng, config.n_streams));
  return state;
}

Selection select_stream(const AgentState& state, Rng& rng) {
  if (state.stopped) throw std::logic_error("select_stream: agent already stopped");
  const double eps =
      epsilon_schedule(state.t + 1, state.global_cp_estimate, state.config.n_streams);
  Selection sel;
  if (bernoulli(rng, eps)) {
    sel.arm = static_cast<int>(uniform_int(rng, state.config.n_streams));
    sel.explored = true;
    return sel;
  }
  sel.explored = false;
  if (state.streams[static_cast<std::size_t>(state.leader)].stat == state.max_stat &&
      state.config.n_streams > 1) {
    // re-resolve ties on every call so persistent ties are split uniformly
    bool tie = false;
    for (std::size_t i = 0; i < state.streams.size(); ++i)
      if (static_cast<int>(i) != state.leader && state.streams[i].stat == state.max_stat) {
        tie = true;
        break;
      }
    if (tie) {
      sel.arm = draw_among_maximizers(state.streams, state.max_stat, rng);
      return sel;
    }
  }
  sel.arm = state.leader;
  return sel;
}

void agent_step(AgentState& state, double x, int arm, Rng& rng) {
  if (state.stopped) throw std::logic_error("agent_step: agent already stopped");
  if (arm < 0 || arm >= state.config.n_streams)
    throw std::invalid_argument("agent_step: stream index out of range");
  if (!std::isfinite(x)) throw std::domain_error("agent_step: observation must be finite");

  state.t += 1;
  FocusStreamState& s = state.streams[static_cast<std::size_t>(arm)];
  focus_update(s, x, state.t);
  state.pull_counts[static_cast<std::size_t>(arm)] += 1;

  // Leader refresh. Only the updated stream changed, so a full rescan is
  // needed only when the previous leader lost ground or an exact tie appears.
  if (s.stat > state.max_stat) {
    state.leader = arm;
    state.max_stat = s.stat;
  } else if (arm == state.leader || s.stat == state.max_stat) {
    double best = state.streams[0].stat;
    for (std::size_t i = 1; i < state.streams.size(); ++i)
      best = std::max(best, state.streams[i].stat);
    state.max_stat = best;
    state.leader = draw_among_maximizers(state.streams, best, rng);
  }
  state.global_cp_estimate = state.streams[static_cast<std::size_t>(state.leader)].local_cp_estimate;

  if (state.max_stat >= state.config.threshold) {
    state.stopped = true;
    state.declared_stream = state.leader;
  }
}

}  // namespace bqcd
