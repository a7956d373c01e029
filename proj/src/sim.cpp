#include "bqcd/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace bqcd {

namespace {

void validate_config(const TrialConfig& config) {
  if (config.n_streams < 1) throw std::invalid_argument("trial: need at least one stream");
  if (!(config.threshold > 0.0) || !std::isfinite(config.threshold))
    throw std::invalid_argument("trial: threshold must be positive and finite");
  if (config.horizon < 1) throw std::invalid_argument("trial: horizon must be >= 1");
  if (!std::isfinite(config.mu0) || !std::isfinite(config.mu1))
    throw std::invalid_argument("trial: means must be finite");
  if (std::isnan(config.change_point) || config.change_point < 0.0)
    throw std::invalid_argument("trial: change point must be >= 0 or +infinity");
  if (config.changed_stream < -1 || config.changed_stream >= config.n_streams)
    throw std::invalid_argument("trial: changed stream out of range");
}

}  // namespace

int resolved_changed_stream(const TrialConfig& config) {
  return config.changed_stream >= 0 ? config.changed_stream : config.n_streams - 1;
}

double generate_observation(const TrialConfig& config, int arm, std::int64_t t, Rng& rng) {
  const bool post_change = arm == resolved_changed_stream(config) &&
                           static_cast<double>(t) > config.change_point;
  return (post_change ? config.mu1 : config.mu0) + gaussian(rng);
}

TrialOutcome run_trial(const TrialConfig& config) {
  validate_config(config);
  Rng rng(config.seed);
  AgentState agent = init_agent({config.n_streams, config.threshold, config.seed}, rng);
  while (!agent.stopped && agent.t < config.horizon) {
    const Selection sel = select_stream(agent, rng);
    const double x = generate_observation(config, sel.arm, agent.t + 1, rng);
    agent_step(agent, x, sel.arm, rng);
  }
  TrialOutcome out;
  out.stopping_time = agent.t;
  out.censored = !agent.stopped;
  out.final_stat = agent.max_stat;
  out.cp_estimate_at_stop = agent.global_cp_estimate;
  if (agent.stopped) {
    out.declared_stream = agent.declared_stream;
    if (std::isfinite(config.change_point)) {
      out.false_alarm = static_cast<double>(agent.t) <= config.change_point;
      if (!out.false_alarm)
        out.detection_delay = static_cast<double>(agent.t) - config.change_point;
    }
  }
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("BQCD_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

std::vector<TrialOutcome> run_trials(const TrialConfig& config, std::int64_t n_trials,
                                     int workers) {
  validate_config(config);
  if (n_trials < 1) throw std::invalid_argument("run_trials: need at least one trial");
  if (workers <= 0) workers = default_workers();
  workers = static_cast<int>(std::min<std::int64_t>(workers, n_trials));

  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n_trials));
  auto run_one = [&](std::int64_t i) {
    TrialConfig c = config;
    c.seed = mix_seed(config.seed, static_cast<std::uint64_t>(i));
    outcomes[static_cast<std::size_t>(i)] = run_trial(c);
  };

  if (workers == 1) {
    for (std::int64_t i = 0; i < n_trials; ++i) run_one(i);
    return outcomes;
  }

  std::atomic<std::int64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::int64_t i = next.fetch_add(1);
        if (i >= n_trials) return;
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
  return outcomes;
}

namespace {

// mean and standard error with an explicit error-divisor count
void accumulate(const std::vector<double>& values, std::int64_t se_count, double& mean,
                double& std_error) {
  const std::int64_t n = static_cast<std::int64_t>(values.size());
  long double sum = 0.0L;
  for (double v : values) sum += v;
  const long double m = sum / static_cast<long double>(n);
  mean = static_cast<double>(m);
  if (n < 2 || se_count < 1) {
    std_error = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  long double ss = 0.0L;
  for (double v : values) {
    const long double d = static_cast<long double>(v) - m;
    ss += d * d;
  }
  const long double var = ss / static_cast<long double>(n - 1);
  std_error = static_cast<double>(std::sqrt(var / static_cast<long double>(se_count)));
}

}  // namespace

MonteCarloSummary estimate_edd(const TrialConfig& config, std::int64_t n_trials, int workers) {
  if (!std::isfinite(config.change_point))
    throw std::invalid_argument("estimate_edd: change point must be finite");
  const std::vector<TrialOutcome> outcomes = run_trials(config, n_trials, workers);

  MonteCarloSummary s;
  s.n_trials = n_trials;
  std::vector<double> delays;
  delays.reserve(outcomes.size());
  for (const TrialOutcome& o : outcomes) {
    if (o.censored) {
      ++s.n_censored;
    } else if (o.false_alarm) {
      ++s.n_false_alarms;
    } else if (o.detection_delay) {
      delays.push_back(*o.detection_delay);
    }
  }
  s.n_included = static_cast<std::int64_t>(delays.size());
  if (s.n_included == 0) {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.std_error = std::numeric_limits<double>::quiet_NaN();
    s.status = SummaryStatus::estimation_failure;
    s.note = "no trial produced a detection after the change point";
    return s;
  }
  accumulate(delays, s.n_included, s.mean, s.std_error);
  if (s.n_censored * 20 > n_trials) {  // more than 5% censored
    s.status = SummaryStatus::warning;
    s.note = "censoring above 5%; delay estimate is biased low";
  }
  return s;
}

MonteCarloSummary estimate_arl(const TrialConfig& config, std::int64_t n_trials, int workers) {
  if (std::isfinite(config.change_point))
    throw std::invalid_argument("estimate_arl: change point must be +infinity");
  const std::vector<TrialOutcome> outcomes = run_trials(config, n_trials, workers);

  MonteCarloSummary s;
  s.n_trials = n_trials;
  std::vector<double> times;
  times.reserve(outcomes.size());
  for (const TrialOutcome& o : outcomes) {
    if (o.censored) ++s.n_censored;
    times.push_back(static_cast<double>(o.stopping_time));  // censored count at horizon
  }
  s.n_included = n_trials;
  accumulate(times, n_trials - s.n_censored, s.mean, s.std_error);
  if (s.n_censored * 20 > n_trials) {
    s.status = SummaryStatus::warning;
    s.note = "censoring above 5%; alarm-time estimate is biased low";
  }
  return s;
}

std::vector<SweepCell> sweep_edd(const std::vector<double>& mu1_grid,
                                 const std::vector<int>& m_grid, double change_point,
                                 double threshold, std::int64_t n_trials,
                                 std::uint64_t master_seed, std::int64_t horizon, int workers) {
  if (mu1_grid.empty() || m_grid.empty())
    throw std::invalid_argument("sweep_edd: grids must be non-empty");
  std::vector<SweepCell> cells;
  cells.reserve(mu1_grid.size() * m_grid.size());
  std::uint64_t cell_index = 0;
  for (int m : m_grid) {
    for (double mu1 : mu1_grid) {
      TrialConfig cfg;
      cfg.n_streams = m;
      cfg.change_point = change_point;
      cfg.mu1 = mu1;
      cfg.threshold = threshold;
      cfg.horizon = horizon;
      cfg.seed = mix_seed(master_seed, cell_index++);
      SweepCell cell;
      cell.mu1 = mu1;
      cell.n_streams = m;
      cell.summary = estimate_edd(cfg, n_trials, workers);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace bqcd
