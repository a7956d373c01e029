#include "bqcd/cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bqcd/calibrate.hpp"
#include "bqcd/detectors.hpp"
#include "bqcd/errors.hpp"
#include "bqcd/sim.hpp"

namespace bqcd {

namespace {

using nlohmann::json;

constexpr const char* csv_header =
    "param_set,lambda,nu,mu1,M,trials,mean,std_error,censored,false_alarms\n";

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* status_name(SummaryStatus s) {
  switch (s) {
    case SummaryStatus::ok: return "ok";
    case SummaryStatus::warning: return "warning";
    case SummaryStatus::estimation_failure: return "estimation_failure";
  }
  return "unknown";
}

std::string csv_row(const std::string& param_set, double lambda, double nu, double mu1,
                    int n_streams, std::int64_t trials, const MonteCarloSummary& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%s,%s,%d,%" PRId64 ",%s,%s,%" PRId64 ",%" PRId64 "\n",
                param_set.c_str(), fmt_double(lambda).c_str(), fmt_double(nu).c_str(),
                fmt_double(mu1).c_str(), n_streams, trials, fmt_double(s.mean).c_str(),
                fmt_double(s.std_error).c_str(), s.n_censored, s.n_false_alarms);
  return buf;
}

json nu_json(double nu) {
  if (std::isinf(nu)) return json("inf");
  return json(nu);
}

json summary_json(const std::string& param_set, double lambda, double nu, double mu1,
                  int n_streams, std::int64_t trials, const MonteCarloSummary& s) {
  json row;
  row["param_set"] = param_set;
  row["lambda"] = lambda;
  row["nu"] = nu_json(nu);
  row["mu1"] = mu1;
  row["M"] = n_streams;
  row["trials"] = trials;
  row["mean"] = s.mean;
  row["std_error"] = s.std_error;
  row["censored"] = s.n_censored;
  row["false_alarms"] = s.n_false_alarms;
  row["n_included"] = s.n_included;
  row["status"] = status_name(s.status);
  if (!s.note.empty()) row["note"] = s.note;
  return row;
}

json config_json(const ExperimentSpec& spec, double resolved_threshold, double resolved_nu) {
  json cfg;
  const char* names[] = {"edd", "arl", "sweep", "calibrate", "verify"};
  cfg["command"] = names[static_cast<int>(spec.command)];
  cfg["n_streams"] = spec.n_streams;
  cfg["nu"] = nu_json(resolved_nu);
  cfg["mu1"] = spec.mu1;
  cfg["threshold"] = resolved_threshold;
  if (spec.gamma > 0.0) cfg["gamma"] = spec.gamma;
  cfg["horizon"] = spec.horizon;
  cfg["n_trials"] = spec.n_trials;
  cfg["seed"] = spec.seed;
  cfg["changed_stream"] = spec.changed_stream;
  cfg["workers"] = spec.workers;
  if (!spec.label.empty()) cfg["label"] = spec.label;
  if (!spec.mu1_grid.empty()) cfg["mu1_grid"] = spec.mu1_grid;
  if (!spec.m_grid.empty()) cfg["m_grid"] = spec.m_grid;
  return cfg;
}

// Whole-file replace via a temp file so readers never observe a partial write.
void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot move output into place: " + path);
  }
}

void emit(const ExperimentSpec& spec, const std::string& content) {
  if (spec.out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    atomic_write_file(spec.out_path, content);
  }
}

std::string default_param_set(const ExperimentSpec& spec, const char* fallback) {
  return spec.label.empty() ? fallback : spec.label;
}

// Resolves the mutually exclusive threshold/gamma pair into a threshold.
double resolve_threshold(const ExperimentSpec& spec) {
  const bool has_lambda = spec.threshold > 0.0;
  const bool has_gamma = spec.gamma > 0.0;
  if (has_lambda == has_gamma)
    throw std::invalid_argument("set exactly one of threshold and gamma");
  if (has_lambda) return spec.threshold;
  return calibrate_threshold(spec.gamma, spec.n_streams, compute_c_constant().value);
}

int finish_summaries(const ExperimentSpec& spec, const std::vector<SweepCell>& cells,
                     double lambda, double nu, const char* fallback_name) {
  std::string content;
  json doc;
  if (spec.format == OutputFormat::csv) {
    content = csv_header;
    for (const SweepCell& c : cells)
      content += csv_row(default_param_set(spec, fallback_name), lambda, nu, c.mu1,
                         c.n_streams, spec.n_trials, c.summary);
  } else {
    doc["version"] = version_string();
    doc["config"] = config_json(spec, lambda, nu);
    doc["results"] = json::array();
    for (const SweepCell& c : cells)
      doc["results"].push_back(summary_json(default_param_set(spec, fallback_name), lambda, nu,
                                            c.mu1, c.n_streams, spec.n_trials, c.summary));
    content = doc.dump(2) + "\n";
  }
  emit(spec, content);

  int rc = 0;
  for (const SweepCell& c : cells) {
    std::fprintf(stderr, "%s: M=%d mu1=%s mean=%s se=%s (trials=%" PRId64 ", censored=%" PRId64
                         ", false_alarms=%" PRId64 ", status=%s)\n",
                 fallback_name, c.n_streams, fmt_double(c.mu1).c_str(),
                 fmt_double(c.summary.mean).c_str(), fmt_double(c.summary.std_error).c_str(),
                 spec.n_trials, c.summary.n_censored, c.summary.n_false_alarms,
                 status_name(c.summary.status));
    if (c.summary.status == SummaryStatus::estimation_failure) rc = 3;
    if (!c.summary.note.empty()) std::fprintf(stderr, "  note: %s\n", c.summary.note.c_str());
  }
  return rc;
}

int cmd_edd(const ExperimentSpec& spec) {
  const double lambda = resolve_threshold(spec);
  TrialConfig cfg;
  cfg.n_streams = spec.n_streams;
  cfg.change_point = spec.nu;
  cfg.mu1 = spec.mu1;
  cfg.threshold = lambda;
  cfg.horizon = spec.horizon;
  cfg.seed = spec.seed;
  cfg.changed_stream = spec.changed_stream;
  SweepCell cell{spec.mu1, spec.n_streams, estimate_edd(cfg, spec.n_trials, spec.workers)};
  return finish_summaries(spec, {cell}, lambda, spec.nu, "edd");
}

int cmd_arl(const ExperimentSpec& spec) {
  const double lambda = resolve_threshold(spec);
  const double nu = std::numeric_limits<double>::infinity();
  TrialConfig cfg;
  cfg.n_streams = spec.n_streams;
  cfg.change_point = nu;
  cfg.mu1 = spec.mu1;
  cfg.threshold = lambda;
  cfg.horizon = spec.horizon;
  cfg.seed = spec.seed;
  cfg.changed_stream = spec.changed_stream;
  SweepCell cell{spec.mu1, spec.n_streams, estimate_arl(cfg, spec.n_trials, spec.workers)};
  return finish_summaries(spec, {cell}, lambda, nu, "arl");
}

int cmd_sweep(const ExperimentSpec& spec) {
  if (spec.mu1_grid.empty() || spec.m_grid.empty())
    throw std::invalid_argument("sweep needs --mu1-grid and --m-grid");
  const double lambda = resolve_threshold(spec);
  const std::vector<SweepCell> cells =
      sweep_edd(spec.mu1_grid, spec.m_grid, spec.nu, lambda, spec.n_trials, spec.seed,
                spec.horizon, spec.workers);
  return finish_summaries(spec, cells, lambda, spec.nu, "sweep");
}

int cmd_calibrate(const ExperimentSpec& spec) {
  if (!(spec.gamma > 0.0)) throw std::invalid_argument("calibrate needs --gamma > 0");
  if (spec.threshold > 0.0)
    throw std::invalid_argument("calibrate takes --gamma, not --threshold");
  const CalibrationResult r = calibrate(spec.gamma, spec.n_streams);

  std::string content;
  if (spec.format == OutputFormat::csv) {
    MonteCarloSummary s;
    s.mean = r.c_constant;
    s.std_error = r.quadrature_error_estimate;
    content = csv_header;
    content += csv_row(default_param_set(spec, "calibrate"), r.threshold, 0.0, 0.0,
                       spec.n_streams, 0, s);
  } else {
    json doc;
    doc["version"] = version_string();
    doc["config"] = config_json(spec, r.threshold, spec.nu);
    json row;
    row["param_set"] = default_param_set(spec, "calibrate");
    row["c_constant"] = r.c_constant;
    row["quadrature_error_estimate"] = r.quadrature_error_estimate;
    row["threshold"] = r.threshold;
    row["target_arl"] = r.target_arl;
    row["M"] = r.n_streams;
    row["arl_lower_bound"] = arl_lower_bound(r.threshold, r.n_streams, r.c_constant);
    doc["results"] = json::array({row});
    content = doc.dump(2) + "\n";
  }
  emit(spec, content);
  std::fprintf(stderr, "calibrate: C=%.12g threshold=%.12g (target=%s, M=%d)\n", r.c_constant,
               r.threshold, fmt_double(r.target_arl).c_str(), r.n_streams);
  return 0;
}

// Self-checks used by the verify command; each returns true on success.

bool verify_focus_vs_oracle(std::int64_t cases, std::int64_t max_len) {
  Rng rng(9001);
  for (std::int64_t c = 0; c < cases; ++c) {
    const std::int64_t len = 1 + uniform_int(rng, max_len);
    FocusStreamState st;
    std::vector<double> xs;
    for (std::int64_t t = 1; t <= len; ++t) {
      xs.push_back(gaussian(rng));
      focus_update(st, xs.back(), t);
    }
    const GlrResult oracle = glr_stat_bruteforce(xs);
    if (std::abs(st.stat - oracle.stat) > 1e-9) return false;
    if (st.local_cp_estimate != oracle.argmax_index) return false;
  }
  return true;
}

bool verify_cusum_recursion(std::int64_t cases, std::int64_t max_len) {
  Rng rng(9002);
  for (std::int64_t c = 0; c < cases; ++c) {
    const std::int64_t len = 1 + uniform_int(rng, max_len);
    const double mu1 = (bernoulli(rng, 0.5) ? 1.0 : -1.0) * (0.5 + uniform01(rng));
    CusumState st{0.0, mu1, 0};
    std::vector<long double> llr_prefix{0.0L};
    long double running_min = 0.0L;
    for (std::int64_t t = 0; t < len; ++t) {
      const double x = gaussian(rng);
      st = cusum_update(st, x);
      llr_prefix.push_back(llr_prefix.back() + (mu1 * x - 0.5 * mu1 * mu1));
      running_min = std::min(running_min, llr_prefix[llr_prefix.size() - 2]);
      const long double max_form = llr_prefix.back() - std::min(running_min, llr_prefix.back());
      if (std::abs(st.stat - static_cast<double>(max_form)) > 1e-9) return false;
    }
  }
  return true;
}

bool verify_sign_symmetry(std::int64_t cases, std::int64_t max_len) {
  Rng rng(9003);
  for (std::int64_t c = 0; c < cases; ++c) {
    const std::int64_t len = 1 + uniform_int(rng, max_len);
    FocusStreamState a, b;
    for (std::int64_t t = 1; t <= len; ++t) {
      const double x = gaussian(rng);
      focus_update(a, x, t);
      focus_update(b, -x, t);
      if (a.stat != b.stat || a.local_cp_estimate != b.local_cp_estimate) return false;
    }
  }
  return true;
}

bool verify_agent_invariants(std::int64_t cases) {
  Rng rng(9004);
  for (std::int64_t c = 0; c < std::max<std::int64_t>(1, cases / 20); ++c) {
    AgentConfig cfg;
    cfg.n_streams = 1 + static_cast<int>(uniform_int(rng, 5));
    cfg.threshold = 4.0 + 4.0 * uniform01(rng);
    AgentState agent = init_agent(cfg, rng);
    while (!agent.stopped && agent.t < 2000) {
      const Selection sel = select_stream(agent, rng);
      if (sel.arm < 0 || sel.arm >= cfg.n_streams) return false;
      agent_step(agent, gaussian(rng), sel.arm, rng);

      std::int64_t pulls = 0;
      double best = 0.0;
      for (int i = 0; i < cfg.n_streams; ++i) {
        pulls += agent.pull_counts[static_cast<std::size_t>(i)];
        best = std::max(best, agent.streams[static_cast<std::size_t>(i)].stat);
      }
      if (pulls != agent.t) return false;
      if (agent.max_stat != best) return false;
      if (agent.streams[static_cast<std::size_t>(agent.leader)].stat != best) return false;
      if (agent.global_cp_estimate !=
          agent.streams[static_cast<std::size_t>(agent.leader)].local_cp_estimate)
        return false;
      if (agent.stopped != (best >= cfg.threshold)) return false;
      if (agent.stopped && agent.declared_stream != agent.leader) return false;
    }
  }
  return true;
}

int cmd_verify(const ExperimentSpec& spec) {
  if (spec.cases < 1 || spec.max_len < 1)
    throw std::invalid_argument("verify needs positive --cases and --max-len");
  struct Check {
    const char* name;
    bool passed;
  };
  const Check checks[] = {
      {"FOCuS == GLR oracle", verify_focus_vs_oracle(spec.cases, spec.max_len)},
      {"CUSUM recursion == max-form", verify_cusum_recursion(spec.cases, spec.max_len)},
      {"sign symmetry", verify_sign_symmetry(spec.cases / 5 + 1, spec.max_len)},
      {"agent invariants", verify_agent_invariants(spec.cases)},
  };
  bool all = true;
  for (const Check& c : checks) {
    std::printf("%s: %s\n", c.name, c.passed ? "PASS" : "FAIL");
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

int run_command_impl(const ExperimentSpec& spec) {
  switch (spec.command) {
    case Command::edd: return cmd_edd(spec);
    case Command::arl: return cmd_arl(spec);
    case Command::sweep: return cmd_sweep(spec);
    case Command::calibrate: return cmd_calibrate(spec);
    case Command::verify: return cmd_verify(spec);
  }
  throw std::invalid_argument("unknown command");
}

}  // namespace

std::string version_string() {
#ifdef BQCD_VERSION
  return BQCD_VERSION;
#else
  return "unknown";
#endif
}

int run_command(const ExperimentSpec& spec) {
  try {
    return run_command_impl(spec);
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::range_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const estimation_error& e) {
    std::fprintf(stderr, "estimation error: %s\n", e.what());
    return 3;
  } catch (const std::logic_error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace bqcd
