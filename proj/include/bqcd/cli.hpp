#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bqcd {

// Command layer shared by the binary and the tests: a filled-in spec goes in,
// formatted results come out (file or stdout), failures map to exit codes.

enum class Command { edd, arl, sweep, calibrate, verify };

enum class OutputFormat { csv, json };

struct ExperimentSpec {
  Command command = Command::edd;
  int n_streams = 10;
  double nu = 0.0;  // change point; the arl command overrides it to +infinity
  double mu1 = 1.0;
  double threshold = 0.0;   // set exactly one of threshold / gamma
  double gamma = 0.0;       // target mean time between false alarms
  std::int64_t horizon = 50000;
  std::int64_t n_trials = 500;
  std::uint64_t seed = 42;
  int changed_stream = -1;
  std::string out_path;  // empty -> data on stdout
  OutputFormat format = OutputFormat::csv;
  int workers = 0;  // 0 -> BQCD_WORKERS env or hardware concurrency
  std::string label;
  std::vector<double> mu1_grid;  // sweep only
  std::vector<int> m_grid;       // sweep only
  std::int64_t cases = 1000;     // verify only
  std::int64_t max_len = 300;    // verify only
};

// Exit codes: 0 success, 2 usage/contract error, 3 estimation produced no
// usable trials, 4 numerical failure (quadrature, overflow), 1 anything else.
int run_command(const ExperimentSpec& spec);

std::string version_string();

}  // namespace bqcd
