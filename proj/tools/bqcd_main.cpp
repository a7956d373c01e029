#include <cstdio>
#include <map>
#include <string>

#include "CLI11.hpp"

#include "bqcd/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, bqcd::ExperimentSpec& spec) {
  cmd->add_option("--streams,-M", spec.n_streams, "number of streams")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--mu1", spec.mu1, "post-change mean of the changed stream");
  cmd->add_option("--nu", spec.nu, "change point (observations before the shift)");
  auto* thr = cmd->add_option("--threshold", spec.threshold, "detection threshold lambda");
  cmd->add_option("--gamma", spec.gamma,
                  "target mean time between false alarms (sets the threshold)")
      ->excludes(thr);
  cmd->add_option("--horizon", spec.horizon, "per-trial tick budget")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--trials", spec.n_trials, "Monte Carlo replicates")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", spec.seed, "master seed");
  cmd->add_option("--workers", spec.workers,
                  "worker threads (0 = BQCD_WORKERS env or hardware)");
  cmd->add_option("--out,-o", spec.out_path, "output file (omit for stdout)");
  cmd->add_option("--format", spec.format, "output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, bqcd::OutputFormat>{{"csv", bqcd::OutputFormat::csv},
                                                    {"json", bqcd::OutputFormat::json}},
          CLI::ignore_case));
  cmd->add_option("--label", spec.label, "param_set label for output rows");
  cmd->add_option("--changed-stream", spec.changed_stream,
                  "index of the stream that changes (-1 = last)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-stream bandit change detection simulator"};
  app.set_version_flag("--version", bqcd::version_string());
  app.set_config("--config");
  app.require_subcommand(1);

  bqcd::ExperimentSpec spec;

  CLI::App* edd = app.add_subcommand("edd", "mean detection delay after a change");
  add_common_options(edd, spec);

  CLI::App* arl = app.add_subcommand("arl", "mean time to false alarm (no change)");
  add_common_options(arl, spec);

  CLI::App* sweep = app.add_subcommand("sweep", "delay grid over mu1 and stream counts");
  add_common_options(sweep, spec);
  sweep->add_option("--mu1-grid", spec.mu1_grid, "comma-separated post-change means")
      ->delimiter(',');
  sweep->add_option("--m-grid", spec.m_grid, "comma-separated stream counts")->delimiter(',');

  CLI::App* calibrate =
      app.add_subcommand("calibrate", "threshold constant and calibrated threshold");
  add_common_options(calibrate, spec);

  CLI::App* verify = app.add_subcommand("verify", "internal cross-checks");
  verify->add_option("--cases", spec.cases, "random cases per check")
      ->check(CLI::PositiveNumber);
  verify->add_option("--max-len", spec.max_len, "maximum sequence length")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand(edd)) spec.command = bqcd::Command::edd;
  else if (app.got_subcommand(arl)) spec.command = bqcd::Command::arl;
  else if (app.got_subcommand(sweep)) spec.command = bqcd::Command::sweep;
  else if (app.got_subcommand(calibrate)) spec.command = bqcd::Command::calibrate;
  else if (app.got_subcommand(verify)) spec.command = bqcd::Command::verify;

  return bqcd::run_command(spec);
}
