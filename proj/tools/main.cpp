#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "fedboost/error.hpp"

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfigError = 2, kSiteFailure = 3, kNumericalAbort = 4 };

int exit_code_for(fedboost::ErrorCode code) {
  using fedboost::ErrorCode;
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kLayoutInfeasible:
    case ErrorCode::kIndivisibleSplit:
      return kConfigError;
    case ErrorCode::kProviderError:
    case ErrorCode::kTransport:
    case ErrorCode::kMissingSite:
    case ErrorCode::kPairMismatch:
    case ErrorCode::kMalformedFrame:
    case ErrorCode::kUnknownVariant:
    case ErrorCode::kVersionMismatch:
      return kSiteFailure;
    case ErrorCode::kNonFiniteScore:
    case ErrorCode::kDegenerateColumn:
    case ErrorCode::kMissingCovariance:
    case ErrorCode::kEmptyCandidateSet:
      return kNumericalAbort;
    default:
      return kOther;
  }
}

void setup_logging() {
  auto stderr_logger = spdlog::stderr_logger_st("fedboost");
  stderr_logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(stderr_logger);
  auto site = spdlog::stderr_logger_st("site");
  site->set_pattern("%v");

  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("FEDBOOST_LOG")) level = spdlog::level::from_str(env);
  spdlog::set_level(level);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace fedboost::cli;
  setup_logging();

  CLI::App app{"Federated componentwise boosting on aggregated statistics"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate cohorts, truth and test set");
  simulate->add_option("--scenario", sim.scenario, "Scenario TOML")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory")->required();

  SiteArgs site;
  auto* site_cmd = app.add_subcommand("site", "Serve one cohort's aggregated statistics");
  site_cmd->add_option("--data", site.data, "Cohort CSV (outcome column 'y')")->required()->check(CLI::ExistingFile);
  site_cmd->add_option("--listen", site.listen, "addr:port to listen on");
  site_cmd->add_option("--min-n", site.min_n, "Smallest cohort allowed to release statistics");
  site_cmd->add_option("--port-file", site.port_file, "Write the bound port here");
  site_cmd->add_option("--max-connections", site.max_connections, "Exit after this many connections");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Run distributed boosting against site nodes");
  analyze->add_option("--sites", an.sites, "Comma-separated addr:port list")->required()->delimiter(',');
  analyze->add_option("--mode", an.mode, "full | heuristic | block")
      ->check(CLI::IsMember({"full", "heuristic", "block"}));
  analyze->add_option("--buffer", an.buffer, "Block buffer w");
  analyze->add_option("--nu", an.nu, "Shrinkage factor");
  analyze->add_option("--steps", an.steps, "Maximum boosting steps");
  analyze->add_option("--model-size", an.model_size, "Stop after this many covariates are included");
  analyze->add_option("--standardize", an.standardize, "local | global")
      ->check(CLI::IsMember({"local", "global"}));
  analyze->add_option("--out", an.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compute selection, AUC and call metrics");
  evaluate->add_option("--results", ev.results, "Results directory")->required();
  evaluate->add_option("--truth", ev.truth, "truth.csv or directory of rep_<r>/truth.csv")->required();
  evaluate->add_option("--test", ev.test, "test.csv or directory of rep_<r>/test.csv")->required();
  evaluate->add_option("--out", ev.out, "Output directory")->required();

  BenchCallsArgs bc;
  auto* bench = app.add_subcommand("bench-calls", "Count data calls and covariance volume per step");
  bench->add_option("--scenario", bc.scenario, "Scenario TOML")->required()->check(CLI::ExistingFile);
  bench->add_option("--modes", bc.modes, "Modes to compare")->delimiter(',');
  bench->add_option("--buffers", bc.buffers, "Block buffers to try")->delimiter(',');
  bench->add_option("--steps", bc.steps, "Boosting steps per run");
  bench->add_option("--out", bc.out, "Output directory")->required();

  ReproArgs rp;
  auto* repro = app.add_subcommand("repro", "End-to-end: simulate, serve, analyze, evaluate");
  repro->add_option("--config", rp.config, "Run TOML")->required()->check(CLI::ExistingFile);
  repro->add_flag("--in-process", rp.in_process, "In-memory transport instead of sockets");
  repro->add_option("--out", rp.out, "Override [run] out");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*site_cmd) return run_site(site);
    if (*analyze) return run_analyze(an);
    if (*evaluate) return run_evaluate(ev);
    if (*bench) return run_bench_calls(bc);
    if (*repro) return run_repro(rp);
  } catch (const fedboost::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kOther;
  }
  return kOther;
}
