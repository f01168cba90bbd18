#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedboost/config.hpp"
#include "fedboost/pipeline.hpp"

namespace fedboost::cli {

struct SimulateArgs {
  std::filesystem::path scenario;
  std::filesystem::path out;
};

struct SiteArgs {
  std::filesystem::path data;
  std::string listen = "127.0.0.1:7001";
  std::uint64_t min_n = 10;
  std::optional<std::filesystem::path> port_file;
  std::optional<std::size_t> max_connections;
};

struct AnalyzeArgs {
  std::vector<std::string> sites;
  std::string mode = "full";
  std::size_t buffer = 20;
  double nu = 0.1;
  std::size_t steps = 1000;
  std::size_t model_size = 10;
  std::string standardize = "local";
  std::filesystem::path out;
};

struct EvaluateArgs {
  std::filesystem::path results;
  std::filesystem::path truth;
  std::filesystem::path test;
  std::filesystem::path out;
};

struct BenchCallsArgs {
  std::filesystem::path scenario;
  std::vector<std::string> modes = {"heuristic", "block"};
  std::vector<std::size_t> buffers = {20};
  std::size_t steps = 100;
  std::filesystem::path out;
};

struct ReproArgs {
  std::filesystem::path config;
  bool in_process = false;
  std::optional<std::filesystem::path> out;
};

int run_simulate(const SimulateArgs& args);
int run_site(const SiteArgs& args);
int run_analyze(const AnalyzeArgs& args);
int run_evaluate(const EvaluateArgs& args);
int run_bench_calls(const BenchCallsArgs& args);
int run_repro(const ReproArgs& args);

// Directory name a method's results go under, e.g. "block-w20".
std::string method_label(const std::string& method, std::size_t buffer);

}  // namespace fedboost::cli
