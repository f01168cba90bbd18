#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fedboost/boost_core.hpp"
#include "fedboost/simgen.hpp"
#include "fedboost/site_node.hpp"

namespace fedboost::config {

// The TOML subset run files use: [tables], key = value, '#' comments,
// values that are integers, floats, booleans, "strings" or one-line arrays
// of those. No inline tables, dotted keys or multi-line values.
struct Value;
using Array = std::vector<Value>;
struct Value {
  std::variant<std::int64_t, double, bool, std::string, Array> data;
};

using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;  // "" holds top-level keys

Document parse_toml(const std::string& text);
Document load_toml(const std::filesystem::path& path);

struct AnalysisSettings {
  std::vector<std::string> methods = {"full", "heuristic", "block"};
  std::size_t buffer = 20;
  double nu = 0.1;
  std::size_t steps = 1000;
  std::size_t model_size = 10;
  StandardizationMode standardize = StandardizationMode::kLocal;
  std::uint64_t min_site_n = 10;
};

struct RunSettings {
  std::filesystem::path out = "repro_out";
  bool in_process = false;
  bool baseline = true;
};

struct RunConfig {
  sim::Scenario scenario;
  AnalysisSettings analysis;
  RunSettings run;
};

// Validates everything; unknown tables or keys are rejected. Throws Error(kConfig).
RunConfig run_config_from(const Document& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace fedboost::config
