#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "fedboost/boost_core.hpp"
#include "fedboost/coordinator.hpp"
#include "fedboost/site_node.hpp"

// Glue shared by the CLI, the benchmarks and the acceptance suite.
namespace fedboost::pipeline {

struct AnalysisOptions {
  BoostMode mode = BoostMode::kFull;
  std::size_t buffer = 0;
  double nu = 0.1;
  std::size_t steps = 1000;
  std::optional<std::size_t> model_size = 10;
  StandardizationMode standardize = StandardizationMode::kLocal;
};

struct AnalysisResult {
  BoostingRun run;
  // Boosting ledger plus the coordinator's setup calls and per-site traffic.
  CallLedger ledger;
};

// connect -> standardize -> boost, against whatever channels the coordinator holds.
AnalysisResult analyze(Coordinator& coordinator, const AnalysisOptions& options,
                       const StepObserver& observer = {});

// Sites as in-memory nodes behind InProcessChannel, full message encoding included.
class InProcessConsortium {
 public:
  InProcessConsortium(std::span<const SiteDataset> sites, protocol::DisclosurePolicy policy = {});

  Coordinator make_coordinator(std::size_t max_pairs_per_frame = protocol::kMaxPairsPerMessage);
  std::vector<std::unique_ptr<SiteNode>>& nodes() { return nodes_; }

 private:
  std::vector<std::unique_ptr<SiteNode>> nodes_;
};

AnalysisResult analyze_in_process(std::span<const SiteDataset> sites, const AnalysisOptions& options,
                                  const StepObserver& observer = {});

// selection.csv and ledger.csv into `dir`.
void write_analysis(const std::filesystem::path& dir, const AnalysisResult& result);

}  // namespace fedboost::pipeline
