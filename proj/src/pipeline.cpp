#include "fedboost/pipeline.hpp"

#include "fedboost/eval.hpp"

namespace fedboost::pipeline {

AnalysisResult analyze(Coordinator& coordinator, const AnalysisOptions& options,
                       const StepObserver& observer) {
  coordinator.connect();
  coordinator.orchestrate_standardization(options.standardize);

  BoostingConfig config;
  config.p = coordinator.p();
  config.nu = options.nu;
  config.max_steps = options.steps;
  config.target_model_size = options.model_size;
  config.mode = options.mode;
  config.buffer_w = options.mode == BoostMode::kBlockHeuristic ? options.buffer : 0;

  AnalysisResult result;
  result.run = run_boosting(coordinator, config, observer);
  result.ledger = result.run.ledger;
  result.ledger.setup_calls = coordinator.ledger().setup_calls;
  result.ledger.per_site = coordinator.ledger().per_site;
  return result;
}

InProcessConsortium::InProcessConsortium(std::span<const SiteDataset> sites,
                                         protocol::DisclosurePolicy policy) {
  for (const auto& s : sites) nodes_.push_back(std::make_unique<SiteNode>(s, policy));
}

Coordinator InProcessConsortium::make_coordinator(std::size_t max_pairs_per_frame) {
  std::vector<std::unique_ptr<Channel>> channels;
  for (std::size_t l = 0; l < nodes_.size(); ++l)
    channels.push_back(
        std::make_unique<InProcessChannel>(*nodes_[l], "in-process:" + std::to_string(l + 1)));
  return Coordinator(std::move(channels), max_pairs_per_frame);
}

AnalysisResult analyze_in_process(std::span<const SiteDataset> sites, const AnalysisOptions& options,
                                  const StepObserver& observer) {
  InProcessConsortium consortium(sites);
  auto coordinator = consortium.make_coordinator();
  return analyze(coordinator, options, observer);
}

void write_analysis(const std::filesystem::path& dir, const AnalysisResult& result) {
  std::filesystem::create_directories(dir);
  eval::write_selection(dir / "selection.csv", result.run.state.inclusion_order,
                        result.run.state.dense_beta());
  eval::write_ledger(dir / "ledger.csv", result.ledger);
}

}  // namespace fedboost::pipeline
