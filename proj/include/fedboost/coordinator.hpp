#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fedboost/boost_core.hpp"
#include "fedboost/ledger.hpp"
#include "fedboost/protocol.hpp"
#include "fedboost/site_node.hpp"
#include "fedboost/transport.hpp"

namespace fedboost {

struct SiteHandle {
  std::size_t site_id = 0;
  std::string address;
  protocol::resp::SiteMeta meta;
};

// Elementwise sums over sites. Throws MissingSite / LengthMismatch.
UnivariableAggregates pool_univariable(std::span<const protocol::resp::UnivariableStats> responses);

// Per-pair sums over sites, aligned with `pairs`. Every site must answer
// exactly the requested pairs in order, otherwise PairMismatch.
std::vector<double> pool_covariances(std::span<const IndexPair> pairs,
                                     std::span<const protocol::resp::CovarianceBlock> responses);

// Fans requests out to every site and pools the answers. Implements the
// aggregate provider boosting runs against.
class Coordinator : public AggregateProvider {
 public:
  explicit Coordinator(std::vector<std::unique_ptr<Channel>> channels,
                       std::size_t max_pairs_per_frame = protocol::kMaxPairsPerMessage);

  // Describe round; checks every site reports the same p.
  const std::vector<SiteHandle>& connect();

  // Local: one StandardizeLocal round. Global: means, centered sums of
  // squares, then apply. Returns the global parameters (empty vectors for Local).
  StandardizationParams orchestrate_standardization(StandardizationMode mode);

  UnivariableAggregates fetch_univariable() override;
  std::vector<double> fetch_covariances(std::span<const IndexPair> pairs) override;

  const CallLedger& ledger() const { return ledger_; }
  const std::vector<SiteHandle>& sites() const { return sites_; }
  std::size_t p() const;
  std::uint64_t total_n() const;

 private:
  // Same request body to every site, one fresh request_id. Throws
  // ProviderError naming the site on refusal, wrong variant or transport failure.
  std::vector<protocol::ResponseBody> broadcast(const protocol::RequestBody& body);

  std::vector<std::unique_ptr<Channel>> channels_;
  std::vector<SiteHandle> sites_;
  std::size_t max_pairs_per_frame_;
  std::uint64_t next_request_id_ = 1;
  CallLedger ledger_;
};

}  // namespace fedboost
