#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fedboost/ledger.hpp"
#include "fedboost/types.hpp"

namespace fedboost {

enum class BoostMode { kFull, kHeuristic, kBlockHeuristic };

std::string_view to_string(BoostMode mode);
BoostMode parse_boost_mode(std::string_view text);

struct BoostingConfig {
  std::size_t p = 0;
  double nu = 0.1;
  std::size_t max_steps = 100;
  // Stop once this many covariates have a nonzero coefficient.
  std::optional<std::size_t> target_model_size;
  BoostMode mode = BoostMode::kFull;
  std::size_t buffer_w = 0;  // BlockHeuristic only

  void validate() const;
};

struct BoostingState {
  std::map<std::size_t, double> beta;  // covariate -> coefficient, included only
  std::size_t step = 0;                // updates applied so far
  std::vector<double> scores;          // last computed S_j, stale outside candidate_set
  std::vector<double> initial_scores;  // S_j before any update
  std::vector<std::size_t> inclusion_order;
  std::vector<std::size_t> candidate_set;

  static BoostingState initial(std::span<const double> univariable_scores);

  std::size_t p() const { return scores.size(); }
  bool included(std::size_t j) const { return beta.contains(j); }
  double coefficient(std::size_t j) const;
  std::vector<double> dense_beta() const;
  std::vector<std::size_t> included_indices() const;
};

// Pooled sums the coordinator holds: A_j = sum x_ij y_i, C_jj, and whichever
// off-diagonal C_jk have been fetched. One entry per unordered pair.
class AggregateCache {
 public:
  AggregateCache() = default;
  AggregateCache(std::vector<double> a, std::vector<double> c_diag);

  std::size_t p() const { return a_.size(); }
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& c_diag() const { return c_diag_; }

  bool available(std::size_t j, std::size_t k) const;
  // Throws MissingCovariance when the entry was never fetched.
  double covariance(std::size_t j, std::size_t k) const;
  void insert(std::size_t j, std::size_t k, double value);
  std::size_t offdiag_count() const { return offdiag_.size(); }

 private:
  std::uint64_t key(std::size_t j, std::size_t k) const;

  std::vector<double> a_;
  std::vector<double> c_diag_;
  std::unordered_map<std::uint64_t, double> offdiag_;
};

enum class FetchReason { kNewInclusion, kHeuristicCandidate, kBlockBuffer };

struct FetchPlan {
  std::vector<IndexPair> pairs;  // sorted, distinct, never diagonal
  FetchReason reason = FetchReason::kNewInclusion;

  bool empty() const { return pairs.empty(); }
};

struct UnivariableAggregates {
  std::vector<double> a;
  std::vector<double> c_diag;
};

// Source of pooled aggregates. Each call to fetch_covariances is one logical
// data call; the values come back aligned with `pairs`.
class AggregateProvider {
 public:
  virtual ~AggregateProvider() = default;
  virtual UnivariableAggregates fetch_univariable() = 0;
  virtual std::vector<double> fetch_covariances(std::span<const IndexPair> pairs) = 0;
};

struct Update {
  std::size_t j_star = 0;
  double gamma_bar = 0.0;
};

// S_j = A_j - sum_{k included} beta_k C_jk for each candidate, in candidate order.
std::vector<double> compute_scores(const AggregateCache& cache, const BoostingState& state,
                                   std::span<const std::size_t> candidates);

// argmax of S^2 over candidates (lowest index on ties), step nu * S / C_jj.
Update select_update(std::span<const std::size_t> candidates, std::span<const double> scores,
                     const AggregateCache& cache, double nu);

void apply_update(BoostingState& state, const Update& update);

std::vector<std::size_t> heuristic_candidates(const BoostingState& state);

std::vector<std::size_t> block_extension(const BoostingState& state,
                                         std::span<const std::size_t> candidates,
                                         std::size_t buffer_w);

// Full: missing pairs of every included covariate. Heuristic: missing
// (candidate, included) pairs. BlockHeuristic: `candidates` is the extended
// set; when the plain heuristic set lacks a pair, every missing pair inside
// the extended set is fetched, otherwise nothing.
FetchPlan plan_fetch(const BoostingState& state, const AggregateCache& cache,
                     std::span<const std::size_t> candidates, BoostMode mode);

struct StepRecord {
  std::size_t step = 0;        // updates applied before this record
  std::size_t model_size = 0;  // covariates included at that point
  std::size_t data_calls = 0;  // cumulative, univariable call included
  std::size_t values = 0;      // cumulative covariance values
};

struct BoostingRun {
  BoostingState state;
  CallLedger ledger;
  AggregateCache cache;
  std::vector<StepRecord> trace;
};

// Called once per iteration, after scores were refreshed for `candidates`.
using StepObserver =
    std::function<void(const BoostingState& state, std::span<const std::size_t> candidates)>;

// Runs until max_steps updates were applied or the target model size is
// reached. Every iteration refreshes the candidate scores before deciding to
// stop, so the returned scores are current for the returned coefficients.
BoostingRun run_boosting(AggregateProvider& provider, const BoostingConfig& config,
                         const StepObserver& observer = {});

}  // namespace fedboost
