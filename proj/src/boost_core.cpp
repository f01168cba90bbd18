#include "fedboost/boost_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedboost/error.hpp"

namespace fedboost {

namespace {

std::vector<std::size_t> all_indices(std::size_t p) {
  std::vector<std::size_t> out(p);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

std::string pair_text(std::size_t j, std::size_t k) {
  return "(" + std::to_string(j) + "," + std::to_string(k) + ")";
}

}  // namespace

std::string_view to_string(BoostMode mode) {
  switch (mode) {
    case BoostMode::kFull: return "full";
    case BoostMode::kHeuristic: return "heuristic";
    case BoostMode::kBlockHeuristic: return "block";
  }
  return "full";
}

BoostMode parse_boost_mode(std::string_view text) {
  if (text == "full") return BoostMode::kFull;
  if (text == "heuristic") return BoostMode::kHeuristic;
  if (text == "block") return BoostMode::kBlockHeuristic;
  throw Error(ErrorCode::kConfig, "unknown mode '" + std::string(text) + "'");
}

void BoostingConfig::validate() const {
  if (!(nu > 0.0 && nu <= 1.0)) throw Error(ErrorCode::kConfig, "nu must be in (0, 1]");
  if (max_steps < 1) throw Error(ErrorCode::kConfig, "max_steps must be at least 1");
  if (buffer_w > p) throw Error(ErrorCode::kConfig, "buffer must not exceed p");
}

BoostingState BoostingState::initial(std::span<const double> univariable_scores) {
  BoostingState state;
  state.scores.assign(univariable_scores.begin(), univariable_scores.end());
  state.initial_scores = state.scores;
  return state;
}

double BoostingState::coefficient(std::size_t j) const {
  auto it = beta.find(j);
  return it == beta.end() ? 0.0 : it->second;
}

std::vector<double> BoostingState::dense_beta() const {
  std::vector<double> out(p(), 0.0);
  for (const auto& [j, b] : beta) out[j] = b;
  return out;
}

std::vector<std::size_t> BoostingState::included_indices() const {
  std::vector<std::size_t> out;
  out.reserve(beta.size());
  for (const auto& entry : beta) out.push_back(entry.first);
  return out;
}

AggregateCache::AggregateCache(std::vector<double> a, std::vector<double> c_diag)
    : a_(std::move(a)), c_diag_(std::move(c_diag)) {
  if (a_.size() != c_diag_.size())
    throw Error(ErrorCode::kLengthMismatch, "A and C_diag lengths differ");
  for (std::size_t j = 0; j < c_diag_.size(); ++j) {
    if (!std::isfinite(c_diag_[j]) || !(c_diag_[j] > 0.0))
      throw Error(ErrorCode::kDegenerateColumn,
                  "pooled C_jj for covariate " + std::to_string(j) + " is not positive");
    if (!std::isfinite(a_[j]))
      throw Error(ErrorCode::kNonFiniteScore, "A_j for covariate " + std::to_string(j));
  }
}

std::uint64_t AggregateCache::key(std::size_t j, std::size_t k) const {
  const auto pair = IndexPair::of(j, k);
  return static_cast<std::uint64_t>(pair.j) * a_.size() + pair.k;
}

bool AggregateCache::available(std::size_t j, std::size_t k) const {
  if (j == k) return j < a_.size();
  return offdiag_.contains(key(j, k));
}

double AggregateCache::covariance(std::size_t j, std::size_t k) const {
  if (j == k) return c_diag_.at(j);
  auto it = offdiag_.find(key(j, k));
  if (it == offdiag_.end()) throw Error(ErrorCode::kMissingCovariance, pair_text(j, k));
  return it->second;
}

void AggregateCache::insert(std::size_t j, std::size_t k, double value) {
  if (j == k || j >= a_.size() || k >= a_.size())
    throw Error(ErrorCode::kIndexOutOfRange, "cache insert " + pair_text(j, k));
  offdiag_.insert_or_assign(key(j, k), value);
}

std::vector<double> compute_scores(const AggregateCache& cache, const BoostingState& state,
                                   std::span<const std::size_t> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (std::size_t j : candidates) {
    double s = cache.a().at(j);
    for (const auto& [k, b] : state.beta) s -= b * cache.covariance(j, k);
    out.push_back(s);
  }
  return out;
}

Update select_update(std::span<const std::size_t> candidates, std::span<const double> scores,
                     const AggregateCache& cache, double nu) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyCandidateSet, "no candidate to select");
  for (std::size_t q = 0; q < candidates.size(); ++q)
    if (!std::isfinite(scores[q]))
      throw Error(ErrorCode::kNonFiniteScore, "S_" + std::to_string(candidates[q]));
  std::size_t best = 0;
  for (std::size_t q = 1; q < candidates.size(); ++q) {
    const double s2 = scores[q] * scores[q];
    const double best2 = scores[best] * scores[best];
    if (s2 > best2 || (s2 == best2 && candidates[q] < candidates[best])) best = q;
  }
  const std::size_t j = candidates[best];
  return {j, nu * scores[best] / cache.covariance(j, j)};
}

void apply_update(BoostingState& state, const Update& update) {
  auto [it, inserted] = state.beta.try_emplace(update.j_star, 0.0);
  it->second += update.gamma_bar;
  if (inserted) state.inclusion_order.push_back(update.j_star);
  ++state.step;
}

std::vector<std::size_t> heuristic_candidates(const BoostingState& state) {
  if (state.beta.empty()) return all_indices(state.p());
  double threshold = INFINITY;
  for (const auto& entry : state.beta) {
    const double s = state.scores[entry.first];
    threshold = std::min(threshold, s * s);
  }
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < state.p(); ++j) {
    const double s1 = state.initial_scores[j];
    if (state.included(j) || s1 * s1 >= threshold) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> block_extension(const BoostingState& state,
                                         std::span<const std::size_t> candidates,
                                         std::size_t buffer_w) {
  std::vector<std::size_t> out(candidates.begin(), candidates.end());
  if (buffer_w == 0) return out;

  std::vector<bool> in_set(state.p(), false);
  for (std::size_t j : candidates) in_set[j] = true;
  std::vector<std::size_t> rest;
  for (std::size_t j = 0; j < state.p(); ++j)
    if (!in_set[j]) rest.push_back(j);

  const auto& s1 = state.initial_scores;
  const std::size_t take = std::min(buffer_w, rest.size());
  std::partial_sort(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(take), rest.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double sa = s1[a] * s1[a];
                      const double sb = s1[b] * s1[b];
                      return sa != sb ? sa > sb : a < b;
                    });
  out.insert(out.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(out.begin(), out.end());
  return out;
}

FetchPlan plan_fetch(const BoostingState& state, const AggregateCache& cache,
                     std::span<const std::size_t> candidates, BoostMode mode) {
  FetchPlan plan;
  // Nothing is needed while beta is zero: S_j = A_j.
  if (state.beta.empty()) return plan;

  auto want = [&](std::size_t j, std::size_t k) {
    if (j != k && !cache.available(j, k)) plan.pairs.push_back(IndexPair::of(j, k));
  };

  switch (mode) {
    case BoostMode::kFull:
      plan.reason = FetchReason::kNewInclusion;
      for (const auto& entry : state.beta)
        for (std::size_t j = 0; j < state.p(); ++j) want(j, entry.first);
      break;
    case BoostMode::kHeuristic:
      plan.reason = FetchReason::kHeuristicCandidate;
      for (std::size_t j : candidates)
        for (const auto& entry : state.beta) want(j, entry.first);
      break;
    case BoostMode::kBlockHeuristic: {
      plan.reason = FetchReason::kBlockBuffer;
      bool needed = false;
      for (std::size_t j : heuristic_candidates(state))
        for (const auto& entry : state.beta)
          needed = needed || (j != entry.first && !cache.available(j, entry.first));
      if (!needed) break;
      for (std::size_t a = 0; a < candidates.size(); ++a)
        for (std::size_t b = a + 1; b < candidates.size(); ++b) want(candidates[a], candidates[b]);
      break;
    }
  }
  std::sort(plan.pairs.begin(), plan.pairs.end());
  plan.pairs.erase(std::unique(plan.pairs.begin(), plan.pairs.end()), plan.pairs.end());
  return plan;
}

BoostingRun run_boosting(AggregateProvider& provider, const BoostingConfig& config,
                         const StepObserver& observer) {
  config.validate();

  BoostingRun run;
  auto uni = provider.fetch_univariable();
  run.ledger.univariable_calls = 1;
  if (uni.a.size() != config.p)
    throw Error(ErrorCode::kLengthMismatch, "provider returned " + std::to_string(uni.a.size()) +
                                                " covariates, expected " + std::to_string(config.p));
  run.cache = AggregateCache(std::move(uni.a), std::move(uni.c_diag));
  run.state = BoostingState::initial(run.cache.a());

  auto& state = run.state;
  auto& cache = run.cache;
  const auto everything = all_indices(config.p);

  auto store = [&](std::span<const std::size_t> idx, const std::vector<double>& s) {
    for (std::size_t q = 0; q < idx.size(); ++q) {
      if (!std::isfinite(s[q]))
        throw Error(ErrorCode::kNonFiniteScore, "S_" + std::to_string(idx[q]) + " at step " +
                                                    std::to_string(state.step));
      state.scores[idx[q]] = s[q];
    }
  };

  while (true) {
    std::vector<std::size_t> candidates;
    if (config.mode == BoostMode::kFull || state.beta.empty()) {
      candidates = everything;
    } else {
      // Included covariates only need pairs among themselves, which are
      // always cached by the time they are included.
      const auto included = state.included_indices();
      store(included, compute_scores(cache, state, included));
      candidates = heuristic_candidates(state);
      if (config.mode == BoostMode::kBlockHeuristic)
        candidates = block_extension(state, candidates, config.buffer_w);
    }

    const auto plan = plan_fetch(state, cache, candidates, config.mode);
    if (!plan.empty()) {
      const auto values = provider.fetch_covariances(plan.pairs);
      if (values.size() != plan.pairs.size())
        throw Error(ErrorCode::kPairMismatch, "provider answered " + std::to_string(values.size()) +
                                                  " of " + std::to_string(plan.pairs.size()) +
                                                  " pairs");
      for (std::size_t q = 0; q < values.size(); ++q)
        cache.insert(plan.pairs[q].j, plan.pairs[q].k, values[q]);
      run.ledger.record_covariance_call(plan.pairs.size());
    }

    if (config.mode == BoostMode::kBlockHeuristic && !state.beta.empty()) {
      // Buffer members are scored once their pairs arrived with a block.
      std::erase_if(candidates, [&](std::size_t j) {
        for (const auto& entry : state.beta)
          if (j != entry.first && !cache.available(j, entry.first)) return true;
        return false;
      });
    }

    const auto scores = compute_scores(cache, state, candidates);
    store(candidates, scores);
    state.candidate_set = candidates;
    run.trace.push_back({state.step, state.inclusion_order.size(), run.ledger.data_calls(),
                         run.ledger.values_transferred});
    if (observer) observer(state, candidates);

    if (state.step >= config.max_steps) break;
    if (config.target_model_size && state.inclusion_order.size() >= *config.target_model_size)
      break;

    apply_update(state, select_update(candidates, scores, cache, config.nu));
  }
  return run;
}

}  // namespace fedboost
