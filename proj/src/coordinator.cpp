#include "fedboost/coordinator.hpp"

#include <cmath>
#include <future>
#include <string>

#include "fedboost/error.hpp"

namespace fedboost {

namespace proto = protocol;

UnivariableAggregates pool_univariable(std::span<const proto::resp::UnivariableStats> responses) {
  if (responses.empty()) throw Error(ErrorCode::kMissingSite, "no site responses to pool");
  const std::size_t p = responses.front().a.size();
  UnivariableAggregates out{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t l = 0; l < responses.size(); ++l) {
    const auto& r = responses[l];
    if (r.a.size() != p || r.c_diag.size() != p)
      throw Error(ErrorCode::kLengthMismatch, "site " + std::to_string(l) + " sent " +
                                                  std::to_string(r.a.size()) + " values, expected " +
                                                  std::to_string(p));
    for (std::size_t j = 0; j < p; ++j) {
      out.a[j] += r.a[j];
      out.c_diag[j] += r.c_diag[j];
    }
  }
  return out;
}

std::vector<double> pool_covariances(std::span<const IndexPair> pairs,
                                     std::span<const proto::resp::CovarianceBlock> responses) {
  if (responses.empty()) throw Error(ErrorCode::kMissingSite, "no site responses to pool");
  std::vector<double> out(pairs.size(), 0.0);
  for (std::size_t l = 0; l < responses.size(); ++l) {
    const auto& values = responses[l].values;
    if (values.size() != pairs.size())
      throw Error(ErrorCode::kPairMismatch, "site " + std::to_string(l) + " answered " +
                                                std::to_string(values.size()) + " of " +
                                                std::to_string(pairs.size()) + " pairs");
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      if (IndexPair::of(values[q].j, values[q].k) != pairs[q])
        throw Error(ErrorCode::kPairMismatch, "site " + std::to_string(l) + " answered pair (" +
                                                  std::to_string(values[q].j) + "," +
                                                  std::to_string(values[q].k) + ") out of order");
      out[q] += values[q].value;
    }
  }
  return out;
}

Coordinator::Coordinator(std::vector<std::unique_ptr<Channel>> channels,
                         std::size_t max_pairs_per_frame)
    : channels_(std::move(channels)), max_pairs_per_frame_(max_pairs_per_frame) {
  if (channels_.empty()) throw Error(ErrorCode::kMissingSite, "coordinator needs at least one site");
  if (max_pairs_per_frame_ == 0 || max_pairs_per_frame_ > proto::kMaxPairsPerMessage)
    throw Error(ErrorCode::kConfig, "frame pair cap out of range");
}

std::size_t Coordinator::p() const {
  if (sites_.empty()) throw Error(ErrorCode::kMissingSite, "coordinator not connected");
  return static_cast<std::size_t>(sites_.front().meta.p);
}

std::uint64_t Coordinator::total_n() const {
  std::uint64_t n = 0;
  for (const auto& s : sites_) n += s.meta.n;
  return n;
}

std::vector<proto::ResponseBody> Coordinator::broadcast(const proto::RequestBody& body) {
  const proto::Request request{next_request_id_++, body};
  std::vector<proto::Response> responses(channels_.size());
  std::vector<std::string> failures(channels_.size());

  auto call_one = [&](std::size_t l) {
    try {
      responses[l] = channels_[l]->call(request);
    } catch (const std::exception& e) {
      failures[l] = e.what();
    }
  };

  bool all_concurrent = channels_.size() > 1;
  for (const auto& c : channels_) all_concurrent = all_concurrent && c->concurrent();
  if (all_concurrent) {
    std::vector<std::future<void>> pending;
    for (std::size_t l = 0; l < channels_.size(); ++l)
      pending.push_back(std::async(std::launch::async, call_one, l));
    for (auto& f : pending) f.get();
  } else {
    for (std::size_t l = 0; l < channels_.size(); ++l) call_one(l);
  }

  std::vector<proto::ResponseBody> bodies;
  bodies.reserve(channels_.size());
  for (std::size_t l = 0; l < channels_.size(); ++l) {
    const std::string who = "site " + std::to_string(l + 1) + " (" + channels_[l]->address() + ")";
    if (!failures[l].empty()) throw Error(ErrorCode::kProviderError, who + ": " + failures[l]);
    auto& r = responses[l];
    if (r.request_id != request.request_id)
      throw Error(ErrorCode::kProviderError, who + ": request_id " + std::to_string(r.request_id) +
                                                 " does not echo " +
                                                 std::to_string(request.request_id));
    if (auto* refusal = std::get_if<proto::resp::Refusal>(&r.body))
      throw Error(ErrorCode::kProviderError, who + " refused " +
                                                 std::string(proto::variant_name(body)) + ": " +
                                                 refusal->reason);
    if (!proto::answers(body, r.body))
      throw Error(ErrorCode::kProviderError, who + " answered " +
                                                 std::string(proto::variant_name(r.body)) + " to " +
                                                 std::string(proto::variant_name(body)));
    ++ledger_.per_site[l].frames;
    bodies.push_back(std::move(r.body));
  }
  return bodies;
}

const std::vector<SiteHandle>& Coordinator::connect() {
  auto bodies = broadcast(proto::req::Describe{});
  sites_.clear();
  for (std::size_t l = 0; l < bodies.size(); ++l) {
    const auto meta = std::get<proto::resp::SiteMeta>(bodies[l]);
    if (!sites_.empty() && meta.p != sites_.front().meta.p)
      throw Error(ErrorCode::kLengthMismatch, "site " + std::to_string(l + 1) + " reports p=" +
                                                  std::to_string(meta.p) + ", site 1 reports p=" +
                                                  std::to_string(sites_.front().meta.p));
    sites_.push_back({l, channels_[l]->address(), meta});
  }
  return sites_;
}

StandardizationParams Coordinator::orchestrate_standardization(StandardizationMode mode) {
  if (sites_.empty()) connect();
  StandardizationParams params;
  params.mode = mode;
  if (mode == StandardizationMode::kLocal) {
    broadcast(proto::req::StandardizeLocal{});
    ++ledger_.setup_calls;
    return params;
  }

  const std::size_t p_count = p();
  auto moments = broadcast(proto::req::GlobalMeans{});
  ++ledger_.setup_calls;
  double n = 0.0;
  double sum_y = 0.0;
  params.means.assign(p_count, 0.0);
  for (std::size_t l = 0; l < moments.size(); ++l) {
    const auto& m = std::get<proto::resp::MomentSums>(moments[l]);
    if (m.sum_x.size() != p_count)
      throw Error(ErrorCode::kLengthMismatch, "site " + std::to_string(l + 1) + " moment sums");
    n += static_cast<double>(m.n);
    sum_y += m.sum_y;
    for (std::size_t j = 0; j < p_count; ++j) params.means[j] += m.sum_x[j];
  }
  for (double& v : params.means) v /= n;
  params.y_mean = sum_y / n;

  auto ssq = broadcast(proto::req::GlobalSsq{params.means, params.y_mean});
  ++ledger_.setup_calls;
  std::vector<double> pooled(p_count, 0.0);
  for (std::size_t l = 0; l < ssq.size(); ++l) {
    const auto& s = std::get<proto::resp::SsqSums>(ssq[l]);
    if (s.ssq_x.size() != p_count)
      throw Error(ErrorCode::kLengthMismatch, "site " + std::to_string(l + 1) + " ssq sums");
    for (std::size_t j = 0; j < p_count; ++j) pooled[j] += s.ssq_x[j];
  }
  params.sds.resize(p_count);
  for (std::size_t j = 0; j < p_count; ++j) {
    params.sds[j] = std::sqrt(pooled[j] / (n - 1.0));
    if (!(params.sds[j] > 0.0))
      throw Error(ErrorCode::kDegenerateColumn, "column " + std::to_string(j + 1) +
                                                    " is constant across all sites");
  }

  broadcast(proto::req::ApplyGlobalStandardization{params.means, params.sds, params.y_mean});
  ++ledger_.setup_calls;
  return params;
}

UnivariableAggregates Coordinator::fetch_univariable() {
  auto bodies = broadcast(proto::req::UnivariableStats{});
  std::vector<proto::resp::UnivariableStats> stats;
  stats.reserve(bodies.size());
  for (auto& b : bodies) stats.push_back(std::get<proto::resp::UnivariableStats>(std::move(b)));
  ++ledger_.univariable_calls;
  return pool_univariable(stats);
}

std::vector<double> Coordinator::fetch_covariances(std::span<const IndexPair> pairs) {
  if (pairs.empty()) return {};
  std::vector<double> pooled;
  pooled.reserve(pairs.size());
  // One logical call, possibly several frames per site.
  for (std::size_t first = 0; first < pairs.size(); first += max_pairs_per_frame_) {
    const auto chunk = pairs.subspan(first, std::min(max_pairs_per_frame_, pairs.size() - first));
    auto bodies = broadcast(proto::req::CovarianceBlock{{chunk.begin(), chunk.end()}});
    std::vector<proto::resp::CovarianceBlock> blocks;
    blocks.reserve(bodies.size());
    for (std::size_t l = 0; l < bodies.size(); ++l) {
      blocks.push_back(std::get<proto::resp::CovarianceBlock>(std::move(bodies[l])));
      ledger_.per_site[l].values += blocks.back().values.size();
    }
    const auto values = pool_covariances(chunk, blocks);
    pooled.insert(pooled.end(), values.begin(), values.end());
  }
  ledger_.record_covariance_call(pairs.size());
  return pooled;
}

}  // namespace fedboost
