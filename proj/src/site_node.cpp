#include "fedboost/site_node.hpp"

#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "fedboost/csv.hpp"
#include "fedboost/error.hpp"
#include "fedboost/kernels.hpp"

namespace fedboost {

namespace proto = protocol;

std::string_view to_string(StandardizationMode mode) {
  return mode == StandardizationMode::kLocal ? "local" : "global";
}

StandardizationMode parse_standardization(std::string_view text) {
  if (text == "local") return StandardizationMode::kLocal;
  if (text == "global") return StandardizationMode::kGlobal;
  throw Error(ErrorCode::kConfig, "unknown standardization '" + std::string(text) + "'");
}

SiteDataset load_site_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::size_t y_col = table.column("y");
  const std::size_t p = table.header.size() - 1;
  SiteDataset data{Matrix(table.rows.size(), p), std::vector<double>(table.rows.size()), {}};
  if (table.rows.empty()) throw Error(ErrorCode::kIo, path.string() + " has no rows");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::size_t j = 0;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const double v = csv::to_double(table.rows[i][c]);
      if (c == y_col)
        data.y[i] = v;
      else
        data.x(i, j++) = v;
    }
  }
  return data;
}

void save_site_csv(const std::filesystem::path& path, const SiteDataset& data) {
  csv::Table table;
  for (std::size_t j = 0; j < data.p(); ++j) table.header.push_back("x" + std::to_string(j + 1));
  table.header.push_back("y");
  table.rows.reserve(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.reserve(data.p() + 1);
    for (std::size_t j = 0; j < data.p(); ++j) row.push_back(csv::format_double(data.x(i, j)));
    row.push_back(csv::format_double(data.y[i]));
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

SiteDataset standardize_local(const SiteDataset& raw) {
  const std::size_t n = raw.n();
  const std::size_t p = raw.p();
  if (n < 2) throw Error(ErrorCode::kDegenerateColumn, "site has fewer than two rows");
  StandardizationParams params{StandardizationMode::kLocal, std::vector<double>(p),
                               std::vector<double>(p), 0.0};

  kernels::parallel::column_sums(raw.x, params.means);
  for (double& m : params.means) m /= static_cast<double>(n);
  std::vector<double> ssq(p);
  kernels::parallel::centered_ssq(raw.x, params.means, ssq);
  for (std::size_t j = 0; j < p; ++j) {
    params.sds[j] = std::sqrt(ssq[j] / static_cast<double>(n - 1));
    if (!(params.sds[j] > 0.0))
      throw Error(ErrorCode::kDegenerateColumn, "column " + std::to_string(j + 1) +
                                                    " is constant within the site");
  }
  for (double v : raw.y) params.y_mean += v;
  params.y_mean /= static_cast<double>(n);

  SiteDataset out{raw.x, raw.y, {}};
  kernels::parallel::center_scale(out.x, params.means, params.sds);
  for (double& v : out.y) v -= params.y_mean;
  out.standardization = std::move(params);
  return out;
}

proto::resp::MomentSums global_moment_contrib(const SiteDataset& raw) {
  proto::resp::MomentSums out{raw.n(), 0.0, std::vector<double>(raw.p())};
  kernels::parallel::column_sums(raw.x, out.sum_x);
  for (double v : raw.y) out.sum_y += v;
  return out;
}

proto::resp::SsqSums global_ssq_contrib(const SiteDataset& raw, std::span<const double> means,
                                        double y_mean) {
  if (means.size() != raw.p()) throw Error(ErrorCode::kLengthMismatch, "means length");
  proto::resp::SsqSums out{std::vector<double>(raw.p()), 0.0};
  kernels::parallel::centered_ssq(raw.x, means, out.ssq_x);
  for (double v : raw.y) out.ssq_y += (v - y_mean) * (v - y_mean);
  return out;
}

SiteDataset apply_global_standardization(const SiteDataset& raw, std::span<const double> means,
                                         std::span<const double> sds, double y_mean) {
  if (means.size() != raw.p() || sds.size() != raw.p())
    throw Error(ErrorCode::kLengthMismatch, "standardization parameter length");
  for (std::size_t j = 0; j < sds.size(); ++j)
    if (!(sds[j] > 0.0) || !std::isfinite(sds[j]))
      throw Error(ErrorCode::kDegenerateColumn, "global sd of column " + std::to_string(j + 1));
  SiteDataset out{raw.x, raw.y, {}};
  kernels::parallel::center_scale(out.x, means, sds);
  for (double& v : out.y) v -= y_mean;
  out.standardization = StandardizationParams{StandardizationMode::kGlobal,
                                              {means.begin(), means.end()},
                                              {sds.begin(), sds.end()}, y_mean};
  return out;
}

proto::resp::UnivariableStats univariable_stats(const SiteDataset& data) {
  if (!data.standardization) throw Error(ErrorCode::kNotStandardized, "univariable stats");
  proto::resp::UnivariableStats out{std::vector<double>(data.p()), std::vector<double>(data.p())};
  kernels::parallel::cross_products(data.x, data.y, out.a);
  std::vector<double> zeros(data.p(), 0.0);
  kernels::parallel::centered_ssq(data.x, zeros, out.c_diag);
  return out;
}

std::vector<PairValue> covariance_block(const SiteDataset& data, std::span<const IndexPair> pairs) {
  if (!data.standardization) throw Error(ErrorCode::kNotStandardized, "covariance block");
  for (const auto& pr : pairs)
    if (pr.j >= data.p() || pr.k >= data.p())
      throw Error(ErrorCode::kIndexOutOfRange, "pair (" + std::to_string(pr.j) + "," +
                                                   std::to_string(pr.k) + ")");
  std::vector<double> values(pairs.size());
  kernels::parallel::pair_products(data.x, pairs, values);
  std::vector<PairValue> out;
  out.reserve(pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q) out.push_back({pairs[q].j, pairs[q].k, values[q]});
  return out;
}

SiteNode::SiteNode(SiteDataset raw, proto::DisclosurePolicy policy)
    : raw_(std::move(raw)), policy_(policy) {}

proto::resp::SiteMeta SiteNode::meta() const { return {raw_.n(), raw_.p()}; }

const SiteDataset& SiteNode::standardized() const {
  if (!standardized_) throw Error(ErrorCode::kNotStandardized, "site not standardized");
  return *standardized_;
}

proto::Response SiteNode::handle(const proto::Request& request) {
  std::size_t pair_count = 0;
  if (auto* cov = std::get_if<proto::req::CovarianceBlock>(&request.body))
    pair_count = cov->pairs.size();
  if (auto log = spdlog::get("site"))
    log->info("CALL {} {} pairs={}", request.request_id, proto::variant_name(request.body),
              pair_count);

  auto verdict = proto::check_disclosure(request.body, meta(), policy_);
  if (auto* refusal = std::get_if<proto::resp::Refusal>(&verdict))
    return {request.request_id, *refusal};
  try {
    return {request.request_id, dispatch(request.body)};
  } catch (const Error& e) {
    return {request.request_id, proto::resp::Refusal{e.what()}};
  }
}

proto::ResponseBody SiteNode::dispatch(const proto::RequestBody& body) {
  if (std::holds_alternative<proto::req::Describe>(body)) return meta();
  if (std::holds_alternative<proto::req::StandardizeLocal>(body)) {
    standardized_ = standardize_local(raw_);
    return proto::resp::Ack{};
  }
  if (std::holds_alternative<proto::req::GlobalMeans>(body)) return global_moment_contrib(raw_);
  if (auto* r = std::get_if<proto::req::GlobalSsq>(&body))
    return global_ssq_contrib(raw_, r->means, r->y_mean);
  if (auto* r = std::get_if<proto::req::ApplyGlobalStandardization>(&body)) {
    standardized_ = apply_global_standardization(raw_, r->means, r->sds, r->y_mean);
    return proto::resp::Ack{};
  }
  if (std::holds_alternative<proto::req::UnivariableStats>(body))
    return univariable_stats(standardized());
  const auto& cov = std::get<proto::req::CovarianceBlock>(body);
  for (const auto& pr : cov.pairs)
    if (pr.j == pr.k) throw Error(ErrorCode::kIndexOutOfRange, "diagonal pair requested");
  return proto::resp::CovarianceBlock{covariance_block(standardized(), cov.pairs)};
}

std::string SiteNode::handle_frame(std::string_view frame) {
  proto::Request request;
  try {
    request = proto::decode_request(frame);
  } catch (const Error& e) {
    return proto::encode(proto::Response{0, proto::resp::Refusal{e.what()}});
  }
  return proto::encode(handle(request));
}

}  // namespace fedboost
