#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedboost/matrix.hpp"
#include "fedboost/protocol.hpp"
#include "fedboost/types.hpp"

namespace fedboost {

enum class StandardizationMode { kLocal, kGlobal };

std::string_view to_string(StandardizationMode mode);
StandardizationMode parse_standardization(std::string_view text);

struct StandardizationParams {
  StandardizationMode mode = StandardizationMode::kLocal;
  std::vector<double> means;
  std::vector<double> sds;
  double y_mean = 0.0;
};

// One cohort's individual-level data. Raw covariates are -1/0/1 and y is 0/1;
// once `standardization` is set, x and y hold the standardized values.
struct SiteDataset {
  Matrix x;
  std::vector<double> y;
  std::optional<StandardizationParams> standardization;

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }
};

// CSV with a header; the column named "y" is the outcome, every other column
// is a covariate in file order.
SiteDataset load_site_csv(const std::filesystem::path& path);
void save_site_csv(const std::filesystem::path& path, const SiteDataset& data);

// Columns scaled to sum x^2 = n_l - 1 within the site, y centered.
// Throws DegenerateColumn for a constant column.
SiteDataset standardize_local(const SiteDataset& raw);

protocol::resp::MomentSums global_moment_contrib(const SiteDataset& raw);
protocol::resp::SsqSums global_ssq_contrib(const SiteDataset& raw, std::span<const double> means,
                                           double y_mean);
SiteDataset apply_global_standardization(const SiteDataset& raw, std::span<const double> means,
                                         std::span<const double> sds, double y_mean);

// a_j = sum_i x_ij y_i, c_diag_j = sum_i x_ij^2. Throws NotStandardized on raw data.
protocol::resp::UnivariableStats univariable_stats(const SiteDataset& data);

// sum_i x_ij x_ik per pair. Throws IndexOutOfRange / NotStandardized.
std::vector<PairValue> covariance_block(const SiteDataset& data, std::span<const IndexPair> pairs);

// Request dispatcher for one site. Holds the raw data (never modified) and
// the current standardized view. Not thread-safe; one request at a time.
class SiteNode {
 public:
  SiteNode(SiteDataset raw, protocol::DisclosurePolicy policy);

  protocol::Response handle(const protocol::Request& request);
  // Frame in, frame out. Undecodable input yields a Refusal with request_id 0.
  std::string handle_frame(std::string_view frame);

  protocol::resp::SiteMeta meta() const;
  const SiteDataset& standardized() const;

 private:
  protocol::ResponseBody dispatch(const protocol::RequestBody& body);

  SiteDataset raw_;
  std::optional<SiteDataset> standardized_;
  protocol::DisclosurePolicy policy_;
};

}  // namespace fedboost
