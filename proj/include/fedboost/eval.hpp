#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedboost/ledger.hpp"
#include "fedboost/matrix.hpp"
#include "fedboost/simgen.hpp"
#include "fedboost/site_node.hpp"

namespace fedboost::eval {

inline constexpr std::size_t kTopK = 10;

struct SelectionMetrics {
  double tpr = 0.0;
  double fpr = 0.0;
};

// tpr: per effect covariate, the share of runs that picked it within the
// first k, averaged over effect covariates. fpr: per run, nulls among the
// first k divided by k, averaged over runs. Throws EmptyResults.
SelectionMetrics selection_metrics(std::span<const std::vector<std::size_t>> inclusion_orders,
                                   const sim::TruthVector& truth, std::size_t k = kTopK);

// P(score+ > score-) + P(tie) / 2 over all positive/negative pairs, computed
// by ranking. Labels are 0/1. Throws SingleClass.
double auc(std::span<const double> scores, std::span<const double> labels);

// AUC of x_test . beta, with test columns standardized by their own moments
// (constant columns are only centered).
double test_auc(const Matrix& test_x, std::span<const double> test_y, std::span<const double> beta);

struct LogisticFit {
  double intercept = 0.0;
  double slope = 0.0;
  double se = 0.0;
  bool ok = false;
  int iterations = 0;
};

// Intercept + one covariate by Newton/IRLS: at most 25 iterations, stop when
// the largest coefficient change is below 1e-8. `ok` is false on
// non-convergence, separation or a singular information matrix.
LogisticFit fit_univariable_logistic(std::span<const double> x, std::span<const double> y);

struct MetaResult {
  std::vector<std::size_t> top;  // k indices, strongest first
  std::vector<double> estimate;  // pooled slope per covariate
  std::vector<double> z;
  std::vector<double> p_value;
  std::size_t failed_covariates = 0;  // no site produced an estimate
};

// Per-site univariable logistic fits pooled by fixed-effects inverse-variance
// weighting; the k covariates with the smallest Wald p-values. Sites whose
// fit fails are dropped for that covariate; with no site left the covariate
// gets p = 1. Ranking uses |z| so p-values that underflow still order.
MetaResult univariable_meta_baseline(std::span<const SiteDataset> sites, std::size_t k = kTopK);

// Files written per analysis run.
void write_selection(const std::filesystem::path& path, std::span<const std::size_t> order,
                     std::span<const double> beta_dense);
struct Selection {
  std::vector<std::size_t> order;
  std::vector<double> coefficient;  // aligned with order
};
Selection read_selection(const std::filesystem::path& path);

void write_ledger(const std::filesystem::path& path, const CallLedger& ledger);
CallLedger read_ledger(const std::filesystem::path& path);

struct MetricsSummary {
  std::string group;   // results path with rep_<r> components removed
  std::string method;  // last component of group
  std::optional<std::size_t> sites;  // from an "L<k>" path component
  std::size_t replicates = 0;
  double mean_tpr = 0.0;
  double mean_fpr = 0.0;
  double mean_auc = 0.0;
  std::optional<double> mean_calls;
  std::optional<double> mean_values;
};

struct EvaluateInputs {
  std::filesystem::path results;
  // Either a file, or a directory holding rep_<r>/truth.csv (resp. test.csv).
  std::filesystem::path truth;
  std::filesystem::path test;
};

// Walks `results` for selection.csv files, groups them, computes metrics and
// writes metrics.csv plus SVG plots into `out`.
std::vector<MetricsSummary> summarize(const EvaluateInputs& inputs, const std::filesystem::path& out);

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsSummary> rows);

}  // namespace fedboost::eval
