#include "fedboost/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fedboost/csv.hpp"
#include "fedboost/error.hpp"
#include "fedboost/plot.hpp"

namespace fedboost::eval {

namespace fs = std::filesystem;

SelectionMetrics selection_metrics(std::span<const std::vector<std::size_t>> inclusion_orders,
                                   const sim::TruthVector& truth, std::size_t k) {
  if (inclusion_orders.empty()) throw Error(ErrorCode::kEmptyResults, "no replicates");
  const auto effects = truth.effect_indices();
  const double runs = static_cast<double>(inclusion_orders.size());

  std::vector<double> hits(truth.beta.size(), 0.0);
  double null_share = 0.0;
  for (const auto& order : inclusion_orders) {
    const std::size_t top = std::min(k, order.size());
    std::size_t nulls = 0;
    for (std::size_t r = 0; r < top; ++r) {
      const std::size_t j = order[r];
      if (j < truth.beta.size() && truth.beta[j] != 0.0)
        hits[j] += 1.0;
      else
        ++nulls;
    }
    null_share += static_cast<double>(nulls) / static_cast<double>(k);
  }

  SelectionMetrics m;
  if (!effects.empty()) {
    for (std::size_t j : effects) m.tpr += hits[j] / runs;
    m.tpr /= static_cast<double>(effects.size());
  }
  m.fpr = null_share / runs;
  return m;
}

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "auc inputs");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Positives beat every negative ranked strictly below them and half of the
  // negatives tied with them.
  double positives = 0.0;
  double negatives = 0.0;
  double wins = 0.0;
  double negatives_below = 0.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    double pos = 0.0;
    double neg = 0.0;
    while (end < n && scores[idx[end]] == scores[idx[start]]) {
      (labels[idx[end]] != 0.0 ? pos : neg) += 1.0;
      ++end;
    }
    wins += pos * (negatives_below + 0.5 * neg);
    negatives_below += neg;
    positives += pos;
    negatives += neg;
    start = end;
  }
  if (positives == 0.0 || negatives == 0.0)
    throw Error(ErrorCode::kSingleClass, "auc needs both classes");
  return wins / (positives * negatives);
}

double test_auc(const Matrix& test_x, std::span<const double> test_y, std::span<const double> beta) {
  const std::size_t n = test_x.rows();
  std::vector<double> score(n, 0.0);
  for (std::size_t j = 0; j < test_x.cols(); ++j) {
    if (beta[j] == 0.0) continue;
    const auto c = test_x.col(j);
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= static_cast<double>(n);
    double ssq = 0.0;
    for (double v : c) ssq += (v - mean) * (v - mean);
    const double sd = ssq > 0.0 ? std::sqrt(ssq / static_cast<double>(n - 1)) : 1.0;
    for (std::size_t i = 0; i < n; ++i) score[i] += beta[j] * (c[i] - mean) / sd;
  }
  return auc(score, test_y);
}

LogisticFit fit_univariable_logistic(std::span<const double> x, std::span<const double> y) {
  constexpr int kMaxIterations = 25;
  constexpr double kTolerance = 1e-8;
  constexpr double kDivergence = 1e3;

  LogisticFit fit;
  const std::size_t n = x.size();
  double b0 = 0.0;
  double b1 = 0.0;
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;

  auto information = [&]() {
    h00 = h01 = h11 = 0.0;
    double g0 = 0.0, g1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-(b0 + b1 * x[i])));
      const double w = mu * (1.0 - mu);
      h00 += w;
      h01 += w * x[i];
      h11 += w * x[i] * x[i];
      g0 += y[i] - mu;
      g1 += (y[i] - mu) * x[i];
    }
    return std::pair{g0, g1};
  };

  for (int it = 1; it <= kMaxIterations; ++it) {
    const auto [g0, g1] = information();
    const double det = h00 * h11 - h01 * h01;
    if (!(det > 1e-12 * std::max(1.0, h00 * h11))) return fit;
    const double d0 = (h11 * g0 - h01 * g1) / det;
    const double d1 = (h00 * g1 - h01 * g0) / det;
    b0 += d0;
    b1 += d1;
    fit.iterations = it;
    if (!std::isfinite(b0) || !std::isfinite(b1) || std::abs(b1) > kDivergence) return fit;
    if (std::max(std::abs(d0), std::abs(d1)) < kTolerance) {
      information();
      const double det_final = h00 * h11 - h01 * h01;
      if (!(det_final > 0.0)) return fit;
      fit.intercept = b0;
      fit.slope = b1;
      fit.se = std::sqrt(h00 / det_final);
      fit.ok = std::isfinite(fit.se) && fit.se > 0.0;
      return fit;
    }
  }
  return fit;
}

MetaResult univariable_meta_baseline(std::span<const SiteDataset> sites, std::size_t k) {
  if (sites.empty()) throw Error(ErrorCode::kMissingSite, "baseline needs at least one site");
  const std::size_t p = sites.front().p();
  MetaResult out;
  out.estimate.assign(p, 0.0);
  out.z.assign(p, 0.0);
  out.p_value.assign(p, 1.0);

  for (std::size_t j = 0; j < p; ++j) {
    double weight = 0.0;
    double weighted = 0.0;
    for (const auto& site : sites) {
      const auto fit = fit_univariable_logistic(site.x.col(j), site.y);
      if (!fit.ok) continue;
      const double w = 1.0 / (fit.se * fit.se);
      weight += w;
      weighted += w * fit.slope;
    }
    if (weight == 0.0) {
      ++out.failed_covariates;
      spdlog::debug("baseline: no site could fit covariate {}", j + 1);
      continue;
    }
    out.estimate[j] = weighted / weight;
    out.z[j] = out.estimate[j] * std::sqrt(weight);
    out.p_value[j] = std::erfc(std::abs(out.z[j]) / std::sqrt(2.0));
  }

  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(k, p);
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double za = std::abs(out.z[a]);
                      const double zb = std::abs(out.z[b]);
                      return za != zb ? za > zb : a < b;
                    });
  out.top.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  return out;
}

void write_selection(const fs::path& path, std::span<const std::size_t> order,
                     std::span<const double> beta_dense) {
  csv::Table table{{"rank", "covariate", "coefficient"}, {}};
  for (std::size_t r = 0; r < order.size(); ++r)
    table.rows.push_back({std::to_string(r + 1), std::to_string(order[r] + 1),
                          csv::format_double(beta_dense[order[r]])});
  csv::write(path, table);
}

Selection read_selection(const fs::path& path) {
  const auto table = csv::read(path);
  const auto c_cov = table.column("covariate");
  const auto c_coef = table.column("coefficient");
  Selection s;
  for (const auto& row : table.rows) {
    const auto j = csv::to_integer(row[c_cov]);
    if (j < 1) throw Error(ErrorCode::kIo, "covariate index must be positive in " + path.string());
    s.order.push_back(static_cast<std::size_t>(j - 1));
    s.coefficient.push_back(csv::to_double(row[c_coef]));
  }
  return s;
}

void write_ledger(const fs::path& path, const CallLedger& ledger) {
  csv::Table table{{"kind", "call", "values"}, {}};
  for (std::size_t c = 0; c < ledger.setup_calls; ++c)
    table.rows.push_back({"setup", std::to_string(c + 1), "0"});
  for (std::size_t c = 0; c < ledger.univariable_calls; ++c)
    table.rows.push_back({"univariable", std::to_string(c + 1), "0"});
  for (std::size_t c = 0; c < ledger.call_sizes.size(); ++c)
    table.rows.push_back({"covariance", std::to_string(c + 1), std::to_string(ledger.call_sizes[c])});
  csv::write(path, table);
}

CallLedger read_ledger(const fs::path& path) {
  const auto table = csv::read(path);
  const auto c_kind = table.column("kind");
  const auto c_values = table.column("values");
  CallLedger ledger;
  for (const auto& row : table.rows) {
    if (row[c_kind] == "setup")
      ++ledger.setup_calls;
    else if (row[c_kind] == "univariable")
      ++ledger.univariable_calls;
    else if (row[c_kind] == "covariance")
      ledger.record_covariance_call(static_cast<std::size_t>(csv::to_integer(row[c_values])));
    else
      throw Error(ErrorCode::kIo, "unknown ledger kind '" + row[c_kind] + "'");
  }
  return ledger;
}

namespace {

struct RunFiles {
  fs::path dir;
  std::optional<std::string> replicate;  // "rep_<r>"
};

fs::path companion(const fs::path& source, const std::optional<std::string>& replicate,
                   const char* file) {
  if (!fs::is_directory(source)) return source;
  if (replicate && fs::exists(source / *replicate / file)) return source / *replicate / file;
  return source / file;
}

}  // namespace

std::vector<MetricsSummary> summarize(const EvaluateInputs& inputs, const fs::path& out) {
  if (!fs::is_directory(inputs.results))
    throw Error(ErrorCode::kIo, "results directory not found: " + inputs.results.string());

  std::map<std::string, std::vector<RunFiles>> groups;
  for (const auto& entry : fs::recursive_directory_iterator(inputs.results)) {
    if (!entry.is_regular_file() || entry.path().filename() != "selection.csv") continue;
    const auto rel = fs::relative(entry.path().parent_path(), inputs.results);
    fs::path group;
    std::optional<std::string> replicate;
    for (const auto& part : rel) {
      const auto s = part.string();
      if (s.rfind("rep_", 0) == 0)
        replicate = s;
      else if (s != ".")
        group /= part;
    }
    const std::string key = group.empty() ? std::string(".") : group.generic_string();
    groups[key].push_back({entry.path().parent_path(), replicate});
  }
  if (groups.empty()) throw Error(ErrorCode::kEmptyResults, "no selection.csv under results");

  std::vector<MetricsSummary> summaries;
  std::vector<plot::Series> scatter;
  for (auto& [key, runs] : groups) {
    std::sort(runs.begin(), runs.end(), [](const RunFiles& a, const RunFiles& b) { return a.dir < b.dir; });
    MetricsSummary s;
    s.group = key;
    s.method = fs::path(key).filename().string();
    for (const auto& part : fs::path(key)) {
      const auto t = part.string();
      if (t.size() > 1 && t[0] == 'L' && std::all_of(t.begin() + 1, t.end(), ::isdigit))
        s.sites = static_cast<std::size_t>(std::stoul(t.substr(1)));
    }
    s.replicates = runs.size();

    std::vector<std::vector<std::size_t>> orders;
    sim::TruthVector truth;
    double auc_sum = 0.0;
    double calls = 0.0, values = 0.0;
    std::size_t ledgers = 0;
    plot::Series points{key, {}, {}};
    for (const auto& run : runs) {
      const auto sel = read_selection(run.dir / "selection.csv");
      truth = sim::load_truth(companion(inputs.truth, run.replicate, "truth.csv"));
      const auto test = load_site_csv(companion(inputs.test, run.replicate, "test.csv"));
      std::vector<double> beta(test.p(), 0.0);
      const std::size_t top = std::min(kTopK, sel.order.size());
      for (std::size_t r = 0; r < top; ++r) beta.at(sel.order[r]) = sel.coefficient[r];
      auc_sum += test_auc(test.x, test.y, beta);
      orders.push_back(sel.order);
      if (fs::exists(run.dir / "ledger.csv")) {
        const auto ledger = read_ledger(run.dir / "ledger.csv");
        calls += static_cast<double>(ledger.data_calls());
        values += static_cast<double>(ledger.values_transferred);
        points.x.push_back(static_cast<double>(ledger.data_calls()));
        points.y.push_back(static_cast<double>(ledger.values_transferred));
        ++ledgers;
      }
    }
    const auto m = selection_metrics(orders, truth);
    s.mean_tpr = m.tpr;
    s.mean_fpr = m.fpr;
    s.mean_auc = auc_sum / static_cast<double>(runs.size());
    if (ledgers) {
      s.mean_calls = calls / static_cast<double>(ledgers);
      s.mean_values = values / static_cast<double>(ledgers);
      scatter.push_back(std::move(points));
    }
    summaries.push_back(std::move(s));
  }

  fs::create_directories(out);
  write_metrics_csv(out / "metrics.csv", summaries);

  std::map<std::string, plot::Series> by_method;
  for (const auto& s : summaries) {
    if (!s.sites) continue;
    auto& series = by_method[s.method];
    series.label = s.method;
    series.x.push_back(static_cast<double>(*s.sites));
    series.y.push_back(s.mean_tpr);
  }
  if (!by_method.empty()) {
    std::vector<plot::Series> lines;
    for (auto& [name, series] : by_method) lines.push_back(std::move(series));
    plot::write_svg(out / "selection_vs_sites.svg",
                    {"True positive proportion vs. number of sites", "sites (L)", "mean TPR", true},
                    lines);
  }
  if (!scatter.empty())
    plot::write_svg(out / "calls_vs_values.svg",
                    {"Data calls vs. transferred covariances", "data calls", "covariance values",
                     false},
                    scatter);
  return summaries;
}

void write_metrics_csv(const fs::path& path, std::span<const MetricsSummary> rows) {
  csv::Table table{{"group", "method", "sites", "replicates", "mean_tpr", "mean_fpr", "mean_auc",
                    "mean_calls", "mean_values"},
                   {}};
  for (const auto& r : rows)
    table.rows.push_back({r.group, r.method, r.sites ? std::to_string(*r.sites) : "",
                          std::to_string(r.replicates), csv::format_double(r.mean_tpr),
                          csv::format_double(r.mean_fpr), csv::format_double(r.mean_auc),
                          r.mean_calls ? csv::format_double(*r.mean_calls) : "",
                          r.mean_values ? csv::format_double(*r.mean_values) : ""});
  csv::write(path, table);
}

}  // namespace fedboost::eval
