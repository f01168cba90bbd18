#include <doctest.h>

#include <filesystem>
#include <random>

#include "fedboost/error.hpp"
#include "fedboost/eval.hpp"
#include "fedboost/pipeline.hpp"
#include "fedboost/simgen.hpp"
#include "helpers.hpp"

using namespace fedboost;
using namespace fedboost::eval;

namespace {

double brute_auc(const std::vector<double>& s, const std::vector<double>& y) {
  double wins = 0.0, total = 0.0;
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (y[a] != 1.0) continue;
    for (std::size_t b = 0; b < s.size(); ++b) {
      if (y[b] != 0.0) continue;
      total += 1.0;
      wins += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
    }
  }
  return wins / total;
}

sim::TruthVector truth_first(std::size_t effects, std::size_t p) {
  sim::TruthVector t;
  t.beta.assign(p, 0.0);
  for (std::size_t j = 0; j < effects; ++j) t.beta[j] = 1.0;
  return t;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(std::vector<double>{0.9, 0.8, 0.3, 0.1}, std::vector<double>{1, 0, 1, 0}) == 0.75);
  CHECK(auc(std::vector<double>{3, 4, 1, 2}, std::vector<double>{1, 1, 0, 0}) == 1.0);
  CHECK(auc(std::vector<double>{2, 2, 2, 2}, std::vector<double>{1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(auc(std::vector<double>{1, 2}, std::vector<double>{1, 1}), Error);
}

TEST_CASE("auc matches all-pairs counting") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen() % 199;
    std::vector<double> s(n), y(n);
    const bool coarse = trial % 2 == 0;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = coarse ? static_cast<double>(gen() % 7) : std::normal_distribution<double>()(gen);
      y[i] = static_cast<double>(gen() % 2);
    }
    y[0] = 1.0;
    y[1] = 0.0;
    CHECK(std::abs(auc(s, y) - brute_auc(s, y)) <= 1e-12);
  }
}

TEST_CASE("selection metrics") {
  const auto truth = truth_first(10, 30);
  std::vector<std::size_t> perfect{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::size_t> nulls{10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  {
    std::vector<std::vector<std::size_t>> runs{perfect, perfect};
    const auto m = selection_metrics(runs, truth);
    CHECK(m.tpr == 1.0);
    CHECK(m.fpr == 0.0);
  }
  {
    std::vector<std::vector<std::size_t>> runs{nulls};
    const auto m = selection_metrics(runs, truth);
    CHECK(m.tpr == 0.0);
    CHECK(m.fpr == 1.0);
  }
  {
    const auto two = truth_first(2, 30);
    std::vector<std::size_t> a{0, 1};
    std::vector<std::size_t> b{0, 10, 11, 12, 13, 14, 15, 16, 17, 18};
    std::vector<std::vector<std::size_t>> runs{a, b};
    const auto m = selection_metrics(runs, two);
    CHECK(m.tpr == doctest::Approx(0.75));
    CHECK(m.fpr == doctest::Approx(0.45));
    std::vector<std::vector<std::size_t>> swapped{b, a};
    const auto m2 = selection_metrics(swapped, two);
    CHECK(m2.tpr == m.tpr);
    CHECK(m2.fpr == m.fpr);
  }
  CHECK_THROWS_AS(selection_metrics({}, truth), Error);
}

TEST_CASE("univariable logistic fit") {
  // Data with a known MLE: grouped 2x2 table.
  // x=0: 30 of 100 events, x=1: 60 of 100 events.
  std::vector<double> x, y;
  for (int i = 0; i < 100; ++i) {
    x.push_back(0);
    y.push_back(i < 30);
    x.push_back(1);
    y.push_back(i < 60);
  }
  const auto fit = fit_univariable_logistic(x, y);
  REQUIRE(fit.ok);
  const double b0 = std::log(0.3 / 0.7);
  const double b1 = std::log(0.6 / 0.4) - b0;
  CHECK(fit.intercept == doctest::Approx(b0).epsilon(1e-8));
  CHECK(fit.slope == doctest::Approx(b1).epsilon(1e-8));
  const double se = std::sqrt(1 / 30.0 + 1 / 70.0 + 1 / 60.0 + 1 / 40.0);
  CHECK(fit.se == doctest::Approx(se).epsilon(1e-8));

  std::vector<double> sx{-1, -1, 1, 1}, sy{0, 0, 1, 1};
  CHECK_FALSE(fit_univariable_logistic(sx, sy).ok);
  std::vector<double> cx{1, 1, 1, 1}, cy{0, 1, 0, 1};
  CHECK_FALSE(fit_univariable_logistic(cx, cy).ok);
}

TEST_CASE("meta baseline") {
  sim::Scenario s;
  s.n = 400;
  s.p = 60;
  s.sites = 2;
  const auto rep = sim::generate_replicate(s, 0);

  SUBCASE("one site reproduces the single fit") {
    std::vector<SiteDataset> one{rep.sites[0]};
    const auto meta = univariable_meta_baseline(one);
    for (std::size_t j = 0; j < 5; ++j) {
      const auto col = rep.sites[0].x.col(j);
      const auto fit = fit_univariable_logistic(col, rep.sites[0].y);
      CHECK(meta.estimate[j] == doctest::Approx(fit.slope).epsilon(1e-12));
      CHECK(meta.z[j] == doctest::Approx(fit.slope / fit.se).epsilon(1e-12));
    }
    CHECK(meta.top.size() == kTopK);
  }
  SUBCASE("ranking ignores covariate rescaling") {
    const auto base = univariable_meta_baseline(rep.sites);
    auto scaled = rep.sites;
    for (auto& site : scaled)
      for (std::size_t j = 0; j < s.p; ++j) {
        const double factor = j % 2 ? 2.0 : 0.5;
        for (double& v : site.x.col(j)) v *= factor;
      }
    CHECK(univariable_meta_baseline(scaled).top == base.top);
  }
  SUBCASE("a strong effect is found") {
    const auto meta = univariable_meta_baseline(rep.sites);
    std::size_t hits = 0;
    for (std::size_t j : meta.top) hits += rep.truth.beta[j] != 0.0;
    CHECK(hits >= 3);
  }
}

TEST_CASE("selection, ledger and summary files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "fedboost_eval_test";
  fs::remove_all(dir);

  sim::Scenario s;
  s.n = 300;
  s.p = 60;
  s.replicates = 2;
  for (std::size_t r = 0; r < 2; ++r) {
    const auto rep = sim::generate_replicate(s, r);
    const auto rep_dir = "rep_" + std::to_string(r + 1);
    sim::write_replicate(dir / "data" / rep_dir, rep);
    pipeline::AnalysisOptions o;
    const auto result = pipeline::analyze_in_process(rep.sites, o);
    pipeline::write_analysis(dir / "results" / "L1" / "full" / rep_dir, result);
  }
  const auto sel = read_selection(dir / "results" / "L1" / "full" / "rep_1" / "selection.csv");
  CHECK(sel.order.size() == 10);
  const auto ledger = read_ledger(dir / "results" / "L1" / "full" / "rep_1" / "ledger.csv");
  CHECK(ledger.data_calls() == 11);
  CHECK(ledger.values_transferred == 545);  // sum of 60 - k for k = 1..10

  const auto rows = summarize({dir / "results", dir / "data", dir / "data"}, dir / "eval");
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].group == "L1/full");
  CHECK(rows[0].sites == 1);
  CHECK(rows[0].replicates == 2);
  CHECK(rows[0].mean_calls == 11.0);
  CHECK(rows[0].mean_values == 545.0);
  CHECK(fs::exists(dir / "eval" / "metrics.csv"));
  CHECK(fs::exists(dir / "eval" / "selection_vs_sites.svg"));
  fs::remove_all(dir);
}
