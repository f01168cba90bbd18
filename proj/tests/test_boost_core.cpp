#include <doctest.h>

#include <random>

#include "fedboost/boost_core.hpp"
#include "fedboost/error.hpp"
#include "fedboost/reference.hpp"
#include "helpers.hpp"

using namespace fedboost;

namespace {

AggregateCache two_by_two() {
  AggregateCache cache({5.0, -3.0}, {3.0, 3.0});
  cache.insert(0, 1, 1.0);
  return cache;
}

BoostingState state_with(std::vector<double> initial, std::map<std::size_t, double> beta) {
  auto s = BoostingState::initial(initial);
  s.beta = std::move(beta);
  for (auto& [j, b] : s.beta) s.inclusion_order.push_back(j);
  return s;
}

// Provider that counts what it serves and remembers every pair.
class CountingProvider : public AggregateProvider {
 public:
  explicit CountingProvider(AggregateProvider& inner) : inner_(inner) {}
  UnivariableAggregates fetch_univariable() override { return inner_.fetch_univariable(); }
  std::vector<double> fetch_covariances(std::span<const IndexPair> pairs) override {
    for (const auto& p : pairs) seen.push_back(p);
    return inner_.fetch_covariances(pairs);
  }
  std::vector<IndexPair> seen;

 private:
  AggregateProvider& inner_;
};

reference::StandardizedData random_dataset(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Matrix x = testing::random_ternary(n, p, gen);
  std::vector<double> y(n);
  std::normal_distribution<double> noise;
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < p; j += 7) eta += 0.8 * x(i, j);
    y[i] = eta + noise(gen) > 0 ? 1.0 : 0.0;
  }
  return reference::standardize_pooled(x, y);
}

}  // namespace

TEST_CASE("compute_scores") {
  const auto cache = two_by_two();
  const std::vector<std::size_t> both{0, 1};

  SUBCASE("zero beta gives A") {
    auto s = state_with({5.0, -3.0}, {});
    CHECK(compute_scores(cache, s, both) == std::vector<double>{5.0, -3.0});
  }
  SUBCASE("one included covariate") {
    auto s = state_with({5.0, -3.0}, {{0, 0.5}});
    const auto scores = compute_scores(cache, s, both);
    CHECK(scores[0] == doctest::Approx(3.5));
    CHECK(scores[1] == doctest::Approx(-3.5));
  }
  SUBCASE("missing pair is an error") {
    AggregateCache sparse({5.0, -3.0}, {3.0, 3.0});
    auto s = state_with({5.0, -3.0}, {{0, 0.5}});
    CHECK_THROWS_AS(compute_scores(sparse, s, both), Error);
  }
}

TEST_CASE("compute_scores equals the residual cross-product") {
  // Columns with sum x^2 = 3 and x1.x2 = 1; y with x.y = (5, -3).
  Matrix x(4, 2);
  const double c1[] = {1.0, 1.0, 1.0, 0.0};
  const double c2[] = {1.0, 1.0, -1.0, 0.0};
  const std::vector<double> y{1.0, 0.0, 4.0, 0.0};
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = c1[i];
    x(i, 1) = c2[i];
  }
  double a0 = 0, a1 = 0;
  for (int i = 0; i < 4; ++i) {
    a0 += x(i, 0) * y[i];
    a1 += x(i, 1) * y[i];
  }
  REQUIRE(a0 == 5.0);
  REQUIRE(a1 == -3.0);
  AggregateCache cache({a0, a1}, {testing::brute_dot(x, 0, 0), testing::brute_dot(x, 1, 1)});
  cache.insert(0, 1, testing::brute_dot(x, 0, 1));
  auto state = state_with({a0, a1}, {{0, 0.5}});
  const std::vector<std::size_t> both{0, 1};
  const auto scores = compute_scores(cache, state, both);
  for (std::size_t j = 0; j < 2; ++j) {
    double oracle = 0.0;
    for (int i = 0; i < 4; ++i) oracle += x(i, j) * (y[i] - 0.5 * x(i, 0));
    CHECK(scores[j] == doctest::Approx(oracle).epsilon(1e-12));
  }
  CHECK(scores[0] == doctest::Approx(3.5));
  CHECK(scores[1] == doctest::Approx(-3.5));
}

TEST_CASE("select_update") {
  const auto cache = two_by_two();
  const std::vector<std::size_t> both{0, 1};
  SUBCASE("tie goes to the lowest index") {
    const std::vector<double> scores{3.5, -3.5};
    const auto u = select_update(both, scores, cache, 0.1);
    CHECK(u.j_star == 0);
    CHECK(u.gamma_bar == doctest::Approx(0.1 * 3.5 / 3.0));
  }
  SUBCASE("unique maximum with nu = 1") {
    AggregateCache c3({0.0, 0.0, 7.0}, {9.0, 9.0, 9.0});
    const std::vector<std::size_t> all{0, 1, 2};
    const std::vector<double> scores{0.0, 0.0, 7.0};
    const auto u = select_update(all, scores, c3, 1.0);
    CHECK(u.j_star == 2);
    CHECK(u.gamma_bar == doctest::Approx(7.0 / 9.0));
  }
  SUBCASE("empty candidate set") {
    CHECK_THROWS_AS(select_update({}, {}, cache, 0.1), Error);
  }
  SUBCASE("non-finite score") {
    const std::vector<double> scores{std::nan(""), 1.0};
    CHECK_THROWS_AS(select_update(both, scores, cache, 0.1), Error);
  }
}

TEST_CASE("apply_update") {
  auto s = BoostingState::initial(std::vector<double>{1.0, 2.0});
  apply_update(s, {0, 0.2});
  CHECK(s.coefficient(0) == doctest::Approx(0.2));
  CHECK(s.inclusion_order == std::vector<std::size_t>{0});
  apply_update(s, {0, 0.1});
  CHECK(s.coefficient(0) == doctest::Approx(0.3));
  CHECK(s.inclusion_order.size() == 1);
  apply_update(s, {1, -0.1});
  CHECK(s.inclusion_order == std::vector<std::size_t>{0, 1});
  CHECK(s.step == 3);
}

TEST_CASE("heuristic_candidates") {
  SUBCASE("first step takes everything") {
    auto s = BoostingState::initial(std::vector<double>{3.0, 2.0, 1.0});
    CHECK(heuristic_candidates(s) == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("threshold on squared scores") {
    auto s = state_with({3.0, -2.0, 1.0}, {{0, 0.1}});
    s.scores[0] = std::sqrt(3.0);
    CHECK(heuristic_candidates(s) == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("included scores above every excluded one") {
    auto s = state_with({3.0, -2.0, 1.0}, {{0, 0.1}});
    s.scores[0] = 10.0;
    CHECK(heuristic_candidates(s) == std::vector<std::size_t>{0});
  }
}

TEST_CASE("block_extension") {
  auto s = state_with({3.0, 2.0, 1.0, std::sqrt(0.5)}, {{0, 0.1}});
  const std::vector<std::size_t> cand{0, 1};
  CHECK(block_extension(s, cand, 0) == cand);
  CHECK(block_extension(s, cand, 1) == std::vector<std::size_t>{0, 1, 2});
  CHECK(block_extension(s, cand, 4) == std::vector<std::size_t>{0, 1, 2, 3});
}

TEST_CASE("plan_fetch") {
  SUBCASE("full mode fetches the new covariate's row") {
    AggregateCache cache(std::vector<double>(5, 1.0), std::vector<double>(5, 4.0));
    auto s = state_with(std::vector<double>(5, 1.0), {{1, 0.1}});
    std::vector<std::size_t> all{0, 1, 2, 3, 4};
    const auto plan = plan_fetch(s, cache, all, BoostMode::kFull);
    CHECK(plan.pairs == std::vector<IndexPair>{{0, 1}, {1, 2}, {1, 3}, {1, 4}});
    CHECK(plan.reason == FetchReason::kNewInclusion);
  }
  SUBCASE("heuristic with a cached pair needs nothing") {
    AggregateCache cache(std::vector<double>(2, 1.0), std::vector<double>(2, 4.0));
    cache.insert(0, 1, 0.5);
    auto s = state_with({1.0, 1.0}, {{0, 0.1}});
    std::vector<std::size_t> cand{0, 1};
    CHECK(plan_fetch(s, cache, cand, BoostMode::kHeuristic).empty());
  }
  SUBCASE("block mode fetches the triangle") {
    AggregateCache cache(std::vector<double>(4, 1.0), std::vector<double>(4, 4.0));
    auto s = state_with(std::vector<double>(4, 1.0), {{0, 0.1}});
    std::vector<std::size_t> ext{0, 1, 2};
    const auto plan = plan_fetch(s, cache, ext, BoostMode::kBlockHeuristic);
    CHECK(plan.pairs == std::vector<IndexPair>{{0, 1}, {0, 2}, {1, 2}});
  }
  SUBCASE("nothing is fetched before the first inclusion") {
    AggregateCache cache(std::vector<double>(4, 1.0), std::vector<double>(4, 4.0));
    auto s = BoostingState::initial(std::vector<double>(4, 1.0));
    std::vector<std::size_t> all{0, 1, 2, 3};
    for (auto mode : {BoostMode::kFull, BoostMode::kHeuristic, BoostMode::kBlockHeuristic})
      CHECK(plan_fetch(s, cache, all, mode).empty());
  }
}

TEST_CASE("AggregateCache rejects degenerate diagonals") {
  CHECK_THROWS_AS(AggregateCache({1.0}, {0.0}), Error);
  CHECK_THROWS_AS(AggregateCache({1.0}, {std::nan("")}), Error);
}

TEST_CASE("run_boosting call accounting") {
  const auto data = random_dataset(120, 40, 3);
  reference::MatrixProvider provider(data.x, data.y);

  SUBCASE("target size 0 makes only the univariable call") {
    BoostingConfig cfg{.p = 40, .max_steps = 100, .target_model_size = 0};
    const auto run = run_boosting(provider, cfg);
    CHECK(run.ledger.data_calls() == 1);
    CHECK(run.state.beta.empty());
  }
  SUBCASE("full mode calls carry p - k values") {
    BoostingConfig cfg{.p = 40, .max_steps = 1000, .target_model_size = 6};
    const auto run = run_boosting(provider, cfg);
    CHECK(run.ledger.data_calls() == 7);
    CHECK(run.ledger.call_sizes == std::vector<std::size_t>{39, 38, 37, 36, 35, 34});
    CHECK(run.ledger.values_transferred == 219);
  }
}

TEST_CASE("boosting properties on random datasets") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    CAPTURE(seed);
    const std::size_t n = 80 + 10 * seed, p = 15 + seed;
    const auto data = random_dataset(n, p, seed);
    reference::MatrixProvider inner(data.x, data.y);
    const std::size_t steps = 40;

    const auto oracle = reference::boost(data.x, data.y, 0.1, steps, std::nullopt);

    BoostingConfig full{.p = p, .max_steps = steps, .mode = BoostMode::kFull};
    CountingProvider counting(inner);
    const auto run_full = run_boosting(counting, full);

    // oracle equivalence
    CHECK(run_full.state.inclusion_order == oracle.inclusion_order);
    const auto dense = run_full.state.dense_beta();
    for (std::size_t j = 0; j < p; ++j) CHECK(testing::rel_diff(dense[j], oracle.beta[j]) < 1e-10);

    // monotone cache and ledger conservation
    CHECK(run_full.ledger.values_transferred == run_full.cache.offdiag_count());
    CHECK(counting.seen.size() == run_full.cache.offdiag_count());
    for (const auto& pr : counting.seen) CHECK(run_full.cache.available(pr.j, pr.k));

    // heuristic safety: every score used equals a full recomputation
    BoostingConfig heur = full;
    heur.mode = BoostMode::kHeuristic;
    bool safe = true;
    const auto run_heur = run_boosting(inner, heur, [&](const BoostingState& s, std::span<const std::size_t> cand) {
      const auto dense_b = s.dense_beta();
      for (std::size_t j : cand) {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          double fit = 0.0;
          for (const auto& [k, b] : s.beta) fit += b * data.x(i, k);
          r += data.x(i, j) * (data.y[i] - fit);
        }
        if (testing::rel_diff(s.scores[j], r) > 1e-9 && std::abs(s.scores[j] - r) > 1e-9) safe = false;
      }
    });
    CHECK(safe);

    // w degeneracies
    BoostingConfig block = full;
    block.mode = BoostMode::kBlockHeuristic;
    block.buffer_w = p;
    const auto run_wp = run_boosting(inner, block);
    CHECK(run_wp.state.inclusion_order == run_full.state.inclusion_order);
    CHECK(run_wp.state.dense_beta() == dense);
    block.buffer_w = 0;
    const auto run_w0 = run_boosting(inner, block);
    CHECK(run_w0.state.inclusion_order == run_heur.state.inclusion_order);
    CHECK(run_w0.state.dense_beta() == run_heur.state.dense_beta());

    // determinism
    const auto again = run_boosting(inner, full);
    CHECK(again.state.dense_beta() == dense);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS((BoostingConfig{.p = 3, .nu = 0.0}.validate()), Error);
  CHECK_THROWS_AS((BoostingConfig{.p = 3, .max_steps = 0}.validate()), Error);
  CHECK_THROWS_AS((BoostingConfig{.p = 3, .buffer_w = 4}.validate()), Error);
  CHECK_NOTHROW((BoostingConfig{.p = 3}.validate()));
  CHECK(parse_boost_mode("block") == BoostMode::kBlockHeuristic);
  CHECK_THROWS_AS(parse_boost_mode("bogus"), Error);
}
