#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "fedboost/error.hpp"
#include "fedboost/kernels.hpp"
#include "fedboost/reference.hpp"
#include "fedboost/site_node.hpp"
#include "fedboost/transport.hpp"
#include "helpers.hpp"

using namespace fedboost;
namespace proto = fedboost::protocol;

namespace {

SiteDataset dataset(Matrix x, std::vector<double> y) {
  SiteDataset d;
  d.x = std::move(x);
  d.y = std::move(y);
  return d;
}

SiteDataset random_site(std::size_t n, std::size_t p, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return dataset(testing::random_ternary(n, p, gen), testing::random_binary(n, gen));
}

}  // namespace

TEST_CASE("standardize_local") {
  Matrix x(4, 2);
  const double col0[] = {1, -1, 1, -1};
  const double col1[] = {2, 0, 1, 1};
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = col0[i];
    x(i, 1) = col1[i];
  }
  const auto s = standardize_local(dataset(x, {1, 0, 1, 0}));
  const double sd = std::sqrt(4.0 / 3.0);
  for (int i = 0; i < 4; ++i) CHECK(s.x(i, 0) == doctest::Approx(col0[i] / sd).epsilon(1e-15));
  for (std::size_t j = 0; j < 2; ++j) {
    double sum = 0.0, ssq = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      sum += s.x(i, j);
      ssq += s.x(i, j) * s.x(i, j);
    }
    CHECK(std::abs(sum) < 1e-14);
    CHECK(ssq == doctest::Approx(3.0).epsilon(1e-14));
  }
  CHECK(s.y == std::vector<double>{0.5, -0.5, 0.5, -0.5});

  Matrix constant(4, 1, 1.0);
  CHECK_THROWS_AS(standardize_local(dataset(constant, {1, 0, 1, 0})), Error);
}

TEST_CASE("global standardization from two sites equals pooled standardization") {
  const auto a = random_site(13, 5, 1);
  const auto b = random_site(21, 5, 2);

  const auto ma = global_moment_contrib(a), mb = global_moment_contrib(b);
  const double n = static_cast<double>(ma.n + mb.n);
  std::vector<double> means(5);
  for (std::size_t j = 0; j < 5; ++j) means[j] = (ma.sum_x[j] + mb.sum_x[j]) / n;
  const double y_mean = (ma.sum_y + mb.sum_y) / n;
  const auto sa = global_ssq_contrib(a, means, y_mean), sb = global_ssq_contrib(b, means, y_mean);
  std::vector<double> sds(5);
  for (std::size_t j = 0; j < 5; ++j) sds[j] = std::sqrt((sa.ssq_x[j] + sb.ssq_x[j]) / (n - 1));

  const Matrix both_x = vstack(std::vector<Matrix>{a.x, b.x});
  std::vector<double> both_y = a.y;
  both_y.insert(both_y.end(), b.y.begin(), b.y.end());
  const auto oracle = reference::standardize_pooled(both_x, both_y);

  const auto ga = apply_global_standardization(a, means, sds, y_mean);
  const auto gb = apply_global_standardization(b, means, sds, y_mean);
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t i = 0; i < 13; ++i) CHECK(ga.x(i, j) == doctest::Approx(oracle.x(i, j)).epsilon(1e-13));
    for (std::size_t i = 0; i < 21; ++i)
      CHECK(gb.x(i, j) == doctest::Approx(oracle.x(13 + i, j)).epsilon(1e-13));
  }
  for (std::size_t i = 0; i < 13; ++i) CHECK(ga.y[i] == doctest::Approx(oracle.y[i]).epsilon(1e-13));

  SUBCASE("single site global equals local") {
    const auto m = global_moment_contrib(a);
    std::vector<double> mu(5), sd(5);
    for (std::size_t j = 0; j < 5; ++j) mu[j] = m.sum_x[j] / 13.0;
    const auto ss = global_ssq_contrib(a, mu, m.sum_y / 13.0);
    for (std::size_t j = 0; j < 5; ++j) sd[j] = std::sqrt(ss.ssq_x[j] / 12.0);
    const auto g = apply_global_standardization(a, mu, sd, m.sum_y / 13.0);
    const auto l = standardize_local(a);
    for (std::size_t j = 0; j < 5; ++j)
      for (std::size_t i = 0; i < 13; ++i) CHECK(g.x(i, j) == doctest::Approx(l.x(i, j)).epsilon(1e-14));
  }
}

TEST_CASE("univariable_stats and covariance_block") {
  const auto raw = random_site(6, 4, 9);
  CHECK_THROWS_AS(univariable_stats(raw), Error);
  const auto s = standardize_local(raw);

  const auto u = univariable_stats(s);
  for (std::size_t j = 0; j < 4; ++j) {
    double a = 0.0;
    for (std::size_t i = 0; i < 6; ++i) a += s.x(i, j) * s.y[i];
    CHECK(std::abs(u.a[j] - a) <= 1e-12 * std::max(1.0, std::abs(a)));
    CHECK(u.c_diag[j] == doctest::Approx(5.0).epsilon(1e-14));
  }

  const std::vector<IndexPair> pairs{{0, 2}, {1, 3}};
  const auto block = covariance_block(s, pairs);
  REQUIRE(block.size() == 2);
  for (std::size_t q = 0; q < 2; ++q) {
    CHECK(block[q].j == pairs[q].j);
    CHECK(block[q].k == pairs[q].k);
    CHECK(std::abs(block[q].value - testing::brute_dot(s.x, pairs[q].j, pairs[q].k)) <= 1e-12);
  }

  const std::vector<IndexPair> bad{{0, 4}};
  CHECK_THROWS_AS(covariance_block(s, bad), Error);
}

TEST_CASE("univariable edge cases") {
  Matrix x(4, 2);
  const double c0[] = {1, -1, 1, -1};
  const double c1[] = {1, 1, -1, -1};
  for (int i = 0; i < 4; ++i) {
    x(i, 0) = c0[i];
    x(i, 1) = c1[i];
  }
  // y centered equals column 0 scaled; y orthogonal to column 1
  auto s = standardize_local(dataset(x, {1, 0, 1, 0}));
  s.y.assign(s.x.col(0).begin(), s.x.col(0).end());
  const auto u = univariable_stats(s);
  CHECK(u.a[0] == doctest::Approx(u.c_diag[0]));
  CHECK(std::abs(u.a[1]) < 1e-15);

  const std::vector<IndexPair> pairs{{0, 1}};
  CHECK(std::abs(covariance_block(s, pairs)[0].value) < 1e-15);
  Matrix dup(4, 2);
  for (int i = 0; i < 4; ++i) dup(i, 0) = dup(i, 1) = c0[i];
  auto sd = standardize_local(dataset(dup, {1, 0, 0, 1}));
  CHECK(covariance_block(sd, pairs)[0].value == doctest::Approx(univariable_stats(sd).c_diag[0]));
}

TEST_CASE("SiteNode request handling") {
  SiteNode node(random_site(30, 6, 4), {10});
  auto call = [&](proto::RequestBody body) { return node.handle({42, std::move(body)}); };

  const auto meta = call(proto::req::Describe{});
  CHECK(meta.request_id == 42);
  CHECK(std::get<proto::resp::SiteMeta>(meta.body) == proto::resp::SiteMeta{30, 6});

  SUBCASE("statistics need standardization first") {
    CHECK(std::holds_alternative<proto::resp::Refusal>(call(proto::req::UnivariableStats{}).body));
  }
  SUBCASE("local mode") {
    CHECK(std::holds_alternative<proto::resp::Ack>(call(proto::req::StandardizeLocal{}).body));
    const auto first = call(proto::req::UnivariableStats{});
    const auto second = call(proto::req::UnivariableStats{});
    CHECK(first == second);
    for (double c : std::get<proto::resp::UnivariableStats>(first.body).c_diag)
      CHECK(c == doctest::Approx(29.0).epsilon(1e-14));

    const auto fwd = call(proto::req::CovarianceBlock{{{1, 4}, {2, 5}}});
    const auto& values = std::get<proto::resp::CovarianceBlock>(fwd.body).values;
    CHECK(values[0].value == doctest::Approx(testing::brute_dot(node.standardized().x, 4, 1)));
    CHECK(std::holds_alternative<proto::resp::Refusal>(call(proto::req::CovarianceBlock{{{2, 2}}}).body));
    CHECK(std::holds_alternative<proto::resp::Refusal>(call(proto::req::CovarianceBlock{{{2, 9}}}).body));
  }
  SUBCASE("frames") {
    const auto out = node.handle_frame("garbage");
    const auto r = proto::decode_response(out);
    CHECK(r.request_id == 0);
    CHECK(std::holds_alternative<proto::resp::Refusal>(r.body));
  }
}

TEST_CASE("small sites refuse statistics") {
  SiteNode node(random_site(5, 3, 8), {10});
  CHECK(std::holds_alternative<proto::resp::SiteMeta>(node.handle({1, proto::req::Describe{}}).body));
  CHECK(std::holds_alternative<proto::resp::Ack>(node.handle({2, proto::req::StandardizeLocal{}}).body));
  const auto r = node.handle({3, proto::req::CovarianceBlock{{{0, 1}}}});
  CHECK(std::get<proto::resp::Refusal>(r.body).reason == "site too small");
}

TEST_CASE("no response grows with the number of rows") {
  for (std::size_t n : {20u, 400u}) {
    SiteNode node(random_site(n, 8, n), {10});
    node.handle({1, proto::req::StandardizeLocal{}});
    const auto u = proto::encode(node.handle({2, proto::req::UnivariableStats{}}));
    const auto c = proto::encode(node.handle({3, proto::req::CovarianceBlock{{{0, 1}}}}));
    CHECK(u.size() < 1000);
    CHECK(c.size() < 200);
  }
}

TEST_CASE("site CSV roundtrip") {
  const auto dir = std::filesystem::temp_directory_path() / "fedboost_site_csv";
  std::filesystem::create_directories(dir);
  const auto d = random_site(12, 3, 1);
  save_site_csv(dir / "s.csv", d);
  const auto back = load_site_csv(dir / "s.csv");
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  std::filesystem::remove_all(dir);
}

TEST_CASE("TCP serve answers framed requests") {
  const auto dir = std::filesystem::temp_directory_path() / "fedboost_tcp_test";
  std::filesystem::create_directories(dir);
  const auto port_file = dir / "port";
  std::filesystem::remove(port_file);

  SiteNode node(random_site(40, 5, 3), {10});
  std::thread server([&] { serve({Endpoint::parse("127.0.0.1:0"), port_file, 1}, node); });
  while (!std::filesystem::exists(port_file)) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  std::ifstream in(port_file);
  int port = 0;
  in >> port;
  {
    TcpChannel channel(Endpoint{"127.0.0.1", static_cast<std::uint16_t>(port)});
    const auto meta = channel.call({1, proto::req::Describe{}});
    CHECK(std::get<proto::resp::SiteMeta>(meta.body).n == 40);
    channel.call({2, proto::req::StandardizeLocal{}});
    const auto cov = channel.call({3, proto::req::CovarianceBlock{{{0, 1}}}});
    CHECK(cov.request_id == 3);
    CHECK(std::get<proto::resp::CovarianceBlock>(cov.body).values.size() == 1);
  }
  server.join();
  std::filesystem::remove_all(dir);
}
