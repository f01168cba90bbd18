#include "fedboost/simgen.hpp"

#include <algorithm>
#include <cmath>

#include "fedboost/csv.hpp"
#include "fedboost/error.hpp"

namespace fedboost::sim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string_view to_string(Structure s) { return s == Structure::kModerate ? "moderate" : "grouped"; }

Structure parse_structure(std::string_view text) {
  if (text == "moderate") return Structure::kModerate;
  if (text == "grouped") return Structure::kGrouped;
  throw Error(ErrorCode::kConfig, "unknown structure '" + std::string(text) + "'");
}

void Scenario::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  if (n < 2) bad("n must be at least 2");
  if (p < 1) bad("p must be at least 1");
  if (group_size < 1) bad("group_size must be at least 1");
  for (double q : {p_same_within, p_same_between})
    if (!(q >= 1.0 / 3.0 && q <= 1.0)) bad("same-value probabilities must lie in [1/3, 1]");
  if (effects.per_group != 1 && effects.per_group != 2) bad("per_group must be 1 or 2");
  if (effects.per_group == 2 && group_size < 4) bad("two effects per group need group_size >= 4");
  if (sites < 1) bad("sites must be at least 1");
  if (replicates < 1) bad("replicates must be at least 1");
  if (n % sites != 0)
    throw Error(ErrorCode::kIndivisibleSplit,
                std::to_string(n) + " rows do not split into " + std::to_string(sites) + " sites");
  place_effects(*this);
}

std::vector<Scenario> desk_scenarios(std::size_t n, std::size_t sites) {
  std::vector<Scenario> out(4);
  out[0].name = "moderate-10x1.0";
  out[0].structure = Structure::kModerate;
  out[0].effects = {10, 1.0, 1};
  out[1].name = "grouped1-10x1.0";
  out[1].structure = Structure::kGrouped;
  out[1].effects = {10, 1.0, 1};
  out[2].name = "grouped2-10x1.0";
  out[2].structure = Structure::kGrouped;
  out[2].effects = {10, 1.0, 2};
  out[3].name = "grouped1-50x0.2";
  out[3].structure = Structure::kGrouped;
  out[3].effects = {50, 0.2, 1};
  for (auto& s : out) {
    s.n = n;
    s.sites = sites;
  }
  return out;
}

std::vector<std::size_t> TruthVector::effect_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < beta.size(); ++j)
    if (beta[j] != 0.0) out.push_back(j);
  return out;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const std::uint64_t r = engine_();
    if (r >= threshold) return r % bound;
  }
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate, Stream stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ replicate) ^ static_cast<std::uint64_t>(stream));
}

double copy_probability(double same_probability) {
  return (same_probability - 1.0 / 3.0) / (2.0 / 3.0);
}

double same_probability(const Scenario& scenario, std::size_t j) {
  if (scenario.structure == Structure::kGrouped &&
      (j - 1) / scenario.group_size == j / scenario.group_size)
    return scenario.p_same_within;
  return scenario.p_same_between;
}

Matrix gen_covariates(const Scenario& scenario, Rng& rng) {
  const std::size_t n = scenario.n;
  const std::size_t p = scenario.p;
  std::vector<double> copy(p, 0.0);
  for (std::size_t j = 1; j < p; ++j) copy[j] = copy_probability(same_probability(scenario, j));

  Matrix x(n, p);
  // Row-wise so a row's draws are contiguous in the stream.
  for (std::size_t i = 0; i < n; ++i) {
    double prev = static_cast<double>(rng.below(3)) - 1.0;
    x(i, 0) = prev;
    for (std::size_t j = 1; j < p; ++j) {
      if (rng.uniform() >= copy[j]) prev = static_cast<double>(rng.below(3)) - 1.0;
      x(i, j) = prev;
    }
  }
  return x;
}

TruthVector place_effects(const Scenario& scenario) {
  TruthVector truth{std::vector<double>(scenario.p, 0.0)};
  const auto& e = scenario.effects;
  const std::size_t g = scenario.group_size;
  std::vector<std::size_t> positions;
  if (e.per_group == 1) {
    for (std::size_t q = 0; q < e.count; ++q) positions.push_back(q * g);
  } else {
    for (std::size_t q = 0; q < e.count; ++q) positions.push_back((q / 2) * 2 * g + (q % 2) * 3);
  }
  for (std::size_t q = 0; q < positions.size(); ++q) {
    if (positions[q] >= scenario.p)
      throw Error(ErrorCode::kLayoutInfeasible, std::to_string(e.count) +
                                                    " effects do not fit into p=" +
                                                    std::to_string(scenario.p));
    if (q > 0 && positions[q] - positions[q - 1] < 3)
      throw Error(ErrorCode::kLayoutInfeasible, "fewer than two null covariates between effects");
    truth.beta[positions[q]] = e.size;
  }
  return truth;
}

std::vector<double> gen_outcome(const Matrix& x, const TruthVector& truth, Rng& rng) {
  std::vector<double> eta(x.rows(), 0.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    if (truth.beta[j] == 0.0) continue;
    const auto c = x.col(j);
    for (std::size_t i = 0; i < x.rows(); ++i) eta[i] += truth.beta[j] * c[i];
  }
  std::vector<double> y(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-eta[i]));
    y[i] = rng.uniform() < prob ? 1.0 : 0.0;
  }
  return y;
}

std::vector<SiteDataset> split_cohorts(const Matrix& x, std::span<const double> y,
                                       std::size_t sites, Rng& rng) {
  const std::size_t n = x.rows();
  if (sites == 0 || n % sites != 0)
    throw Error(ErrorCode::kIndivisibleSplit,
                std::to_string(n) + " rows do not split into " + std::to_string(sites) + " sites");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (sites > 1)
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const std::size_t block = n / sites;
  std::vector<SiteDataset> out;
  out.reserve(sites);
  for (std::size_t l = 0; l < sites; ++l) {
    std::span<const std::size_t> rows(order.data() + l * block, block);
    SiteDataset site{x.select_rows(rows), std::vector<double>(block), {}};
    for (std::size_t r = 0; r < block; ++r) site.y[r] = y[rows[r]];
    out.push_back(std::move(site));
  }
  return out;
}

Replicate generate_replicate(const Scenario& scenario, std::size_t replicate) {
  scenario.validate();
  Replicate rep;
  rep.truth = place_effects(scenario);
  Rng cov(stream_seed(scenario.seed, replicate, Stream::kCovariates));
  rep.x = gen_covariates(scenario, cov);
  Rng out(stream_seed(scenario.seed, replicate, Stream::kOutcome));
  rep.y = gen_outcome(rep.x, rep.truth, out);
  Rng split(stream_seed(scenario.seed, replicate, Stream::kSplit));
  rep.sites = split_cohorts(rep.x, rep.y, scenario.sites, split);
  Rng test(stream_seed(scenario.seed, replicate, Stream::kTest));
  rep.test_x = gen_covariates(scenario, test);
  rep.test_y = gen_outcome(rep.test_x, rep.truth, test);
  return rep;
}

void save_truth(const std::filesystem::path& path, const TruthVector& truth) {
  csv::Table table{{"covariate", "beta"}, {}};
  for (std::size_t j = 0; j < truth.beta.size(); ++j)
    table.rows.push_back({std::to_string(j + 1), csv::format_double(truth.beta[j])});
  csv::write(path, table);
}

TruthVector load_truth(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const auto c_idx = table.column("covariate");
  const auto c_beta = table.column("beta");
  TruthVector truth{std::vector<double>(table.rows.size(), 0.0)};
  for (const auto& row : table.rows) {
    const auto j = csv::to_integer(row[c_idx]);
    if (j < 1 || static_cast<std::size_t>(j) > truth.beta.size())
      throw Error(ErrorCode::kIo, "truth covariate out of range: " + row[c_idx]);
    truth.beta[static_cast<std::size_t>(j - 1)] = csv::to_double(row[c_beta]);
  }
  return truth;
}

void write_replicate(const std::filesystem::path& dir, const Replicate& rep) {
  std::filesystem::create_directories(dir);
  for (std::size_t l = 0; l < rep.sites.size(); ++l)
    save_site_csv(dir / ("site_" + std::to_string(l + 1) + ".csv"), rep.sites[l]);
  save_truth(dir / "truth.csv", rep.truth);
  save_site_csv(dir / "test.csv", SiteDataset{rep.test_x, rep.test_y, {}});
}

}  // namespace fedboost::sim
