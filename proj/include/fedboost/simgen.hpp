#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fedboost/matrix.hpp"
#include "fedboost/site_node.hpp"

namespace fedboost::sim {

enum class Structure { kModerate, kGrouped };

std::string_view to_string(Structure s);
Structure parse_structure(std::string_view text);

struct EffectLayout {
  std::size_t count = 10;
  double size = 1.0;
  std::size_t per_group = 1;  // 1 or 2
};

struct Scenario {
  std::string name = "moderate-10x1.0";
  std::size_t n = 500;
  std::size_t p = 250;
  Structure structure = Structure::kModerate;
  std::size_t group_size = 5;
  double p_same_within = 0.75;
  double p_same_between = 0.5;
  EffectLayout effects;
  std::size_t sites = 1;
  std::uint64_t seed = 20190101;
  std::size_t replicates = 1;

  // Throws Error(kConfig / kIndivisibleSplit / kLayoutInfeasible).
  void validate() const;
};

// The four desk-scale scenarios used by the acceptance and benchmark runs:
// moderate / grouped (one effect per group) / grouped (two per group) with
// 10 effects of size 1.0, and grouped with 50 effects of size 0.2.
std::vector<Scenario> desk_scenarios(std::size_t n, std::size_t sites);

struct TruthVector {
  std::vector<double> beta;

  std::vector<std::size_t> effect_indices() const;
};

// mt19937_64 with hand-written draws so output does not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, bound), unbiased by rejection.
  std::uint64_t below(std::uint64_t bound);
  // Uniform on [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

enum class Stream : std::uint64_t { kCovariates = 1, kOutcome = 2, kSplit = 3, kTest = 4 };

// Seed for one (replicate, purpose) stream: splitmix64 applied to the scenario
// seed, then the replicate index, then the stream tag.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t replicate, Stream stream);

// Adjacent columns agree with probability q (0.75 within a group under
// Grouped, 0.5 otherwise): copy the left neighbour with probability
// (q - 1/3) / (2/3), else draw uniformly from {-1, 0, 1}.
Matrix gen_covariates(const Scenario& scenario, Rng& rng);

double copy_probability(double same_probability);
// Agreement probability between columns j-1 and j (j >= 1).
double same_probability(const Scenario& scenario, std::size_t j);

// Effects at offset 0 of consecutive groups (per_group = 1), or at offsets
// 0 and 3 of every second group (per_group = 2). Throws LayoutInfeasible.
TruthVector place_effects(const Scenario& scenario);

// y_i ~ Bernoulli(expit(x_i . beta)), no intercept.
std::vector<double> gen_outcome(const Matrix& x, const TruthVector& truth, Rng& rng);

// Random partition into `sites` equal blocks; one site keeps the row order.
// Throws IndivisibleSplit.
std::vector<SiteDataset> split_cohorts(const Matrix& x, std::span<const double> y,
                                       std::size_t sites, Rng& rng);

struct Replicate {
  TruthVector truth;
  Matrix x;
  std::vector<double> y;
  std::vector<SiteDataset> sites;
  Matrix test_x;
  std::vector<double> test_y;
};

Replicate generate_replicate(const Scenario& scenario, std::size_t replicate);

// site_<l>.csv (l from 1), truth.csv, test.csv.
void write_replicate(const std::filesystem::path& dir, const Replicate& rep);

TruthVector load_truth(const std::filesystem::path& path);
void save_truth(const std::filesystem::path& path, const TruthVector& truth);

}  // namespace fedboost::sim
