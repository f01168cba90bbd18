#include <benchmark/benchmark.h>

#include <random>

#include "fedboost/kernels.hpp"

using namespace fedboost;

namespace {

Matrix ternary(std::size_t n, std::size_t p) {
  std::mt19937_64 gen(1);
  Matrix x(n, p);
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = static_cast<double>(static_cast<int>(gen() % 3) - 1);
  return x;
}

std::vector<IndexPair> row_pairs(std::size_t p) {
  std::vector<IndexPair> pairs;
  for (std::size_t k = 1; k < p; ++k) pairs.push_back({0, k});
  return pairs;
}

template <auto Kernel>
void cross_products(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const Matrix x = ternary(n, p);
  std::vector<double> y(n, 0.5), out(p);
  for (auto _ : state) {
    Kernel(x, y, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * p));
}

template <auto Kernel>
void pair_products(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const Matrix x = ternary(n, p);
  const auto pairs = row_pairs(p);
  std::vector<double> out(pairs.size());
  for (auto _ : state) {
    Kernel(x, pairs, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * pairs.size()));
}

template <auto Kernel>
void centered_ssq(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = static_cast<std::size_t>(state.range(1));
  const Matrix x = ternary(n, p);
  std::vector<double> center(p, 0.1), out(p);
  for (auto _ : state) {
    Kernel(x, center, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * p));
}

void sizes(benchmark::internal::Benchmark* b) {
  b->Args({100, 250})->Args({500, 2500})->Args({5000, 2500})->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(cross_products<kernels::serial::cross_products>)->Name("cross_products/serial")->Apply(sizes);
BENCHMARK(cross_products<kernels::parallel::cross_products>)->Name("cross_products/parallel")->Apply(sizes);
BENCHMARK(pair_products<kernels::serial::pair_products>)->Name("pair_products/serial")->Apply(sizes);
BENCHMARK(pair_products<kernels::parallel::pair_products>)->Name("pair_products/parallel")->Apply(sizes);
BENCHMARK(centered_ssq<kernels::serial::centered_ssq>)->Name("centered_ssq/serial")->Apply(sizes);
BENCHMARK(centered_ssq<kernels::parallel::centered_ssq>)->Name("centered_ssq/parallel")->Apply(sizes);

BENCHMARK_MAIN();
