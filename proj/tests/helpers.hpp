#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "fedboost/matrix.hpp"
#include "fedboost/site_node.hpp"

namespace fedboost::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

inline Matrix random_ternary(std::size_t rows, std::size_t cols, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> pick(-1, 1);
  Matrix m(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = pick(gen);
  return m;
}

inline std::vector<double> random_binary(std::size_t n, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(0.5);
  std::vector<double> y(n);
  for (auto& v : y) v = coin(gen) ? 1.0 : 0.0;
  return y;
}

inline double brute_dot(const Matrix& x, std::size_t j, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += x(i, j) * x(i, k);
  return s;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

// Split rows of (x, y) into `sites` consecutive blocks.
inline std::vector<SiteDataset> split_rows(const Matrix& x, const std::vector<double>& y,
                                           std::size_t sites) {
  std::vector<SiteDataset> out;
  const std::size_t per = x.rows() / sites;
  for (std::size_t l = 0; l < sites; ++l) {
    const std::size_t begin = l * per;
    const std::size_t end = l + 1 == sites ? x.rows() : begin + per;
    SiteDataset d;
    d.x = x.row_block(begin, end - begin);
    d.y.assign(y.begin() + static_cast<std::ptrdiff_t>(begin), y.begin() + static_cast<std::ptrdiff_t>(end));
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace fedboost::testing
