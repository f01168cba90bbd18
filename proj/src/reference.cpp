#include "fedboost/reference.hpp"

#include <cmath>
#include <string>

#include "fedboost/error.hpp"
#include "fedboost/kernels.hpp"

namespace fedboost::reference {

StandardizedData standardize_pooled(const Matrix& x_raw, std::span<const double> y_raw) {
  const std::size_t n = x_raw.rows();
  const std::size_t p = x_raw.cols();
  StandardizedData out{x_raw, {y_raw.begin(), y_raw.end()}};

  for (std::size_t j = 0; j < p; ++j) {
    auto c = out.x.col(j);
    double mean = 0.0;
    for (double v : c) mean += v;
    mean /= static_cast<double>(n);
    double ssq = 0.0;
    for (double v : c) ssq += (v - mean) * (v - mean);
    const double sd = std::sqrt(ssq / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateColumn, "column " + std::to_string(j));
    for (double& v : c) v = (v - mean) / sd;
  }
  double y_mean = 0.0;
  for (double v : out.y) y_mean += v;
  y_mean /= static_cast<double>(n);
  for (double& v : out.y) v -= y_mean;
  return out;
}

Result boost(const Matrix& x_std, std::span<const double> y_centered, double nu,
             std::size_t max_steps, std::optional<std::size_t> target_model_size) {
  const std::size_t n = x_std.rows();
  const std::size_t p = x_std.cols();
  const double divisor = static_cast<double>(n - 1);

  Result result;
  result.beta.assign(p, 0.0);
  std::vector<bool> included(p, false);
  std::vector<double> eta(n, 0.0);
  std::vector<double> residual(n);
  std::vector<double> scores(p);

  while (result.steps < max_steps) {
    if (target_model_size && result.inclusion_order.size() >= *target_model_size) break;
    for (std::size_t i = 0; i < n; ++i) residual[i] = y_centered[i] - eta[i];
    kernels::serial::cross_products(x_std, residual, scores);

    std::size_t best = 0;
    for (std::size_t j = 1; j < p; ++j)
      if (scores[j] * scores[j] > scores[best] * scores[best]) best = j;

    const double gamma = nu * scores[best] / divisor;
    result.beta[best] += gamma;
    if (!included[best]) {
      included[best] = true;
      result.inclusion_order.push_back(best);
    }
    const auto column = x_std.col(best);
    for (std::size_t i = 0; i < n; ++i) eta[i] += gamma * column[i];
    ++result.steps;
  }
  return result;
}

MatrixProvider::MatrixProvider(const Matrix& x_std, std::span<const double> y_centered)
    : x_(x_std), y_(y_centered.begin(), y_centered.end()) {}

UnivariableAggregates MatrixProvider::fetch_univariable() {
  UnivariableAggregates out{std::vector<double>(x_.cols()), std::vector<double>(x_.cols())};
  kernels::serial::cross_products(x_, y_, out.a);
  for (std::size_t j = 0; j < x_.cols(); ++j)
    out.c_diag[j] = kernels::serial::dot(x_.col(j), x_.col(j));
  return out;
}

std::vector<double> MatrixProvider::fetch_covariances(std::span<const IndexPair> pairs) {
  std::vector<double> out(pairs.size());
  kernels::serial::pair_products(x_, pairs, out);
  return out;
}

}  // namespace fedboost::reference
