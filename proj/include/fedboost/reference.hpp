#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedboost/boost_core.hpp"
#include "fedboost/matrix.hpp"

// Individual-level route: boosting run directly on a pooled data matrix,
// keeping the offset eta_i explicitly. Nothing here touches AggregateCache;
// it exists so the aggregate route can be checked against it.
namespace fedboost::reference {

struct StandardizedData {
  Matrix x;               // columns centered, sum x^2 = n - 1
  std::vector<double> y;  // centered
};

// Global standardization of a pooled dataset (sd with divisor n - 1).
StandardizedData standardize_pooled(const Matrix& x_raw, std::span<const double> y_raw);

struct Result {
  std::vector<double> beta;
  std::vector<std::size_t> inclusion_order;
  std::size_t steps = 0;
};

// Componentwise boosting on individual data: S_j = sum_i x_ij (y_i - eta_i),
// gamma = nu * S_j* / (n - 1), eta += gamma * x_.j*. Same stopping rule as
// run_boosting.
Result boost(const Matrix& x_std, std::span<const double> y_centered, double nu,
             std::size_t max_steps, std::optional<std::size_t> target_model_size);

// Serves exact aggregates computed from an in-memory standardized matrix.
class MatrixProvider : public AggregateProvider {
 public:
  MatrixProvider(const Matrix& x_std, std::span<const double> y_centered);

  UnivariableAggregates fetch_univariable() override;
  std::vector<double> fetch_covariances(std::span<const IndexPair> pairs) override;

 private:
  const Matrix& x_;
  std::vector<double> y_;
};

}  // namespace fedboost::reference
