#pragma once

#include <compare>
#include <cstddef>
#include <utility>

namespace fedboost {

// Unordered covariate pair, stored with j < k. Indices are zero-based inside
// the library; files meant for people (selection.csv, truth.csv) are 1-based.
struct IndexPair {
  std::size_t j = 0;
  std::size_t k = 0;

  static IndexPair of(std::size_t a, std::size_t b) {
    return a < b ? IndexPair{a, b} : IndexPair{b, a};
  }

  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

struct PairValue {
  std::size_t j = 0;
  std::size_t k = 0;
  double value = 0.0;

  friend bool operator==(const PairValue&, const PairValue&) = default;
};

}  // namespace fedboost
