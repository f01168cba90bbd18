#include "fedboost/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace fedboost {

Matrix Matrix::row_block(std::size_t first, std::size_t count) const {
  if (first + count > rows_) throw std::out_of_range("row_block out of range");
  Matrix out(count, cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    auto src = col(j).subspan(first, count);
    std::copy(src.begin(), src.end(), out.col(j).begin());
  }
  return out;
}

Matrix Matrix::select_rows(std::span<const std::size_t> rows) const {
  Matrix out(rows.size(), cols_);
  for (std::size_t j = 0; j < cols_; ++j) {
    auto src = col(j);
    auto dst = out.col(j);
    for (std::size_t r = 0; r < rows.size(); ++r) dst[r] = src[rows[r]];
  }
  return out;
}

Matrix vstack(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t cols = blocks.front().cols();
  std::size_t rows = 0;
  for (const auto& b : blocks) {
    if (b.cols() != cols) throw std::invalid_argument("vstack: column mismatch");
    rows += b.rows();
  }
  Matrix out(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    auto dst = out.col(j).begin();
    for (const auto& b : blocks) dst = std::copy(b.col(j).begin(), b.col(j).end(), dst);
  }
  return out;
}

}  // namespace fedboost
