#pragma once

#include <span>

#include "fedboost/matrix.hpp"
#include "fedboost/types.hpp"

// Column kernels behind every aggregate a site releases. Two builds of the
// same loops: `serial` is the reference kept for tests, `parallel` spreads
// columns (or pairs) over OpenMP threads. Each output element is reduced by a
// single thread in row order, so both variants agree bit for bit.
namespace fedboost::kernels {

namespace serial {

double dot(std::span<const double> a, std::span<const double> b);

// out[j] = sum_i x(i, j) * v[i]
void cross_products(const Matrix& x, std::span<const double> v, std::span<double> out);
// out[j] = sum_i x(i, j)
void column_sums(const Matrix& x, std::span<double> out);
// out[j] = sum_i (x(i, j) - center[j])^2
void centered_ssq(const Matrix& x, std::span<const double> center, std::span<double> out);
// out[q] = sum_i x(i, pairs[q].j) * x(i, pairs[q].k)
void pair_products(const Matrix& x, std::span<const IndexPair> pairs, std::span<double> out);
// x(i, j) = (x(i, j) - center[j]) / scale[j]
void center_scale(Matrix& x, std::span<const double> center, std::span<const double> scale);

}  // namespace serial

namespace parallel {

void cross_products(const Matrix& x, std::span<const double> v, std::span<double> out);
void column_sums(const Matrix& x, std::span<double> out);
void centered_ssq(const Matrix& x, std::span<const double> center, std::span<double> out);
void pair_products(const Matrix& x, std::span<const IndexPair> pairs, std::span<double> out);
void center_scale(Matrix& x, std::span<const double> center, std::span<const double> scale);

}  // namespace parallel

}  // namespace fedboost::kernels
