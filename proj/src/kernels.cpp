#include "fedboost/kernels.hpp"

#include <cassert>
#include <cstdint>

namespace fedboost::kernels {

namespace {

inline double column_sum(std::span<const double> c) {
  double s = 0.0;
  for (double v : c) s += v;
  return s;
}

inline double column_centered_ssq(std::span<const double> c, double center) {
  double s = 0.0;
  for (double v : c) {
    const double d = v - center;
    s += d * d;
  }
  return s;
}

inline void column_center_scale(std::span<double> c, double center, double scale) {
  for (double& v : c) v = (v - center) / scale;
}

}  // namespace

namespace serial {

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void cross_products(const Matrix& x, std::span<const double> v, std::span<double> out) {
  assert(v.size() == x.rows() && out.size() == x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) out[j] = dot(x.col(j), v);
}

void column_sums(const Matrix& x, std::span<double> out) {
  for (std::size_t j = 0; j < x.cols(); ++j) out[j] = column_sum(x.col(j));
}

void centered_ssq(const Matrix& x, std::span<const double> center, std::span<double> out) {
  for (std::size_t j = 0; j < x.cols(); ++j) out[j] = column_centered_ssq(x.col(j), center[j]);
}

void pair_products(const Matrix& x, std::span<const IndexPair> pairs, std::span<double> out) {
  assert(out.size() == pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q)
    out[q] = dot(x.col(pairs[q].j), x.col(pairs[q].k));
}

void center_scale(Matrix& x, std::span<const double> center, std::span<const double> scale) {
  for (std::size_t j = 0; j < x.cols(); ++j) column_center_scale(x.col(j), center[j], scale[j]);
}

}  // namespace serial

namespace parallel {

void cross_products(const Matrix& x, std::span<const double> v, std::span<double> out) {
  assert(v.size() == x.rows() && out.size() == x.cols());
  const auto cols = static_cast<std::int64_t>(x.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) out[j] = serial::dot(x.col(j), v);
}

void column_sums(const Matrix& x, std::span<double> out) {
  const auto cols = static_cast<std::int64_t>(x.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) out[j] = column_sum(x.col(j));
}

void centered_ssq(const Matrix& x, std::span<const double> center, std::span<double> out) {
  const auto cols = static_cast<std::int64_t>(x.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) out[j] = column_centered_ssq(x.col(j), center[j]);
}

void pair_products(const Matrix& x, std::span<const IndexPair> pairs, std::span<double> out) {
  assert(out.size() == pairs.size());
  const auto count = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t q = 0; q < count; ++q)
    out[q] = serial::dot(x.col(pairs[q].j), x.col(pairs[q].k));
}

void center_scale(Matrix& x, std::span<const double> center, std::span<const double> scale) {
  const auto cols = static_cast<std::int64_t>(x.cols());
#pragma omp parallel for schedule(static)
  for (std::int64_t j = 0; j < cols; ++j) column_center_scale(x.col(j), center[j], scale[j]);
}

}  // namespace parallel

}  // namespace fedboost::kernels
