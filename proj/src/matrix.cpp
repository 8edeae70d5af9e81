#include "poisonprobe/matrix.hpp"

#include <algorithm>
#include <cassert>

namespace poisonprobe {

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.rows());
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    add_row_times(a.row(i), b, out.row(i));
  }
  return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  assert(a.rows() == b.rows());
  Matrix out(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto arow = a.row(r);
    const auto brow = b.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = arow[i];
      if (s == 0.0) continue;
      axpy(s, brow, out.row(i));
    }
  }
  return out;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  assert(a.cols() == b.cols());
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    add_row_times_transposed(a.row(i), b, out.row(i));
  }
  return out;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  const std::size_t n = x.size();
  const double* xs = x.data();
  double* ys = y.data();
  for (std::size_t k = 0; k < n; ++k) ys[k] += alpha * xs[k];
}

void add_row_times(std::span<const double> x, const Matrix& m, std::span<double> out) {
  assert(x.size() == m.rows() && out.size() == m.cols());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double s = x[k];
    if (s == 0.0) continue;
    axpy(s, m.row(k), out);
  }
}

void add_row_times_transposed(std::span<const double> x, const Matrix& m,
                              std::span<double> out) {
  assert(x.size() == m.cols() && out.size() == m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] += dot(x, m.row(r));
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

}  // namespace poisonprobe
