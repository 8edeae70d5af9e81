#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace poisonprobe {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const { return rows_; }
  [[nodiscard]] std::size_t cols() const { return cols_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return data_; }
  [[nodiscard]] std::span<const double> values() const { return data_; }

  void fill(double v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = a * b. Rows of `a` are scanned sparsely: zero entries are skipped,
/// which makes products with binary feature matrices cheap.
Matrix matmul(const Matrix& a, const Matrix& b);

/// out = a^T * b.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// out = a * b^T.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// out += x * m   (x is a row vector of length m.rows()).
void add_row_times(std::span<const double> x, const Matrix& m, std::span<double> out);

/// out += x * m^T (x has length m.cols(), out has length m.rows()).
void add_row_times_transposed(std::span<const double> x, const Matrix& m, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);

}  // namespace poisonprobe
