#pragma once

#include <cstddef>
#include <vector>

namespace dcws {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b, shapes (n,m) x (m,k). Threaded over output rows for large
// products; every output element is accumulated in a fixed order, so results
// are bit-identical regardless of thread count.
Matrix matmul(const Matrix& a, const Matrix& b);

// c = a^T * b, shapes (n,m) x (n,k) -> (m,k).
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

// c = a * b^T, shapes (n,m) x (k,m) -> (n,k).
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

std::vector<double> col_sums(const Matrix& a);

// a(i, :) += v for every row i.
void add_row_vector(Matrix& a, const std::vector<double>& v);

double squared_frobenius_distance(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& a);

}  // namespace dcws
