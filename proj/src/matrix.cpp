#include "dcws/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace dcws {

namespace {

constexpr std::size_t kParallelFlopThreshold = 16u * 1024 * 1024;

// Splits [0, rows) into contiguous chunks and runs fn(begin, end) on each,
// spawning threads only when the product is big enough to pay for it.
template <typename Fn>
void parallel_rows(std::size_t rows, std::size_t flops, Fn&& fn) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw <= 1 || flops < kParallelFlopThreshold || rows < 2) {
    fn(std::size_t{0}, rows);
    return;
  }
  unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(rows));
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::size_t chunk = (rows + workers - 1) / workers;
  for (unsigned t = 0; t < workers; ++t) {
    std::size_t begin = t * chunk;
    std::size_t end = std::min(rows, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  const std::size_t n = a.rows(), m = a.cols(), k = b.cols();
  Matrix c(n, k);
  parallel_rows(n, n * m * k, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t i = r0; i < r1; ++i) {
      double* ci = c.row(i);
      const double* ai = a.row(i);
      for (std::size_t l = 0; l < m; ++l) {
        const double av = ai[l];
        const double* bl = b.row(l);
        for (std::size_t j = 0; j < k; ++j) ci[j] += av * bl[j];
      }
    }
  });
  return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: shape mismatch");
  const std::size_t n = a.rows(), m = a.cols(), k = b.cols();
  Matrix c(m, k);
  parallel_rows(m, n * m * k, [&](std::size_t r0, std::size_t r1) {
    for (std::size_t l = 0; l < n; ++l) {
      const double* al = a.row(l);
      const double* bl = b.row(l);
      for (std::size_t i = r0; i < r1; ++i) {
        const double av = al[i];
        double* ci = c.row(i);
        for (std::size_t j = 0; j < k; ++j) ci[j] += av * bl[j];
      }
    }
  });
  return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: shape mismatch");
  // b is a weight-sized matrix; transposing it once keeps the hot loop on the
  // streaming kernel instead of strided dot products.
  Matrix bt(b.cols(), b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) bt(j, i) = b(i, j);
  return matmul(a, bt);
}

std::vector<double> col_sums(const Matrix& a) {
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += ai[j];
  }
  return sums;
}

void add_row_vector(Matrix& a, const std::vector<double>& v) {
  if (v.size() != a.cols()) throw std::invalid_argument("add_row_vector: size mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) ai[j] += v[j];
  }
}

double squared_frobenius_distance(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("squared_frobenius_distance: shape mismatch");
  double sum = 0.0;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = da[i] - db[i];
    sum += d * d;
  }
  return sum;
}

bool all_finite(const Matrix& a) {
  for (double v : a.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace dcws
