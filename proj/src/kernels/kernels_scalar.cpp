#include <cmath>
#include <string>

#include "utp/error.hpp"
#include "utp/kernels.hpp"

namespace utp::kernels::scalar {
namespace {

double dot(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

}  // namespace

void potrf(BlockView a) {
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    const double* rj = a.row(j);
    const double s = a(j, j) - dot(rj, rj, j);
    if (!(s > 0.0)) {
      throw NumericalError("non-positive pivot " + std::to_string(s) + " at row " + std::to_string(j), j);
    }
    const double d = std::sqrt(s);
    a(j, j) = d;
    for (std::size_t i = j + 1; i < n; ++i) a(i, j) = (a(i, j) - dot(a.row(i), rj, j)) / d;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = 0.0;
}

void trsm(BlockView l, BlockView b) {
  const std::size_t m = l.rows;
  for (std::size_t r = 0; r < b.rows; ++r) {
    double* x = b.row(r);
    for (std::size_t j = 0; j < m; ++j) x[j] = (x[j] - dot(x, l.row(j), j)) / l(j, j);
  }
}

void syrk(BlockView a, BlockView c) {
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j <= i; ++j) c(i, j) -= dot(a.row(i), a.row(j), a.cols);
}

void gemm(BlockView a, BlockView b, BlockView c) {
  for (std::size_t i = 0; i < c.rows; ++i)
    for (std::size_t j = 0; j < c.cols; ++j) c(i, j) -= dot(a.row(i), b.row(j), a.cols);
}

}  // namespace utp::kernels::scalar
