// Compiled with -mavx2 -mfma; only reached after a cpuid check.
#include <immintrin.h>

#include <cmath>
#include <string>

#include "utp/error.hpp"
#include "utp/kernels.hpp"

namespace utp::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k + 4), _mm256_loadu_pd(y + k + 4), acc1);
  }
  if (k + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k), acc0);
    k += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += x[k] * y[k];
  return s;
}

// out[j] = dot(x, y_j) for four rows y_0..y_3 sharing the loads of x.
void dot4(const double* x, const double* y0, const double* y1, const double* y2,
          const double* y3, std::size_t n, double out[4]) {
  __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d xv = _mm256_loadu_pd(x + k);
    a0 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y0 + k), a0);
    a1 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y1 + k), a1);
    a2 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y2 + k), a2);
    a3 = _mm256_fmadd_pd(xv, _mm256_loadu_pd(y3 + k), a3);
  }
  out[0] = hsum(a0);
  out[1] = hsum(a1);
  out[2] = hsum(a2);
  out[3] = hsum(a3);
  for (; k < n; ++k) {
    out[0] += x[k] * y0[k];
    out[1] += x[k] * y1[k];
    out[2] += x[k] * y2[k];
    out[3] += x[k] * y3[k];
  }
}

// c(i, j) -= dot(a_i, b_j) for j in [0, ncols).
void update_row(const double* ai, BlockView b, double* ci, std::size_t ncols, std::size_t k) {
  std::size_t j = 0;
  double d[4];
  for (; j + 4 <= ncols; j += 4) {
    dot4(ai, b.row(j), b.row(j + 1), b.row(j + 2), b.row(j + 3), k, d);
    ci[j] -= d[0];
    ci[j + 1] -= d[1];
    ci[j + 2] -= d[2];
    ci[j + 3] -= d[3];
  }
  for (; j < ncols; ++j) ci[j] -= dot(ai, b.row(j), k);
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
  for (std::size_t i = 0; i < c.rows; ++i) update_row(a.row(i), a, c.row(i), i + 1, a.cols);
}

void gemm(BlockView a, BlockView b, BlockView c) {
  for (std::size_t i = 0; i < c.rows; ++i) update_row(a.row(i), b, c.row(i), c.cols, a.cols);
}

}  // namespace utp::kernels::avx2
