// Compiled with -mavx2 -mfma; only reached when the CPU reports both.
#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "slotnav/numkit/kernels.hpp"

namespace slotnav::numkit::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out) {
  for (std::size_t j = 0; j < n_rows; ++j) out[j] += dot(x, rows + j * k, k);
}

// Keeps a 4-wide slice of y in a register across all rows.
void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y) {
  std::size_t i = 0;
  for (; i + 4 <= k; i += 4) {
    __m256d acc = _mm256_loadu_pd(y + i);
    for (std::size_t j = 0; j < n_rows; ++j) {
      acc = _mm256_fmadd_pd(_mm256_set1_pd(alpha[j]), _mm256_loadu_pd(rows + j * k + i), acc);
    }
    _mm256_storeu_pd(y + i, acc);
  }
  for (; i < k; ++i) {
    double acc = y[i];
    for (std::size_t j = 0; j < n_rows; ++j) acc += alpha[j] * rows[j * k + i];
    y[i] = acc;
  }
}

}  // namespace slotnav::numkit::kernels::avx2

#endif
