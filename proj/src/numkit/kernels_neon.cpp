#if defined(__aarch64__)

#include <arm_neon.h>

#include "slotnav/numkit/kernels.hpp"

namespace slotnav::numkit::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out) {
  for (std::size_t j = 0; j < n_rows; ++j) out[j] += dot(x, rows + j * k, k);
}

void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y) {
  std::size_t i = 0;
  for (; i + 2 <= k; i += 2) {
    float64x2_t acc = vld1q_f64(y + i);
    for (std::size_t j = 0; j < n_rows; ++j) acc = vfmaq_f64(acc, vdupq_n_f64(alpha[j]), vld1q_f64(rows + j * k + i));
    vst1q_f64(y + i, acc);
  }
  for (; i < k; ++i) {
    double acc = y[i];
    for (std::size_t j = 0; j < n_rows; ++j) acc += alpha[j] * rows[j * k + i];
    y[i] = acc;
  }
}

}  // namespace slotnav::numkit::kernels::neon

#endif
