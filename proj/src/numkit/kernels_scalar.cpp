#include "slotnav/numkit/kernels.hpp"

namespace slotnav::numkit::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out) {
  for (std::size_t j = 0; j < n_rows; ++j) out[j] += dot(x, rows + j * k, k);
}

void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y) {
  for (std::size_t j = 0; j < n_rows; ++j) axpy(alpha[j], rows + j * k, y, k);
}

}  // namespace slotnav::numkit::kernels::scalar
