#include <cstdlib>
#include <string>

#include "slotnav/error.hpp"
#include "slotnav/numkit/kernels.hpp"

namespace slotnav::numkit::kernels {

namespace {

using DotFn = double (*)(const double*, const double*, std::size_t);
using AxpyFn = void (*)(double, const double*, double*, std::size_t);
using DotRowsFn = void (*)(const double*, const double*, std::size_t, std::size_t, double*);
using AxpyRowsFn = void (*)(const double*, const double*, std::size_t, std::size_t, double*);

struct Table {
  Backend backend;
  DotFn dot;
  AxpyFn axpy;
  DotRowsFn dot_rows;
  AxpyRowsFn axpy_rows;
};

Table table_for(Backend b) {
  switch (b) {
#if defined(SLOTNAV_HAVE_AVX2)
    case Backend::Avx2: return {b, &avx2::dot, &avx2::axpy, &avx2::dot_rows, &avx2::axpy_rows};
#endif
#if defined(SLOTNAV_HAVE_NEON)
    case Backend::Neon: return {b, &neon::dot, &neon::axpy, &neon::dot_rows, &neon::axpy_rows};
#endif
    default: return {Backend::Scalar, &scalar::dot, &scalar::axpy, &scalar::dot_rows, &scalar::axpy_rows};
  }
}

bool cpu_supports(Backend b) {
  switch (b) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(SLOTNAV_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(SLOTNAV_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Table initial_table() {
  if (const char* env = std::getenv("SLOTNAV_SIMD"); env && std::string(env) == "scalar") {
    return table_for(Backend::Scalar);
  }
  if (cpu_supports(Backend::Avx2)) return table_for(Backend::Avx2);
  if (cpu_supports(Backend::Neon)) return table_for(Backend::Neon);
  return table_for(Backend::Scalar);
}

Table& active() {
  static Table t = initial_table();
  return t;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool backend_available(Backend b) { return cpu_supports(b); }

Backend active_backend() { return active().backend; }

void force_backend(Backend b) {
  if (!cpu_supports(b)) {
    fail(ErrorKind::Config, "kernel backend " + std::string(backend_name(b)) + " unavailable");
  }
  active() = table_for(b);
}

double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out) {
  active().dot_rows(x, rows, n_rows, k, out);
}

void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y) {
  active().axpy_rows(alpha, rows, n_rows, k, y);
}

}  // namespace slotnav::numkit::kernels
