#pragma once

// Inner-loop kernels behind every matrix product on the tape.
//
// Each kernel has a scalar reference implementation and, where the build
// target allows, an AVX2+FMA (x86-64) or NEON (aarch64) variant. The variant
// is picked once at startup from CPU features; SLOTNAV_SIMD=scalar in the
// environment or force_backend() pins the scalar path. Variants agree with
// the reference to rounding (summation order differs), see test_kernels.

#include <cstddef>
#include <string_view>

namespace slotnav::numkit::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend b);

/// Whether `b` was compiled in and the running CPU supports it.
bool backend_available(Backend b);
Backend active_backend();
/// Pins the dispatch table to `b`. Throws a config error if unavailable.
void force_backend(Backend b);

// Dispatched entry points.
double dot(const double* a, const double* b, std::size_t n);
/// y += alpha * x
void axpy(double alpha, const double* x, double* y, std::size_t n);
/// out[j] += dot(x, rows + j·k) for j < n_rows.
void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out);
/// y += Σ_j alpha[j] · (rows + j·k) for j < n_rows.
void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out);
void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y);
}  // namespace scalar

#if defined(SLOTNAV_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out);
void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y);
}  // namespace avx2
#endif

#if defined(SLOTNAV_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void dot_rows(const double* x, const double* rows, std::size_t n_rows, std::size_t k, double* out);
void axpy_rows(const double* alpha, const double* rows, std::size_t n_rows, std::size_t k, double* y);
}  // namespace neon
#endif

}  // namespace slotnav::numkit::kernels
