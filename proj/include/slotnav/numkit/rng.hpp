#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace slotnav::numkit {

/// Seeded generator with platform-stable draws.
///
/// std::mt19937_64's output sequence is fixed by the standard but the
/// std::*_distribution adaptors are not, so draws are derived from raw engine
/// bits here. Everything that ends up in a dataset file or a report goes
/// through this type.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Mixes a base seed with stream coordinates (epoch, step, episode, ...) so
/// that every random stream is a pure function of its coordinates.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> coords);

/// Uniform [0,1) value that is a pure function of `key`.
double hash_uniform(std::uint64_t key);

}  // namespace slotnav::numkit
