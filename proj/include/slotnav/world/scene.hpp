#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "slotnav/world/config.hpp"
#include "slotnav/world/geometry.hpp"

namespace slotnav::world {

struct Landmark {
  Vec3 position;
  std::size_t color = 0;  // index into Vocabulary::colors
  std::size_t kind = 0;   // index into Vocabulary::kinds
  double salience = 1.0;  // per-frame detection probability

  friend bool operator==(const Landmark&, const Landmark&) = default;
};

struct Scene {
  std::uint64_t seed = 0;
  Bounds bounds;
  std::vector<Landmark> landmarks;

  /// Indices of landmarks whose (color, kind) pair occurs exactly once.
  std::vector<std::size_t> uniquely_described() const;
};

/// Deterministic in (seed, config). Landmarks keep `min_separation` where
/// the bounds allow it; attribute pairs are distinct whenever the vocabulary
/// has enough of them.
Scene generate_scene(std::uint64_t seed, const WorldConfig& config);

}  // namespace slotnav::world
