#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "slotnav/world/instruction.hpp"
#include "slotnav/world/scene.hpp"

namespace slotnav::world {

/// One navigation task. `waypoints` is the ground-truth path after the start
/// position; the last one is the hover point above the target landmark.
struct Episode {
  std::uint64_t scene_seed = 0;
  std::string instruction;
  std::size_t target_index = 0;
  Pose start;
  std::vector<Vec3> waypoints;
  Difficulty difficulty = Difficulty::Easy;

  /// start position followed by every waypoint (P₁ … P_T).
  std::vector<Vec3> positions() const;
  double path_length() const;

  friend bool operator==(const Episode&, const Episode&) = default;
};

/// Success radius in meters.
inline constexpr double kSuccessRadius = 20.0;

/// Samples a start, an optional via landmark and a path of one or two bent
/// legs with uneven spacing ≤ step_max, ending on the target's hover point. Coordinates are rounded to millimetres so the
/// serialized dataset does not depend on libm's last bit.
/// Throws a generation error when no landmark can be named unambiguously or
/// no start fits inside the bounds.
Episode generate_episode(const Scene& scene, const WorldConfig& config, std::uint64_t seed,
                         Difficulty difficulty);

/// Goal position used by the metrics: the target landmark's position.
Vec3 goal_of(const Episode& e, const Scene& scene);

}  // namespace slotnav::world
