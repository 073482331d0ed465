#pragma once

#include <array>
#include <cstddef>
#include <string_view>

#include "slotnav/numkit/matrix.hpp"
#include "slotnav/world/config.hpp"
#include "slotnav/world/scene.hpp"

namespace slotnav::world {

enum class View : std::size_t { Front = 0, Rear = 1, Left = 2, Right = 3, Bottom = 4 };
inline constexpr std::size_t kViewCount = 5;
inline constexpr std::array<View, kViewCount> kViews = {View::Front, View::Rear, View::Left,
                                                       View::Right, View::Bottom};
std::string_view to_string(View v);

/// Column layout of a raw observation token:
///   [one-hot color | one-hot kind | null flag | dx dy dz | distance]
/// Offsets are landmark minus camera position on world-aligned axes, meters.
struct FeatureLayout {
  std::size_t n_colors = 0;
  std::size_t n_kinds = 0;

  explicit FeatureLayout(const Vocabulary& v) : n_colors(v.colors.size()), n_kinds(v.kinds.size()) {}
  std::size_t null_flag() const { return n_colors + n_kinds; }
  std::size_t offset() const { return null_flag() + 1; }
  std::size_t distance() const { return offset() + 3; }
  std::size_t dim() const { return distance() + 1; }
};

/// Per-view raw token sets. Every view holds at least one row; a view that
/// sees nothing holds the single null token.
struct Observation {
  std::array<numkit::Matrix, kViewCount> views;

  const numkit::Matrix& operator[](View v) const { return views[static_cast<std::size_t>(v)]; }
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Which view a landmark at `offset` (landmark − camera) falls into for a
/// camera with heading `yaw`.
View classify_view(Vec3 offset, double yaw, const SensorConfig& sensor);

/// Pure function of (scene, pose). Landmarks beyond view_range are not seen;
/// each remaining landmark is detected with probability equal to its
/// salience, keyed on the scene seed, the landmark and the pose's grid cell,
/// so the outcome does not depend on yaw.
Observation observe(const Scene& scene, const WorldConfig& config, const Pose& pose);

/// Moves to `waypoint` clamped to the bounds; yaw follows the horizontal
/// heading of the move and is kept when the horizontal displacement is below
/// 1e-9 m. Throws an actuation error for non-finite waypoints.
Pose step(const Pose& pose, Vec3 waypoint, const Bounds& bounds);

}  // namespace slotnav::world
