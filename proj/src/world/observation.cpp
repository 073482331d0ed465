#include "slotnav/world/observation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "slotnav/error.hpp"
#include "slotnav/numkit/rng.hpp"

namespace slotnav::world {

std::string_view to_string(View v) {
  switch (v) {
    case View::Front: return "front";
    case View::Rear: return "rear";
    case View::Left: return "left";
    case View::Right: return "right";
    case View::Bottom: return "bottom";
  }
  return "?";
}

View classify_view(Vec3 offset, double yaw, const SensorConfig& sensor) {
  const double horizontal = horizontal_norm(offset);
  if (offset.z < 0.0 && horizontal <= -offset.z * std::tan(sensor.bottom_half_angle)) {
    return View::Bottom;
  }
  const double quarter = std::numbers::pi / 4.0;
  const double b = wrap_angle(std::atan2(offset.y, offset.x) - yaw);
  if (b >= -quarter && b < quarter) return View::Front;
  if (b >= quarter && b < 3.0 * quarter) return View::Left;
  if (b >= -3.0 * quarter && b < -quarter) return View::Right;
  return View::Rear;
}

namespace {

constexpr std::uint64_t kDetectStream = 0xde7ec7;

bool detected(const Scene& scene, std::size_t landmark, const Pose& pose, double cell) {
  const Landmark& l = scene.landmarks[landmark];
  if (l.salience >= 1.0) return true;
  auto q = [cell](double v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(v / cell))); };
  const std::uint64_t key =
      numkit::derive_seed(scene.seed, {kDetectStream, landmark, q(pose.x), q(pose.y), q(pose.z)});
  return numkit::hash_uniform(key) < l.salience;
}

struct Sighting {
  double distance;
  std::size_t landmark;
  Vec3 offset;
};

}  // namespace

Observation observe(const Scene& scene, const WorldConfig& config, const Pose& pose) {
  const FeatureLayout layout(config.vocab);
  const Vec3 camera = scene.bounds.clamp(pose.position());
  const Pose clamped = Pose::at(camera, pose.yaw);

  std::array<std::vector<Sighting>, kViewCount> seen;
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    const Vec3 offset = scene.landmarks[i].position - camera;
    const double dist = norm(offset);
    if (dist > config.sensor.view_range) continue;
    if (!detected(scene, i, clamped, config.sensor.detection_cell)) continue;
    const View v = classify_view(offset, pose.yaw, config.sensor);
    seen[static_cast<std::size_t>(v)].push_back({dist, i, offset});
  }

  Observation obs;
  for (std::size_t v = 0; v < kViewCount; ++v) {
    auto& list = seen[v];
    std::sort(list.begin(), list.end(), [](const Sighting& a, const Sighting& b) {
      return a.distance != b.distance ? a.distance < b.distance : a.landmark < b.landmark;
    });
    if (list.size() > config.sensor.max_tokens_per_view) list.resize(config.sensor.max_tokens_per_view);
    if (list.empty()) {
      numkit::Matrix null_token(1, layout.dim());
      null_token(0, layout.null_flag()) = 1.0;
      obs.views[v] = std::move(null_token);
      continue;
    }
    numkit::Matrix tokens(list.size(), layout.dim());
    for (std::size_t r = 0; r < list.size(); ++r) {
      const Landmark& l = scene.landmarks[list[r].landmark];
      tokens(r, l.color) = 1.0;
      tokens(r, layout.n_colors + l.kind) = 1.0;
      tokens(r, layout.offset() + 0) = list[r].offset.x;
      tokens(r, layout.offset() + 1) = list[r].offset.y;
      tokens(r, layout.offset() + 2) = list[r].offset.z;
      tokens(r, layout.distance()) = list[r].distance;
    }
    obs.views[v] = std::move(tokens);
  }
  return obs;
}

Pose step(const Pose& pose, Vec3 waypoint, const Bounds& bounds) {
  if (!is_finite(waypoint)) fail(ErrorKind::Actuation, "non-finite waypoint");
  const Vec3 next = bounds.clamp(waypoint);
  const Vec3 move = next - pose.position();
  double yaw = pose.yaw;
  if (horizontal_norm(move) >= 1e-9) yaw = std::atan2(move.y, move.x);
  return Pose::at(next, yaw);
}

}  // namespace slotnav::world
