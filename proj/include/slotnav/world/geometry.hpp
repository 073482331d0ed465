#pragma once

#include <cmath>

namespace slotnav::world {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }
inline double horizontal_norm(Vec3 a) { return std::hypot(a.x, a.y); }
inline bool is_finite(Vec3 a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Wraps an angle into (−π, π].
double wrap_angle(double a);

/// Axis-aligned box in meters.
struct Bounds {
  Vec3 min;
  Vec3 max;

  bool contains(Vec3 p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z &&
           p.z <= max.z;
  }
  Vec3 clamp(Vec3 p) const;
};

/// 6-DoF UAV state. Worlds here are yaw-only: pitch and roll stay 0.
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double pitch = 0.0;
  double roll = 0.0;
  double yaw = 0.0;

  Vec3 position() const { return {x, y, z}; }
  static Pose at(Vec3 p, double yaw) { return {p.x, p.y, p.z, 0.0, 0.0, yaw}; }
  friend bool operator==(const Pose&, const Pose&) = default;
};

}  // namespace slotnav::world
