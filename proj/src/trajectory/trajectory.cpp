#include "slotnav/trajectory/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "slotnav/error.hpp"

namespace slotnav::ste {

std::vector<Vec3> relative_displacement(std::span<const Vec3> points) {
  std::vector<Vec3> out;
  for (std::size_t i = 1; i < points.size(); ++i) out.push_back(points[i] - points[i - 1]);
  return out;
}

MotionDescriptor direction_scale(Vec3 delta, double eps) {
  MotionDescriptor m;
  m.scale = world::norm(delta);
  const double den = std::max(m.scale, eps);
  m.direction = {delta.x / den, delta.y / den, delta.z / den};
  return m;
}

std::array<double, 4> motion_descriptor(const MotionDescriptor& m) {
  return {m.direction.x, m.direction.y, m.direction.z, m.scale};
}

std::vector<double> temporal_embedding(std::size_t i, std::size_t d_t) {
  if (d_t == 0 || d_t % 2 != 0) {
    fail(ErrorKind::Config, "temporal embedding dimension must be even and positive, got " +
                                std::to_string(d_t));
  }
  std::vector<double> tau(d_t);
  for (std::size_t m = 0; m < d_t / 2; ++m) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * m) / static_cast<double>(d_t));
    const double a = static_cast<double>(i) / freq;
    tau[2 * m] = std::sin(a);
    tau[2 * m + 1] = std::cos(a);
  }
  return tau;
}

TrajectoryParams add_trajectory_params(numkit::ParamSet& set, const std::string& prefix,
                                       std::size_t time_dim, std::size_t hidden, std::size_t dim,
                                       numkit::Rng& rng) {
  (void)temporal_embedding(1, time_dim);  // validates time_dim
  TrajectoryParams p;
  p.time_dim = time_dim;
  p.mlp = numkit::add_mlp2_params(set, prefix + ".mlp", 4 + time_dim, hidden, dim, rng);
  return p;
}

numkit::Matrix trajectory_features(std::span<const Vec3> points, std::size_t time_dim, double eps,
                                   double scale_unit) {
  const std::vector<Vec3> deltas = relative_displacement(points);
  numkit::Matrix out(deltas.size(), 4 + time_dim);
  for (std::size_t r = 0; r < deltas.size(); ++r) {
    const auto m = motion_descriptor(direction_scale(deltas[r], eps));
    const auto tau = temporal_embedding(r + 2, time_dim);
    for (std::size_t c = 0; c < 3; ++c) out(r, c) = m[c];
    out(r, 3) = m[3] / scale_unit;
    for (std::size_t c = 0; c < time_dim; ++c) out(r, 4 + c) = tau[c];
  }
  return out;
}

numkit::Var encode_trajectory(numkit::Tape& tape, std::span<const Vec3> points,
                              const TrajectoryParams& p) {
  if (points.size() < 2) return {};
  const numkit::Var x = tape.constant(trajectory_features(points, p.time_dim, p.eps, p.scale_unit));
  return numkit::mlp2(tape, x, numkit::bind(tape, p.mlp), p.outer_relu);
}

}  // namespace slotnav::ste
