#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slotnav/numkit/ops.hpp"
#include "slotnav/world/geometry.hpp"

namespace slotnav::ste {

using world::Vec3;

inline constexpr double kDefaultEps = 1e-8;

struct MotionDescriptor {
  Vec3 direction;
  double scale = 0.0;
  std::size_t step = 0;
};

/// ΔP_i = P_i − P_{i−1}; one shorter than the input, empty for fewer than two
/// points.
std::vector<Vec3> relative_displacement(std::span<const Vec3> points);

/// r = ‖ΔP‖, d = ΔP / max(r, ε): exactly unit for r ≥ ε, zero for a zero step.
MotionDescriptor direction_scale(Vec3 delta, double eps = kDefaultEps);

/// [dx, dy, dz, r].
std::array<double, 4> motion_descriptor(const MotionDescriptor& m);

/// τ[2m] = sin(i / 10000^{2m/d_t}), τ[2m+1] = cos(same). Throws a config error
/// for odd or zero d_t.
std::vector<double> temporal_embedding(std::size_t i, std::size_t d_t);

struct TrajectoryParams {
  numkit::Mlp2Params mlp;
  std::size_t time_dim = 8;
  double eps = kDefaultEps;
  double scale_unit = 1.0;  // r is divided by this before entering the MLP
  bool outer_relu = false;
};

/// MLP from [M ‖ τ] (4 + d_t) through `hidden` to d.
TrajectoryParams add_trajectory_params(numkit::ParamSet& set, const std::string& prefix,
                                       std::size_t time_dim, std::size_t hidden, std::size_t dim,
                                       numkit::Rng& rng);

/// (len−1)×(4+d_t) matrix of [M_i ‖ τ_i] rows for i = 2..len, where row i
/// uses the displacement P_i − P_{i−1} and time index i. Empty (0 rows) for
/// fewer than two points.
numkit::Matrix trajectory_features(std::span<const Vec3> points, std::size_t time_dim,
                                   double eps = kDefaultEps, double scale_unit = 1.0);

/// Trajectory tokens t_i = mlp2([M_i ‖ τ_i]); returns an invalid Var when
/// there is no displacement yet.
numkit::Var encode_trajectory(numkit::Tape& tape, std::span<const Vec3> points,
                              const TrajectoryParams& p);

}  // namespace slotnav::ste
