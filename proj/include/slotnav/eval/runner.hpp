#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slotnav/eval/metrics.hpp"
#include "slotnav/prompt/model.hpp"
#include "slotnav/world/episode.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::eval {

inline constexpr std::size_t kDefaultMaxSteps = 50;

struct Action {
  Vec3 waypoint;
  bool stop = false;
};

/// A closed-loop controller. One instance drives one episode at a time.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin(const world::Episode& episode, const world::Scene& scene) = 0;
  virtual Action act(const world::Observation& obs, const world::Pose& pose) = 0;
};

/// Moves to the predicted waypoint and stops after the move when the stop
/// probability exceeds 0.5.
class ModelPolicy final : public Policy {
 public:
  explicit ModelPolicy(const pgm::Model& model) : model_(model) {}
  void begin(const world::Episode& episode, const world::Scene& scene) override;
  Action act(const world::Observation& obs, const world::Pose& pose) override;

 private:
  const pgm::Model& model_;
  std::optional<pgm::Rollout> rollout_;
};

/// Uniform direction, uniform length up to step_max; never stops.
class RandomPolicy final : public Policy {
 public:
  RandomPolicy(double step_max, std::uint64_t seed) : step_max_(step_max), seed_(seed) {}
  void begin(const world::Episode& episode, const world::Scene& scene) override;
  Action act(const world::Observation& obs, const world::Pose& pose) override;

 private:
  double step_max_;
  std::uint64_t seed_;
  std::optional<numkit::Rng> rng_;
};

/// Flies straight ahead at step_max along the start heading; never stops.
class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(double step_max) : step_max_(step_max) {}
  void begin(const world::Episode& episode, const world::Scene& scene) override;
  Action act(const world::Observation& obs, const world::Pose& pose) override;

 private:
  double step_max_;
  double yaw_ = 0.0;
};

/// Replays the ground-truth waypoints and stops on the last one.
class GroundTruthPolicy final : public Policy {
 public:
  void begin(const world::Episode& episode, const world::Scene& scene) override;
  Action act(const world::Observation& obs, const world::Pose& pose) override;

 private:
  std::vector<Vec3> waypoints_;
  std::size_t next_ = 0;
};

TrajectoryLog run_episode(Policy& policy, const world::Episode& episode, std::size_t episode_id,
                          const world::WorldConfig& config, std::size_t max_steps = kDefaultMaxSteps);

using PolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t worker)>;

/// Runs every episode; with jobs > 1 episodes are spread over threads, each
/// with its own policy from `make`. Output order follows `episodes`.
std::vector<TrajectoryLog> run_episodes(const PolicyFactory& make, const std::vector<world::Episode>& episodes,
                                        const world::WorldConfig& config, std::size_t max_steps = kDefaultMaxSteps,
                                        std::size_t jobs = 1);

enum class PolicyKind { Model, Random, Fixed, GroundTruth };
PolicyKind policy_kind_from_string(const std::string& s);

/// `model` is required for PolicyKind::Model. Random policies derive a
/// per-episode stream from `seed` and the episode id.
PolicyFactory make_policy_factory(PolicyKind kind, const pgm::Model* model, const world::WorldConfig& config,
                                  std::uint64_t seed = 0);

}  // namespace slotnav::eval
