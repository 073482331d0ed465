#include "slotnav/eval/runner.hpp"

#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <thread>

#include "slotnav/error.hpp"

namespace slotnav::eval {

void ModelPolicy::begin(const world::Episode& episode, const world::Scene&) {
  rollout_.emplace(model_, episode.instruction);
}

Action ModelPolicy::act(const world::Observation& obs, const world::Pose& pose) {
  const pgm::StepResult r = rollout_->step(obs, pose.position());
  return {r.waypoint, r.stop_logit > 0.0};
}

void RandomPolicy::begin(const world::Episode& episode, const world::Scene&) {
  const Vec3 s = episode.start.position();
  rng_.emplace(numkit::derive_seed(seed_, {episode.scene_seed, std::bit_cast<std::uint64_t>(s.x),
                                           std::bit_cast<std::uint64_t>(s.y), std::bit_cast<std::uint64_t>(s.z)}));
}

Action RandomPolicy::act(const world::Observation&, const world::Pose& pose) {
  // Gaussian direction, radius ∝ cbrt(u) for a uniform point in the ball.
  Vec3 dir{rng_->normal(), rng_->normal(), rng_->normal()};
  const double n = world::norm(dir);
  const double len = step_max_ * std::cbrt(rng_->uniform());
  if (n > 0.0) dir = (len / n) * dir;
  return {pose.position() + dir, false};
}

void FixedPolicy::begin(const world::Episode& episode, const world::Scene&) { yaw_ = episode.start.yaw; }

Action FixedPolicy::act(const world::Observation&, const world::Pose& pose) {
  return {pose.position() + Vec3{step_max_ * std::cos(yaw_), step_max_ * std::sin(yaw_), 0.0}, false};
}

void GroundTruthPolicy::begin(const world::Episode& episode, const world::Scene&) {
  waypoints_ = episode.waypoints;
  next_ = 0;
}

Action GroundTruthPolicy::act(const world::Observation&, const world::Pose& pose) {
  if (waypoints_.empty()) return {pose.position(), true};
  const Vec3 w = waypoints_[std::min(next_, waypoints_.size() - 1)];
  ++next_;
  return {w, next_ >= waypoints_.size()};
}

TrajectoryLog run_episode(Policy& policy, const world::Episode& episode, std::size_t episode_id,
                          const world::WorldConfig& config, std::size_t max_steps) {
  if (max_steps == 0) fail(ErrorKind::Config, "max_steps must be positive");
  const world::Scene scene = world::generate_scene(episode.scene_seed, config);
  TrajectoryLog log;
  log.episode_id = episode_id;
  log.difficulty = episode.difficulty;
  log.start = episode.start.position();
  log.goal = world::goal_of(episode, scene);

  policy.begin(episode, scene);
  world::Pose pose = episode.start;
  for (std::size_t t = 0; t < max_steps; ++t) {
    const Action a = policy.act(world::observe(scene, config, pose), pose);
    pose = world::step(pose, a.waypoint, config.bounds);
    log.waypoints.push_back(pose.position());
    if (a.stop) {
      log.stop_reason = StopReason::StopSignal;
      return log;
    }
  }
  log.stop_reason = StopReason::MaxSteps;
  return log;
}

std::vector<TrajectoryLog> run_episodes(const PolicyFactory& make, const std::vector<world::Episode>& episodes,
                                        const world::WorldConfig& config, std::size_t max_steps, std::size_t jobs) {
  std::vector<TrajectoryLog> logs(episodes.size());
  jobs = std::max<std::size_t>(1, std::min(jobs, episodes.size()));
  if (jobs == 1) {
    auto policy = make(0);
    for (std::size_t i = 0; i < episodes.size(); ++i) logs[i] = run_episode(*policy, episodes[i], i, config, max_steps);
    return logs;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        auto policy = make(w);
        for (std::size_t i = w; i < episodes.size(); i += jobs) {
          logs[i] = run_episode(*policy, episodes[i], i, config, max_steps);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return logs;
}

PolicyKind policy_kind_from_string(const std::string& s) {
  static const std::map<std::string, PolicyKind> kinds = {
      {"model", PolicyKind::Model}, {"random", PolicyKind::Random},
      {"fixed", PolicyKind::Fixed}, {"gt", PolicyKind::GroundTruth}};
  const auto it = kinds.find(s);
  if (it == kinds.end()) fail(ErrorKind::Config, "unknown policy '" + s + "' (model|random|fixed|gt)");
  return it->second;
}

PolicyFactory make_policy_factory(PolicyKind kind, const pgm::Model* model, const world::WorldConfig& config,
                                  std::uint64_t seed) {
  const double step_max = config.step_max;
  switch (kind) {
    case PolicyKind::Model:
      if (!model) fail(ErrorKind::Config, "model policy needs a checkpoint");
      return [model](std::size_t) { return std::make_unique<ModelPolicy>(*model); };
    case PolicyKind::Random:
      return [step_max, seed](std::size_t) { return std::make_unique<RandomPolicy>(step_max, seed); };
    case PolicyKind::Fixed:
      return [step_max](std::size_t) { return std::make_unique<FixedPolicy>(step_max); };
    case PolicyKind::GroundTruth:
      return [](std::size_t) { return std::make_unique<GroundTruthPolicy>(); };
  }
  fail(ErrorKind::Config, "unknown policy");
}

}  // namespace slotnav::eval
