#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slotnav/eval/metrics.hpp"
#include "slotnav/numkit/params.hpp"
#include "slotnav/numkit/tape.hpp"
#include "slotnav/prompt/model.hpp"
#include "slotnav/trainer/config.hpp"
#include "slotnav/world/episode.hpp"

namespace slotnav::trainer {

/// ratio^⌊step/freq⌋: probability of feeding the ground-truth waypoint
/// rather than the model's own prediction.
double ss_probability(std::size_t step, std::size_t freq, double ratio);

struct AdamState {
  std::vector<numkit::Matrix> m;
  std::vector<numkit::Matrix> v;
  std::uint64_t t = 0;
};

AdamState make_adam_state(const numkit::ParamSet& params);

/// lr at optimizer step `step`: constant, or lr·½(1 + cos(π·min(step, D)/D))
/// with D = lr_decay_steps.
double learning_rate(const TrainConfig& config, std::size_t step);

/// Adam moments with weight decay applied to the weights directly
/// (decoupled), scaled by the learning rate.
void adamw_step(numkit::ParamSet& params, const numkit::GradBuffer& grads, AdamState& state,
                const TrainConfig& config, double lr);

struct EpisodeStats {
  double loss = 0.0;
  double waypoint_mse = 0.0;  // mean squared waypoint error, m²
  double stop_bce = 0.0;      // mean stop BCE
  std::size_t steps = 0;
};

/// Rolls the episode on `tape` for every ground-truth step and returns the
/// scalar loss mean_t ‖(ŷ_t − y_t)/step_max‖² + λ·mean_t BCE(stop_t).
/// After each step the next pose comes from the ground truth with
/// probability `ss_p`, else from the model's prediction; draws are keyed on
/// `stream` and the step index.
numkit::Var episode_loss(numkit::Tape& tape, const pgm::Model& model, const world::Scene& scene,
                         const world::Episode& episode, const TrainConfig& config, double ss_p,
                         std::uint64_t stream, EpisodeStats* stats = nullptr);

struct StepStats {
  std::size_t step = 0;   // index of the optimizer step just taken
  std::size_t epoch = 0;
  double loss = 0.0;
  double waypoint_mse = 0.0;
  double stop_bce = 0.0;
  double ss_p = 1.0;
  double lr = 0.0;
};

/// Model, optimiser state and batch schedule. Batch composition, sampling
/// draws and gradient reduction order are pure functions of (seed, step),
/// so the loss curve does not depend on `jobs` or on where a run resumed.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const world::WorldConfig& world, std::vector<world::Episode> train);

  StepStats step();
  std::size_t global_step() const noexcept { return global_step_; }
  std::size_t steps_per_epoch() const noexcept;
  std::vector<std::size_t> batch_indices(std::size_t step) const;

  pgm::Model& model() noexcept { return *model_; }
  const pgm::Model& model() const noexcept { return *model_; }
  const TrainConfig& config() const noexcept { return config_; }
  const world::WorldConfig& world() const noexcept { return world_; }
  AdamState& adam() noexcept { return adam_; }
  const AdamState& adam() const noexcept { return adam_; }

  std::optional<double> best_val_ne;

  nlohmann::ordered_json checkpoint() const;
  /// Loads parameters, moments and step. Throws a config error when the
  /// checkpoint's config hash differs from this trainer's.
  void restore(const nlohmann::json& checkpoint);

 private:
  TrainConfig config_;
  world::WorldConfig world_;
  std::vector<world::Episode> train_;
  std::vector<world::Scene> scenes_;
  std::unique_ptr<pgm::Model> model_;
  AdamState adam_;
  std::size_t global_step_ = 0;
};

inline constexpr int kCheckpointSchemaVersion = 1;

void save_checkpoint(const nlohmann::ordered_json& checkpoint, const std::string& path);
nlohmann::json read_checkpoint(const std::string& path);

/// A model rebuilt from a checkpoint file, with the configs it was saved under.
struct LoadedModel {
  TrainConfig config;
  world::WorldConfig world;
  std::unique_ptr<pgm::Model> model;
  std::size_t global_step = 0;
};
LoadedModel load_model(const std::string& path);

struct TrainOutputs {
  std::string dir;
  std::string last() const { return dir + "/last.ckpt.json"; }
  std::string best() const { return dir + "/best.ckpt.json"; }
  std::string log() const { return dir + "/train_log.jsonl"; }
};

struct TrainSummary {
  std::size_t steps = 0;
  std::optional<double> best_val_ne;
  eval::SplitMetrics last_val;
};

/// Runs the configured epochs (or max_steps), validating on `val` and
/// keeping the best-by-validation-NE checkpoint. With `resume` set the run
/// continues from that checkpoint and appends to the log.
TrainSummary train(const TrainConfig& config, const world::WorldConfig& world,
                   const std::vector<world::Episode>& train_set, const std::vector<world::Episode>& val,
                   const TrainOutputs& out, const std::string& resume = "",
                   const std::function<void(const std::string&)>& progress = {});

/// Closed-loop validation/evaluation of a model over `episodes`.
std::vector<eval::TrajectoryLog> rollout_model(const pgm::Model& model, const world::WorldConfig& world,
                                               const std::vector<world::Episode>& episodes,
                                               std::size_t max_steps, std::size_t jobs);

}  // namespace slotnav::trainer
