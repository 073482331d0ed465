#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "slotnav/encoders/encoders.hpp"
#include "slotnav/prompt/prompt.hpp"
#include "slotnav/slot_memory/slot_memory.hpp"
#include "slotnav/trajectory/trajectory.hpp"
#include "slotnav/world/config.hpp"
#include "slotnav/world/episode.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::pgm {

struct ModelConfig {
  std::size_t d = 32;
  std::size_t d_l = 32;
  std::size_t d_u = 32;
  std::size_t slots = 32;
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t mlp_hidden = 64;
  std::size_t ste_hidden = 32;
  std::size_t time_dim = 8;
  bool use_shic = true;
  bool use_ste = true;
  bool per_view_slots = false;
  std::size_t history_window = 0;  // frames folded into the slots; 0 = all
  bool absolute_output = false;
  std::uint64_t encoder_seed = 17;
  std::uint64_t init_seed = 1;

  void validate() const;
};

nlohmann::ordered_json to_json(const ModelConfig& c);
/// Missing keys keep defaults; unknown keys raise a config error.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// All trainable tensors plus the frozen encoders.
class Model {
 public:
  Model(const ModelConfig& config, const world::WorldConfig& world);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const noexcept { return config_; }
  const world::WorldConfig& world() const noexcept { return world_; }
  numkit::ParamSet& params() noexcept { return params_; }
  const numkit::ParamSet& params() const noexcept { return params_; }

  const encoders::VisualEncoder& visual() const noexcept { return visual_; }
  const encoders::InstructionEncoder& text() const noexcept { return text_; }
  /// One entry when slot parameters are shared across views, else five.
  const std::vector<shic::SlotParams>& slot_params() const noexcept { return slots_; }
  const ste::TrajectoryParams& trajectory_params() const noexcept { return trajectory_; }
  const ReasonerParams& reasoner() const noexcept { return reasoner_; }

 private:
  ModelConfig config_;
  world::WorldConfig world_;
  numkit::ParamSet params_;
  encoders::VisualEncoder visual_;
  encoders::InstructionEncoder text_;
  std::vector<shic::SlotParams> slots_;
  ste::TrajectoryParams trajectory_;
  ReasonerParams reasoner_;
};

struct StepResult {
  world::Vec3 waypoint;     // absolute next position in meters
  double stop_logit = 0.0;
  Var head;                 // raw waypoint-head output on the recording tape
  Var stop;                 // stop logit on the recording tape
  std::vector<std::pair<std::string, std::size_t>> segment_counts;
};

/// Running context of one episode. With a recording tape every step is kept
/// on it for a single backward pass; without one each step runs on a fresh
/// inference tape and only the slot state is carried over.
class Rollout {
 public:
  Rollout(const Model& model, const std::string& instruction, Tape* recording = nullptr);

  /// Predicts the next waypoint from the frame seen at `position`, then
  /// appends the frame and the position to the history.
  StepResult step(const world::Observation& obs, world::Vec3 position);

  /// Raw-head target for moving from `position` to `next`.
  world::Vec3 head_target(world::Vec3 position, world::Vec3 next) const;

  const std::vector<world::Vec3>& history() const noexcept { return history_; }
  std::size_t steps() const noexcept { return history_.size(); }
  const std::string& instruction() const noexcept { return instruction_; }

 private:
  StepResult run(Tape& tape, const encoders::ViewTokens& tokens, world::Vec3 position);
  std::vector<shic::SlotVars> bind_slots(Tape& tape) const;

  const Model& model_;
  std::string instruction_;
  Matrix e_l_;
  Tape* recording_;
  std::vector<world::Vec3> history_;
  // Slot state: Vars on the recording tape, or plain values for inference.
  shic::ViewMemories memory_{};
  std::array<Matrix, world::kViewCount> memory_values_;
  shic::ViewStreams frames_;
};

/// Teacher-forced replay of `episode` up to the 1-based `step`; returns the
/// prompt as the model saw it at that step. Throws an input error when the
/// episode has fewer steps.
PromptText replay_prompt(const Model& model, const world::Scene& scene, const world::Episode& episode,
                         std::size_t step);

}  // namespace slotnav::pgm
