#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "slotnav/prompt/model.hpp"

namespace slotnav::trainer {

struct TrainConfig {
  std::size_t batch_size = 8;
  double lr = 5e-4;
  std::size_t lr_decay_steps = 0;  // cosine decay to 0 over this many steps; 0 = constant
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double stop_weight = 0.1;  // λ on the stop BCE
  std::size_t ss_freq = 3000;
  double ss_ratio = 0.75;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;       // optimizer-step cap; 0 = run all epochs
  std::size_t val_every = 0;       // steps between validations; 0 = once per epoch
  std::size_t val_episodes = 0;    // 0 = whole validation split
  std::size_t max_episode_steps = 50;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  pgm::ModelConfig model;

  void validate() const;
};

/// {"train": {...}, "model": {...}}. Missing keys keep defaults, unknown keys
/// raise a config error.
nlohmann::ordered_json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);
TrainConfig load_train_config(const std::string& path);

/// Applies "a.b.c=value" to a JSON object. The value is parsed as JSON when
/// it parses, else taken as a string.
void apply_override(nlohmann::json& root, std::string_view assignment);
void apply_overrides(nlohmann::json& root, const std::vector<std::string>& assignments);

/// Hash of everything that changes the optimisation trajectory (model,
/// optimiser, sampling, seed, world). Run-length and validation settings are
/// excluded so a run can be resumed with a larger step budget.
std::string config_hash(const TrainConfig& c, const world::WorldConfig& w);

}  // namespace slotnav::trainer
