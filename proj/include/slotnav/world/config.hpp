#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "slotnav/world/geometry.hpp"

namespace slotnav::world {

struct Vocabulary {
  std::vector<std::string> colors = {"red", "green", "blue", "yellow", "white", "black"};
  std::vector<std::string> kinds = {"tower", "tree", "car", "house", "statue", "tank"};
};

/// Landmark sensing model shared by observe() and the feature encoder.
struct SensorConfig {
  double view_range = 120.0;             // meters; farther landmarks are not seen
  double bottom_half_angle = 0.7853981633974483;  // downward cone half-angle (rad)
  std::size_t max_tokens_per_view = 4;   // N_max, nearest first
  double detection_cell = 1.0;           // meters; detection dropout is keyed on this grid
};

/// Episode geometry knobs. Lengths are total path lengths in meters.
struct EpisodeConfig {
  double hover_height = 10.0;  // final waypoint sits this far above the landmark
  double start_alt_min = 30.0;
  double start_alt_max = 60.0;
  double easy_min_length = 50.0;
  double easy_max_length = 250.0;
  double hard_min_length = 150.0;
  double hard_max_length = 400.0;
  double path_bend = 0.25;          // max sideways Bézier control offset, fraction of the leg chord
  double min_step_fraction = 0.5;   // demonstrator steps are U[min_step_fraction, 1]·step_max long
};

/// The scene config file: {bounds, n_landmarks, vocab, step_max, seed} plus
/// optional "sensor" and "episode" objects.
struct WorldConfig {
  Bounds bounds{{0.0, 0.0, 0.0}, {500.0, 500.0, 100.0}};
  std::size_t n_landmarks = 6;
  Vocabulary vocab;
  double step_max = 20.0;
  std::uint64_t seed = 1;
  double min_separation = 40.0;
  double salience_min = 0.6;
  SensorConfig sensor;
  EpisodeConfig episode;

  /// Throws a config error when any field is out of range.
  void validate() const;
};

nlohmann::ordered_json to_json(const WorldConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
WorldConfig world_config_from_json(const nlohmann::json& j);
WorldConfig load_world_config(const std::string& path);
void save_world_config(const WorldConfig& c, const std::string& path);

}  // namespace slotnav::world
