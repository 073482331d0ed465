#include "slotnav/world/config.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>

#include "slotnav/error.hpp"

namespace slotnav::world {

using nlohmann::json;
using nlohmann::ordered_json;

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

Vec3 Bounds::clamp(Vec3 p) const {
  return {std::clamp(p.x, min.x, max.x), std::clamp(p.y, min.y, max.y),
          std::clamp(p.z, min.z, max.z)};
}

namespace {

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::Config, "world config: " + what);
}

Vec3 vec_from(const json& j, const char* key) {
  check(j.is_array() && j.size() == 3, std::string(key) + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    check(ok, std::string("unknown key '") + it.key() + "' in " + where);
  }
}

}  // namespace

void WorldConfig::validate() const {
  check(bounds.max.x > bounds.min.x && bounds.max.y > bounds.min.y && bounds.max.z > bounds.min.z,
        "bounds must have positive extent");
  check(n_landmarks >= 2, "n_landmarks must be >= 2");
  check(!vocab.colors.empty() && !vocab.kinds.empty(), "vocabulary must be nonempty");
  std::set<std::string> words(vocab.colors.begin(), vocab.colors.end());
  words.insert(vocab.kinds.begin(), vocab.kinds.end());
  check(words.size() == vocab.colors.size() + vocab.kinds.size(), "vocabulary words must be distinct");
  for (const auto& w : words) {
    check(!w.empty() && w.find_first_of(" ,.") == std::string::npos,
          "vocabulary word '" + w + "' must be a single token");
  }
  check(step_max > 0.0, "step_max must be positive");
  check(min_separation >= 0.0, "min_separation must be >= 0");
  check(salience_min > 0.0 && salience_min <= 1.0, "salience_min must be in (0, 1]");
  check(sensor.view_range > 0.0, "sensor.view_range must be positive");
  check(sensor.bottom_half_angle > 0.0 && sensor.bottom_half_angle < std::numbers::pi / 2,
        "sensor.bottom_half_angle must be in (0, pi/2)");
  check(sensor.max_tokens_per_view >= 1, "sensor.max_tokens_per_view must be >= 1");
  check(sensor.detection_cell > 0.0, "sensor.detection_cell must be positive");
  check(episode.hover_height >= 0.0, "episode.hover_height must be >= 0");
  check(episode.start_alt_min <= episode.start_alt_max, "episode start altitude range inverted");
  check(episode.easy_min_length > 0.0 && episode.easy_min_length <= episode.easy_max_length,
        "easy length range invalid");
  check(episode.hard_min_length > 0.0 && episode.hard_min_length <= episode.hard_max_length,
        "hard length range invalid");
  check(episode.path_bend >= 0.0 && episode.path_bend <= 1.0, "episode.path_bend must lie in [0, 1]");
  check(episode.min_step_fraction > 0.0 && episode.min_step_fraction <= 1.0,
        "episode.min_step_fraction must lie in (0, 1]");
}

ordered_json to_json(const WorldConfig& c) {
  ordered_json j;
  j["bounds"] = {{"min", {c.bounds.min.x, c.bounds.min.y, c.bounds.min.z}},
                 {"max", {c.bounds.max.x, c.bounds.max.y, c.bounds.max.z}}};
  j["n_landmarks"] = c.n_landmarks;
  j["vocab"] = {{"colors", c.vocab.colors}, {"kinds", c.vocab.kinds}};
  j["step_max"] = c.step_max;
  j["seed"] = c.seed;
  j["min_separation"] = c.min_separation;
  j["salience_min"] = c.salience_min;
  j["sensor"] = {{"view_range", c.sensor.view_range},
                 {"bottom_half_angle", c.sensor.bottom_half_angle},
                 {"max_tokens_per_view", c.sensor.max_tokens_per_view},
                 {"detection_cell", c.sensor.detection_cell}};
  j["episode"] = {{"hover_height", c.episode.hover_height},
                  {"start_alt_min", c.episode.start_alt_min},
                  {"start_alt_max", c.episode.start_alt_max},
                  {"easy_min_length", c.episode.easy_min_length},
                  {"easy_max_length", c.episode.easy_max_length},
                  {"hard_min_length", c.episode.hard_min_length},
                  {"hard_max_length", c.episode.hard_max_length},
                  {"path_bend", c.episode.path_bend},
                  {"min_step_fraction", c.episode.min_step_fraction}};
  return j;
}

WorldConfig world_config_from_json(const json& j) {
  check(j.is_object(), "expected a JSON object");
  reject_unknown(j,
                 {"bounds", "n_landmarks", "vocab", "step_max", "seed", "min_separation",
                  "salience_min", "sensor", "episode"},
                 "world config");
  WorldConfig c;
  try {
    if (j.contains("bounds")) {
      const json& b = j.at("bounds");
      c.bounds.min = vec_from(b.at("min"), "bounds.min");
      c.bounds.max = vec_from(b.at("max"), "bounds.max");
    }
    read_if(j, "n_landmarks", c.n_landmarks);
    if (j.contains("vocab")) {
      read_if(j.at("vocab"), "colors", c.vocab.colors);
      read_if(j.at("vocab"), "kinds", c.vocab.kinds);
    }
    read_if(j, "step_max", c.step_max);
    read_if(j, "seed", c.seed);
    read_if(j, "min_separation", c.min_separation);
    read_if(j, "salience_min", c.salience_min);
    if (j.contains("sensor")) {
      const json& s = j.at("sensor");
      reject_unknown(s, {"view_range", "bottom_half_angle", "max_tokens_per_view", "detection_cell"},
                     "sensor");
      read_if(s, "view_range", c.sensor.view_range);
      read_if(s, "bottom_half_angle", c.sensor.bottom_half_angle);
      read_if(s, "max_tokens_per_view", c.sensor.max_tokens_per_view);
      read_if(s, "detection_cell", c.sensor.detection_cell);
    }
    if (j.contains("episode")) {
      const json& e = j.at("episode");
      reject_unknown(e,
                     {"hover_height", "start_alt_min", "start_alt_max", "easy_min_length",
                      "easy_max_length", "hard_min_length", "hard_max_length", "path_bend",
                      "min_step_fraction"},
                     "episode");
      read_if(e, "hover_height", c.episode.hover_height);
      read_if(e, "start_alt_min", c.episode.start_alt_min);
      read_if(e, "start_alt_max", c.episode.start_alt_max);
      read_if(e, "easy_min_length", c.episode.easy_min_length);
      read_if(e, "easy_max_length", c.episode.easy_max_length);
      read_if(e, "hard_min_length", c.episode.hard_min_length);
      read_if(e, "hard_max_length", c.episode.hard_max_length);
      read_if(e, "path_bend", c.episode.path_bend);
      read_if(e, "min_step_fraction", c.episode.min_step_fraction);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("world config: ") + e.what());
  }
  c.validate();
  return c;
}

WorldConfig load_world_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open world config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
  return world_config_from_json(j);
}

void save_world_config(const WorldConfig& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << to_json(c).dump(2) << "\n";
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

}  // namespace slotnav::world
