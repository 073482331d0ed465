#include "slotnav/trainer/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "slotnav/error.hpp"

namespace slotnav::trainer {

using nlohmann::json;
using nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (batch_size == 0) fail(ErrorKind::Config, "train.batch_size must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::Config, "train.lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail(ErrorKind::Config, "train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) fail(ErrorKind::Config, "train.adam_eps must be positive");
  if (weight_decay < 0.0) fail(ErrorKind::Config, "train.weight_decay must be >= 0");
  if (stop_weight < 0.0) fail(ErrorKind::Config, "train.stop_weight must be >= 0");
  if (ss_freq == 0) fail(ErrorKind::Config, "train.ss_freq must be positive");
  if (!(ss_ratio > 0.0 && ss_ratio <= 1.0)) fail(ErrorKind::Config, "train.ss_ratio must lie in (0, 1]");
  if (max_episode_steps == 0) fail(ErrorKind::Config, "train.max_episode_steps must be positive");
  model.validate();
}

ordered_json to_json(const TrainConfig& c) {
  ordered_json t;
  t["batch_size"] = c.batch_size;
  t["lr"] = c.lr;
  t["lr_decay_steps"] = c.lr_decay_steps;
  t["beta1"] = c.beta1;
  t["beta2"] = c.beta2;
  t["adam_eps"] = c.adam_eps;
  t["weight_decay"] = c.weight_decay;
  t["stop_weight"] = c.stop_weight;
  t["ss_freq"] = c.ss_freq;
  t["ss_ratio"] = c.ss_ratio;
  t["epochs"] = c.epochs;
  t["max_steps"] = c.max_steps;
  t["val_every"] = c.val_every;
  t["val_episodes"] = c.val_episodes;
  t["max_episode_steps"] = c.max_episode_steps;
  t["seed"] = c.seed;
  t["jobs"] = c.jobs;
  ordered_json j;
  j["train"] = std::move(t);
  j["model"] = pgm::to_json(c.model);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "train config must be a JSON object");
  TrainConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "train" && it.key() != "model") {
      fail(ErrorKind::Config, "unknown top-level config key '" + it.key() + "' (train|model)");
    }
  }
  if (j.contains("model")) c.model = pgm::model_config_from_json(j.at("model"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    if (!t.is_object()) fail(ErrorKind::Config, "'train' must be a JSON object");
    try {
      for (auto it = t.begin(); it != t.end(); ++it) {
        const std::string& k = it.key();
        const json& v = it.value();
        if (k == "batch_size") c.batch_size = v.get<std::size_t>();
        else if (k == "lr") c.lr = v.get<double>();
        else if (k == "lr_decay_steps") c.lr_decay_steps = v.get<std::size_t>();
        else if (k == "beta1") c.beta1 = v.get<double>();
        else if (k == "beta2") c.beta2 = v.get<double>();
        else if (k == "adam_eps") c.adam_eps = v.get<double>();
        else if (k == "weight_decay") c.weight_decay = v.get<double>();
        else if (k == "stop_weight") c.stop_weight = v.get<double>();
        else if (k == "ss_freq") c.ss_freq = v.get<std::size_t>();
        else if (k == "ss_ratio") c.ss_ratio = v.get<double>();
        else if (k == "epochs") c.epochs = v.get<std::size_t>();
        else if (k == "max_steps") c.max_steps = v.get<std::size_t>();
        else if (k == "val_every") c.val_every = v.get<std::size_t>();
        else if (k == "val_episodes") c.val_episodes = v.get<std::size_t>();
        else if (k == "max_episode_steps") c.max_episode_steps = v.get<std::size_t>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "jobs") c.jobs = v.get<std::size_t>();
        else fail(ErrorKind::Config, "unknown train config key '" + k + "'");
      }
    } catch (const json::exception& e) {
      fail(ErrorKind::Config, std::string("train config: ") + e.what());
    }
  }
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open train config " + path);
  try {
    return train_config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Config, path + ": " + e.what());
  }
}

void apply_override(json& root, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(ErrorKind::Config, "override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorKind::Config, "override key '" + key + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) fail(ErrorKind::Config, "override key '" + key + "' descends into a non-object");
      *node = json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

void apply_overrides(json& root, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) apply_override(root, a);
}

std::string config_hash(const TrainConfig& c, const world::WorldConfig& w) {
  ordered_json j = to_json(c);
  for (const char* k : {"epochs", "max_steps", "val_every", "val_episodes", "jobs"}) j["train"].erase(k);
  j["world"] = world::to_json(w);
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace slotnav::trainer
