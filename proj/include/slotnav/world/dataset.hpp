#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "slotnav/world/config.hpp"
#include "slotnav/world/episode.hpp"

namespace slotnav::world {

// Dataset file: JSON lines, one episode per line with exactly the fields
// {scene_seed, instruction, target_index, start_pose:[x,y,z,yaw],
//  waypoints:[[x,y,z],...], difficulty}.

nlohmann::ordered_json episode_to_json(const Episode& e);
/// Throws an input error naming the offending field.
Episode episode_from_json(const nlohmann::json& j);

void write_episodes(const std::vector<Episode>& episodes, const std::string& path);
/// Throws io errors for unreadable files and input errors carrying the
/// 1-based line number for malformed lines.
std::vector<Episode> read_episodes(const std::string& path);

struct CorpusSpec {
  std::size_t n_train = 300;
  std::size_t n_val = 50;
  std::size_t n_test = 100;
  double hard_fraction = 0.5;
  std::size_t episodes_per_scene = 4;
};

struct Corpus {
  std::vector<Episode> train;
  std::vector<Episode> val;
  std::vector<Episode> test;
};

/// Each split draws its own scenes; everything is a function of
/// (config.seed, spec).
Corpus generate_corpus(const WorldConfig& config, const CorpusSpec& spec);

/// A generated dataset directory: world.json plus {train,val,test}.jsonl.
struct DatasetPaths {
  std::string dir;
  std::string world() const { return dir + "/world.json"; }
  std::string split(const std::string& name) const { return dir + "/" + name + ".jsonl"; }
};

void write_corpus(const Corpus& corpus, const WorldConfig& config, const DatasetPaths& paths);

}  // namespace slotnav::world
