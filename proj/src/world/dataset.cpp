#include "slotnav/world/dataset.hpp"

#include <filesystem>
#include <fstream>

#include "slotnav/error.hpp"
#include "slotnav/numkit/rng.hpp"

namespace slotnav::world {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json episode_to_json(const Episode& e) {
  ordered_json j;
  j["scene_seed"] = e.scene_seed;
  j["instruction"] = e.instruction;
  j["target_index"] = e.target_index;
  j["start_pose"] = {e.start.x, e.start.y, e.start.z, e.start.yaw};
  ordered_json wps = ordered_json::array();
  for (const auto& w : e.waypoints) wps.push_back({w.x, w.y, w.z});
  j["waypoints"] = std::move(wps);
  j["difficulty"] = std::string(to_string(e.difficulty));
  return j;
}

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::Input, what); }

double number(const json& j, const std::string& field) {
  if (!j.is_number()) bad("field '" + field + "' must be a number");
  return j.get<double>();
}

}  // namespace

Episode episode_from_json(const json& j) {
  if (!j.is_object()) bad("episode must be a JSON object");
  static const char* kFields[] = {"scene_seed", "instruction", "target_index",
                                  "start_pose", "waypoints",   "difficulty"};
  for (const char* f : kFields) {
    if (!j.contains(f)) bad(std::string("missing field '") + f + "'");
  }
  if (j.size() != std::size(kFields)) bad("unexpected extra fields");

  Episode e;
  if (!j["scene_seed"].is_number_unsigned()) bad("field 'scene_seed' must be a non-negative integer");
  e.scene_seed = j["scene_seed"].get<std::uint64_t>();
  if (!j["instruction"].is_string()) bad("field 'instruction' must be a string");
  e.instruction = j["instruction"].get<std::string>();
  if (!j["target_index"].is_number_unsigned()) bad("field 'target_index' must be a non-negative integer");
  e.target_index = j["target_index"].get<std::size_t>();

  const json& sp = j["start_pose"];
  if (!sp.is_array() || sp.size() != 4) bad("field 'start_pose' must be [x,y,z,yaw]");
  e.start = Pose::at({number(sp[0], "start_pose"), number(sp[1], "start_pose"),
                      number(sp[2], "start_pose")},
                     number(sp[3], "start_pose"));

  const json& wps = j["waypoints"];
  if (!wps.is_array() || wps.empty()) bad("field 'waypoints' must be a nonempty array");
  for (const auto& w : wps) {
    if (!w.is_array() || w.size() != 3) bad("each waypoint must be [x,y,z]");
    e.waypoints.push_back({number(w[0], "waypoints"), number(w[1], "waypoints"),
                           number(w[2], "waypoints")});
  }
  if (!j["difficulty"].is_string()) bad("field 'difficulty' must be a string");
  e.difficulty = difficulty_from_string(j["difficulty"].get<std::string>());
  return e;
}

void write_episodes(const std::vector<Episode>& episodes, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write dataset file " + path);
  for (const auto& e : episodes) out << episode_to_json(e).dump() << "\n";
  if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

std::vector<Episode> read_episodes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open dataset file " + path);
  std::vector<Episode> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(episode_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorKind::Input, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Corpus generate_corpus(const WorldConfig& config, const CorpusSpec& spec) {
  config.validate();
  if (spec.episodes_per_scene == 0) fail(ErrorKind::Config, "episodes_per_scene must be >= 1");
  if (spec.hard_fraction < 0.0 || spec.hard_fraction > 1.0) {
    fail(ErrorKind::Config, "hard_fraction must be in [0, 1]");
  }

  auto make_split = [&](std::uint64_t split_id, std::size_t count) {
    std::vector<Episode> out;
    numkit::Rng pick(numkit::derive_seed(config.seed, {0xc0, split_id}));
    std::uint64_t scene_idx = 0;
    std::size_t failures = 0;
    while (out.size() < count) {
      // Seeds stay below 2^31 so any JSON consumer reads them exactly.
      const std::uint64_t scene_seed =
          numkit::derive_seed(config.seed, {split_id, scene_idx++}) & 0x7fffffffULL;
      const Scene scene = generate_scene(scene_seed, config);
      for (std::size_t k = 0; k < spec.episodes_per_scene && out.size() < count; ++k) {
        const Difficulty d = pick.uniform() < spec.hard_fraction ? Difficulty::Hard : Difficulty::Easy;
        try {
          out.push_back(generate_episode(scene, config, k, d));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Generation) throw;
          if (++failures > 100 + 10 * count) {
            fail(ErrorKind::Generation, std::string("corpus generation keeps failing: ") + e.what());
          }
        }
      }
    }
    return out;
  };

  Corpus c;
  c.train = make_split(1, spec.n_train);
  c.val = make_split(2, spec.n_val);
  c.test = make_split(3, spec.n_test);
  return c;
}

void write_corpus(const Corpus& corpus, const WorldConfig& config, const DatasetPaths& paths) {
  std::error_code ec;
  std::filesystem::create_directories(paths.dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + paths.dir + ": " + ec.message());
  save_world_config(config, paths.world());
  write_episodes(corpus.train, paths.split("train"));
  write_episodes(corpus.val, paths.split("val"));
  write_episodes(corpus.test, paths.split("test"));
}

}  // namespace slotnav::world
