#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "slotnav/error.hpp"
#include "slotnav/world/dataset.hpp"
#include "slotnav/world/observation.hpp"

using namespace slotnav;
using namespace slotnav::world;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Config;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("slotnav_test_world_" + name);
  std::filesystem::remove_all(p);
  return p;
}

// A world with one landmark at a known spot, always detected.
Scene single_landmark_scene(Vec3 at) {
  Scene s;
  s.seed = 3;
  s.bounds = WorldConfig{}.bounds;
  s.landmarks.push_back({at, 1, 2, 1.0});
  return s;
}

std::size_t real_tokens(const numkit::Matrix& view, const FeatureLayout& layout) {
  return view(0, layout.null_flag()) == 1.0 ? 0 : view.rows();
}

}  // namespace

TEST_CASE("generate_scene is deterministic and seed-sensitive") {
  WorldConfig c;
  c.n_landmarks = 5;
  const Scene a = generate_scene(7, c);
  const Scene b = generate_scene(7, c);
  CHECK(a.landmarks == b.landmarks);

  const Scene other = generate_scene(8, c);
  bool differs = false;
  for (std::size_t i = 0; i < a.landmarks.size(); ++i) {
    differs = differs || !(a.landmarks[i].position == other.landmarks[i].position);
  }
  CHECK(differs);
}

TEST_CASE("generate_scene respects count, bounds and distinct attributes") {
  WorldConfig c;
  c.n_landmarks = 2;
  CHECK(generate_scene(1, c).landmarks.size() == 2);

  c.n_landmarks = 8;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Scene s = generate_scene(seed, c);
    REQUIRE(s.landmarks.size() == 8);
    CHECK(s.uniquely_described().size() == 8);
    for (const auto& l : s.landmarks) {
      CHECK(c.bounds.contains(l.position));
      CHECK(l.salience >= c.salience_min);
      CHECK(l.salience <= 1.0);
    }
  }
}

TEST_CASE("invalid world config is rejected") {
  WorldConfig c;
  c.n_landmarks = 1;
  CHECK(kind_of([&] { generate_scene(1, c); }) == ErrorKind::Config);
  c = WorldConfig{};
  c.bounds.max.x = c.bounds.min.x;
  CHECK(kind_of([&] { generate_scene(1, c); }) == ErrorKind::Config);
  CHECK(kind_of([] { world_config_from_json(nlohmann::json{{"bogus", 1}}); }) == ErrorKind::Config);
}

TEST_CASE("world config JSON round trip") {
  WorldConfig c;
  c.n_landmarks = 9;
  c.seed = 42;
  c.sensor.view_range = 77.5;
  const WorldConfig back = world_config_from_json(nlohmann::json::parse(to_json(c).dump()));
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("easy instructions name one landmark, hard ones two") {
  WorldConfig c;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Scene s = generate_scene(seed, c);
    const Episode easy = generate_episode(s, c, seed, Difficulty::Easy);
    const InstructionSpec es = parse_instruction(easy.instruction, c.vocab);
    CHECK_FALSE(es.via.has_value());
    CHECK(es.target == Descriptor{s.landmarks[easy.target_index].color, s.landmarks[easy.target_index].kind});

    const Episode hard = generate_episode(s, c, seed, Difficulty::Hard);
    const InstructionSpec hs = parse_instruction(hard.instruction, c.vocab);
    REQUIRE(hs.via.has_value());
    CHECK_FALSE(*hs.via == hs.target);
  }
}

TEST_CASE("episodes satisfy their own success predicate and length range") {
  WorldConfig c;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = generate_scene(seed, c);
    for (Difficulty d : {Difficulty::Easy, Difficulty::Hard}) {
      const Episode e = generate_episode(s, c, seed, d);
      CHECK(distance(e.waypoints.back(), goal_of(e, s)) <= kSuccessRadius);
      const double len = e.path_length();
      CHECK(len >= 50.0 - 1e-6);
      CHECK(len <= 400.0 + 1e-6);
      Vec3 prev = e.start.position();
      for (const auto& w : e.waypoints) {
        CHECK(distance(prev, w) <= c.step_max + 1e-3);
        CHECK(c.bounds.contains(w));
        prev = w;
      }
    }
  }
}

TEST_CASE("demonstrator paths bend and vary their step length") {
  WorldConfig c;
  std::size_t bent = 0, uneven = 0, n = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Scene s = generate_scene(seed, c);
    const Episode e = generate_episode(s, c, seed, Difficulty::Easy);
    const Vec3 hover = c.bounds.clamp(s.landmarks[e.target_index].position + Vec3{0, 0, c.episode.hover_height});
    CHECK(distance(e.waypoints.back(), hover) < 1e-3);
    const auto p = e.positions();
    if (p.size() < 4) continue;
    ++n;
    double lo = 1e9, hi = 0.0, worst_off = 0.0;
    const Vec3 a = p.front(), b = p.back();
    for (std::size_t i = 1; i + 1 < p.size(); ++i) {
      const double step = distance(p[i - 1], p[i]);
      CHECK(step >= c.episode.min_step_fraction * c.step_max * 0.95);
      lo = std::min(lo, step);
      hi = std::max(hi, step);
      // distance from the chord a-b
      const Vec3 ab = b - a, ap = p[i] - a;
      const double t = (ap.x * ab.x + ap.y * ab.y + ap.z * ab.z) / (ab.x * ab.x + ab.y * ab.y + ab.z * ab.z);
      worst_off = std::max(worst_off, distance(p[i], a + t * ab));
    }
    bent += worst_off > 1.0;
    uneven += hi - lo > 1.0;
  }
  REQUIRE(n > 20);
  CHECK(bent * 10 >= n * 7);
  CHECK(uneven * 10 >= n * 7);

  // No bend and full-length steps give the evenly spaced straight line.
  c.episode.path_bend = 0.0;
  c.episode.min_step_fraction = 1.0;
  const Scene s = generate_scene(3, c);
  const Episode e = generate_episode(s, c, 3, Difficulty::Easy);
  const auto p = e.positions();
  for (std::size_t i = 1; i + 1 < p.size(); ++i) CHECK(std::abs(distance(p[i - 1], p[i]) - c.step_max) < 2e-3);
}

TEST_CASE("hard paths are at least as long as easy ones in median") {
  WorldConfig c;
  std::vector<double> easy;
  std::vector<double> hard;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scene s = generate_scene(seed, c);
    easy.push_back(generate_episode(s, c, 0, Difficulty::Easy).path_length());
    hard.push_back(generate_episode(s, c, 0, Difficulty::Hard).path_length());
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  CHECK(median(hard) >= median(easy));
}

TEST_CASE("generation fails when no landmark can be named uniquely") {
  WorldConfig c;
  c.vocab.colors = {"red"};
  c.vocab.kinds = {"tower"};
  c.n_landmarks = 3;
  const Scene s = generate_scene(1, c);
  CHECK(kind_of([&] { generate_episode(s, c, 0, Difficulty::Easy); }) == ErrorKind::Generation);
}

TEST_CASE("instruction render/parse round trip and rejection") {
  const Vocabulary v;
  InstructionSpec spec;
  spec.target = {2, 3};
  spec.heading = 5;
  CHECK(render_instruction(spec, v) == "Fly south-west to the blue house.");
  CHECK(parse_instruction(render_instruction(spec, v), v) == spec);
  spec.via = Descriptor{0, 0};
  CHECK(render_instruction(spec, v) == "Fly south-west to the red tower, then continue to the blue house.");
  CHECK(parse_instruction(render_instruction(spec, v), v) == spec);

  CHECK(kind_of([&] { parse_instruction("Fly north to the purple tower.", v); }) == ErrorKind::Encoding);
  CHECK(kind_of([&] { parse_instruction("Go to the red tower.", v); }) == ErrorKind::Encoding);
  CHECK(kind_of([&] { parse_instruction("Fly north to the red tower", v); }) == ErrorKind::Encoding);
}

TEST_CASE("heading bins") {
  CHECK(heading_bin(0.0) == 0);
  CHECK(heading_bin(std::numbers::pi / 2) == 2);
  CHECK(heading_bin(-std::numbers::pi / 2) == 6);
  CHECK(heading_bin(std::numbers::pi) == 4);
  CHECK(heading_bin(-std::numbers::pi) == 4);
  CHECK(heading_bin(0.1) == 0);
}

TEST_CASE("landmark straight ahead shows in the front view only") {
  const WorldConfig c;
  const FeatureLayout layout(c.vocab);
  const Scene s = single_landmark_scene({250.0, 200.0, 40.0});
  const Observation obs = observe(s, c, Pose::at({200.0, 200.0, 40.0}, 0.0));
  CHECK(real_tokens(obs[View::Front], layout) == 1);
  CHECK(real_tokens(obs[View::Rear], layout) == 0);
  CHECK(real_tokens(obs[View::Left], layout) == 0);
  CHECK(real_tokens(obs[View::Right], layout) == 0);
  CHECK(real_tokens(obs[View::Bottom], layout) == 0);
  CHECK(obs[View::Rear].rows() == 1);

  // Directly below goes to the bottom camera.
  const Scene below = single_landmark_scene({200.0, 200.0, 5.0});
  CHECK(real_tokens(observe(below, c, Pose::at({200.0, 200.0, 40.0}, 0.0))[View::Bottom], layout) == 1);
  // Out of range: nothing.
  const Scene far = single_landmark_scene({200.0 + c.sensor.view_range + 1.0, 200.0, 40.0});
  const Observation none = observe(far, c, Pose::at({200.0, 200.0, 40.0}, 0.0));
  for (View v : kViews) CHECK(real_tokens(none[v], layout) == 0);
}

TEST_CASE("turning around swaps front/rear and left/right") {
  WorldConfig c;
  c.sensor.view_range = 1000.0;
  c.sensor.max_tokens_per_view = 100;
  c.n_landmarks = 12;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Scene s = generate_scene(seed, c);
    const double yaw = 0.37 * static_cast<double>(seed) - 2.0;
    const Vec3 p{250.0, 250.0, 60.0};
    const Observation a = observe(s, c, Pose::at(p, yaw));
    const Observation b = observe(s, c, Pose::at(p, wrap_angle(yaw + std::numbers::pi)));
    CHECK(a[View::Front] == b[View::Rear]);
    CHECK(a[View::Rear] == b[View::Front]);
    CHECK(a[View::Left] == b[View::Right]);
    CHECK(a[View::Right] == b[View::Left]);
    CHECK(a[View::Bottom] == b[View::Bottom]);
  }
}

TEST_CASE("distance column equals the independently computed distance") {
  WorldConfig c;
  c.sensor.view_range = 1000.0;
  c.sensor.max_tokens_per_view = 100;
  c.salience_min = 1.0;
  const FeatureLayout layout(c.vocab);
  const Scene s = generate_scene(11, c);
  const Pose pose = Pose::at({123.4, 321.0, 55.5}, 0.9);
  const Observation obs = observe(s, c, pose);
  std::size_t matched = 0;
  for (View v : kViews) {
    const auto& m = obs[v];
    for (std::size_t r = 0; r < real_tokens(m, layout); ++r) {
      for (const auto& l : s.landmarks) {
        if (m(r, l.color) != 1.0 || m(r, layout.n_colors + l.kind) != 1.0) continue;
        const double dx = l.position.x - pose.x;
        const double dy = l.position.y - pose.y;
        const double dz = l.position.z - pose.z;
        CHECK(std::abs(m(r, layout.distance()) - std::sqrt(dx * dx + dy * dy + dz * dz)) <= 1e-9);
        CHECK(m(r, layout.offset()) == doctest::Approx(dx).epsilon(1e-12));
        ++matched;
      }
    }
  }
  CHECK(matched == s.landmarks.size());
}

TEST_CASE("observe is pure and caps tokens per view") {
  WorldConfig c;
  c.n_landmarks = 20;
  c.min_separation = 5.0;
  c.sensor.view_range = 1000.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene s = generate_scene(seed, c);
    const Pose pose = Pose::at({100.0 + seed, 300.0, 50.0}, 0.1 * seed);
    const Observation a = observe(s, c, pose);
    CHECK(a == observe(s, c, pose));
    for (View v : kViews) {
      CHECK(a[v].rows() >= 1);
      CHECK(a[v].rows() <= c.sensor.max_tokens_per_view);
    }
  }
}

TEST_CASE("step: identity, clamp, heading, non-finite") {
  const Bounds b = WorldConfig{}.bounds;
  const Pose p = Pose::at({10.0, 10.0, 10.0}, 0.4);
  CHECK(step(p, p.position(), b) == p);

  const Pose clamped = step(p, {600.0, -5.0, 50.0}, b);
  CHECK(clamped.x == 500.0);
  CHECK(clamped.y == 0.0);
  CHECK(clamped.z == 50.0);

  CHECK(step(p, {11.0, 10.0, 10.0}, b).yaw == 0.0);
  CHECK(step(p, {10.0, 11.0, 10.0}, b).yaw == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));
  // Pure climb keeps the heading.
  CHECK(step(p, {10.0, 10.0, 30.0}, b).yaw == 0.4);

  CHECK(kind_of([&] { step(p, {NAN, 0.0, 0.0}, b); }) == ErrorKind::Actuation);
  CHECK(kind_of([&] { step(p, {INFINITY, 0.0, 0.0}, b); }) == ErrorKind::Actuation);
}

TEST_CASE("dataset JSONL round trip and byte-identical regeneration") {
  WorldConfig c;
  c.seed = 5;
  CorpusSpec spec{12, 4, 6, 0.5, 3};
  const Corpus a = generate_corpus(c, spec);
  CHECK(a.train.size() == 12);
  CHECK(a.val.size() == 4);
  CHECK(a.test.size() == 6);
  for (const auto& e : a.train) CHECK(e.scene_seed < (1ULL << 31));

  const auto d1 = scratch("a");
  const auto d2 = scratch("b");
  write_corpus(a, c, {d1.string()});
  write_corpus(generate_corpus(c, spec), c, {d2.string()});
  for (const char* f : {"world.json", "train.jsonl", "val.jsonl", "test.jsonl"}) {
    CHECK(slurp((d1 / f).string()) == slurp((d2 / f).string()));
  }
  CHECK(read_episodes((d1 / "train.jsonl").string()) == a.train);
  CHECK(to_json(load_world_config((d1 / "world.json").string())) == to_json(c));

  const auto line = nlohmann::json::parse(episode_to_json(a.train[0]).dump());
  CHECK(line.size() == 6);
  CHECK(line["start_pose"].size() == 4);
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("dataset errors carry line numbers") {
  const auto dir = scratch("bad");
  std::filesystem::create_directories(dir);
  const auto path = (dir / "bad.jsonl").string();
  WorldConfig c;
  const Scene s = generate_scene(1, c);
  {
    std::ofstream out(path);
    out << episode_to_json(generate_episode(s, c, 0, Difficulty::Easy)).dump() << "\n";
    out << "{\"scene_seed\": 1}\n";
  }
  try {
    read_episodes(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  CHECK(kind_of([&] { read_episodes((dir / "missing.jsonl").string()); }) == ErrorKind::Io);
  std::filesystem::remove_all(dir);
}
