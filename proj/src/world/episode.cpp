#include "slotnav/world/episode.hpp"

#include <cmath>
#include <numbers>

#include "slotnav/error.hpp"
#include "slotnav/numkit/rng.hpp"

namespace slotnav::world {

namespace {

constexpr std::uint64_t kEpisodeStream = 0xe915;
constexpr int kAttempts = 500;
constexpr double kMinLegLength = 30.0;

double round_mm(double v) { return std::round(v * 1000.0) / 1000.0; }
Vec3 round_mm(Vec3 v) { return {round_mm(v.x), round_mm(v.y), round_mm(v.z)}; }

Vec3 hover_point(const Landmark& l, const WorldConfig& c) {
  return c.bounds.clamp(l.position + Vec3{0.0, 0.0, c.episode.hover_height});
}

// Start point at path distance `length` from `anchor`, approached along
// bearing `bearing` from an altitude in the configured band.
bool place_start(numkit::Rng& rng, const WorldConfig& c, Vec3 anchor, double length, Vec3& out) {
  const double alt = rng.uniform(c.episode.start_alt_min, c.episode.start_alt_max);
  const double dz = anchor.z - alt;
  if (length * length <= dz * dz) return false;
  const double horizontal = std::sqrt(length * length - dz * dz);
  const double bearing = rng.uniform(0.0, 2.0 * std::numbers::pi);
  out = round_mm(Vec3{anchor.x - horizontal * std::cos(bearing),
                      anchor.y - horizontal * std::sin(bearing), alt});
  return c.bounds.contains(out);
}

// Demonstrator-style leg: a quadratic Bézier bent sideways by up to
// bend·chord, walked with steps of U[min_frac, 1]·step_max arc length.
// Ends exactly at `to`; consecutive points are at most step_max apart.
std::vector<Vec3> curved_leg(numkit::Rng& rng, Vec3 from, Vec3 to, double step_max, double bend,
                             double min_frac) {
  const double chord = distance(from, to);
  const Vec3 d = to - from;
  const double h = std::hypot(d.x, d.y);
  const Vec3 side = h > 1e-9 ? Vec3{-d.y / h, d.x / h, 0.0} : Vec3{1.0, 0.0, 0.0};
  const Vec3 control = 0.5 * (from + to) + (rng.uniform(-bend, bend) * chord) * side;

  constexpr int kSegments = 256;
  std::vector<Vec3> curve(kSegments + 1);
  std::vector<double> arc(kSegments + 1, 0.0);
  for (int i = 0; i <= kSegments; ++i) {
    const double t = static_cast<double>(i) / kSegments;
    curve[i] = ((1 - t) * (1 - t)) * from + (2 * (1 - t) * t) * control + (t * t) * to;
    if (i > 0) arc[i] = arc[i - 1] + distance(curve[i - 1], curve[i]);
  }
  const double total = arc[kSegments];
  std::vector<Vec3> out;
  double s = 0.0;
  int seg = 0;
  while (total - s > step_max) {
    s += rng.uniform(min_frac, 1.0) * step_max;
    while (arc[seg + 1] < s) ++seg;
    const double f = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
    out.push_back(round_mm(curve[seg] + f * (curve[seg + 1] - curve[seg])));
  }
  out.push_back(round_mm(to));
  return out;
}

}  // namespace

std::vector<Vec3> Episode::positions() const {
  std::vector<Vec3> out;
  out.reserve(waypoints.size() + 1);
  out.push_back(start.position());
  out.insert(out.end(), waypoints.begin(), waypoints.end());
  return out;
}

double Episode::path_length() const {
  double total = 0.0;
  Vec3 prev = start.position();
  for (const auto& w : waypoints) {
    total += distance(prev, w);
    prev = w;
  }
  return total;
}

Vec3 goal_of(const Episode& e, const Scene& scene) {
  if (e.target_index >= scene.landmarks.size()) {
    fail(ErrorKind::Input, "target_index " + std::to_string(e.target_index) +
                               " out of range for scene " + std::to_string(scene.seed));
  }
  return scene.landmarks[e.target_index].position;
}

Episode generate_episode(const Scene& scene, const WorldConfig& config, std::uint64_t seed,
                         Difficulty difficulty) {
  const std::vector<std::size_t> named = scene.uniquely_described();
  const std::size_t needed = difficulty == Difficulty::Hard ? 2 : 1;
  if (named.size() < needed) {
    fail(ErrorKind::Generation, "scene " + std::to_string(scene.seed) + " has " +
                                    std::to_string(named.size()) +
                                    " uniquely described landmarks; need " + std::to_string(needed));
  }
  numkit::Rng rng(numkit::derive_seed(scene.seed, {kEpisodeStream, seed,
                                                   static_cast<std::uint64_t>(difficulty)}));
  const EpisodeConfig& ec = config.episode;

  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::size_t target = named[rng.below(named.size())];
    const Vec3 goal_hover = hover_point(scene.landmarks[target], config);
    InstructionSpec spec;
    spec.target = {scene.landmarks[target].color, scene.landmarks[target].kind};

    Vec3 start;
    std::vector<Vec3> path;
    if (difficulty == Difficulty::Easy) {
      const double length = rng.uniform(ec.easy_min_length, ec.easy_max_length);
      if (!place_start(rng, config, goal_hover, length, start)) continue;
      path = curved_leg(rng, start, goal_hover, config.step_max, ec.path_bend, ec.min_step_fraction);
      spec.heading = heading_bin(std::atan2(goal_hover.y - start.y, goal_hover.x - start.x));
    } else {
      std::size_t via = named[rng.below(named.size())];
      if (via == target) continue;
      const Vec3 via_hover = hover_point(scene.landmarks[via], config);
      const double second_leg = distance(via_hover, goal_hover);
      const double lo = std::max(kMinLegLength, ec.hard_min_length - second_leg);
      const double hi = ec.hard_max_length - second_leg;
      if (hi <= lo) continue;
      if (!place_start(rng, config, via_hover, rng.uniform(lo, hi), start)) continue;
      // A start already near the goal makes the via clause meaningless.
      if (distance(start, scene.landmarks[target].position) <= 2.0 * kSuccessRadius) continue;
      path = curved_leg(rng, start, via_hover, config.step_max, ec.path_bend, ec.min_step_fraction);
      const auto second =
          curved_leg(rng, path.back(), goal_hover, config.step_max, ec.path_bend, ec.min_step_fraction);
      path.insert(path.end(), second.begin(), second.end());
      spec.via = Descriptor{scene.landmarks[via].color, scene.landmarks[via].kind};
      spec.heading = heading_bin(std::atan2(via_hover.y - start.y, via_hover.x - start.x));
    }

    Episode e;
    e.scene_seed = scene.seed;
    e.target_index = target;
    e.difficulty = difficulty;
    e.start = Pose::at(start, round_mm(rng.uniform(-std::numbers::pi, std::numbers::pi)));
    e.waypoints = std::move(path);
    e.instruction = render_instruction(spec, config.vocab);

    const double len = e.path_length();
    const double lo = difficulty == Difficulty::Easy ? ec.easy_min_length : ec.hard_min_length;
    const double hi = difficulty == Difficulty::Easy ? ec.easy_max_length : ec.hard_max_length;
    if (len < lo - 1e-6 || len > hi + 1e-6) continue;
    bool inside = true;
    for (const auto& w : e.waypoints) inside = inside && config.bounds.contains(w);
    if (!inside) continue;
    if (distance(e.waypoints.back(), scene.landmarks[target].position) > kSuccessRadius) continue;
    return e;
  }
  fail(ErrorKind::Generation, "could not place a " + std::string(to_string(difficulty)) +
                                  " episode in scene " + std::to_string(scene.seed) +
                                  " within the bounds");
}

}  // namespace slotnav::world
