#include "slotnav/world/scene.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "slotnav/numkit/rng.hpp"

namespace slotnav::world {

namespace {

constexpr std::uint64_t kSceneStream = 0x5ce7e;
constexpr int kPlacementAttempts = 200;
constexpr double kEdgeMargin = 20.0;
constexpr double kLandmarkMaxHeight = 15.0;

}  // namespace

std::vector<std::size_t> Scene::uniquely_described() const {
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  for (const auto& l : landmarks) ++counts[{l.color, l.kind}];
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    if (counts[{landmarks[i].color, landmarks[i].kind}] == 1) out.push_back(i);
  }
  return out;
}

Scene generate_scene(std::uint64_t seed, const WorldConfig& config) {
  config.validate();
  numkit::Rng rng(numkit::derive_seed(seed, {kSceneStream}));
  Scene scene;
  scene.seed = seed;
  scene.bounds = config.bounds;

  const Bounds& b = config.bounds;
  const double margin_x = std::min(kEdgeMargin, 0.25 * (b.max.x - b.min.x));
  const double margin_y = std::min(kEdgeMargin, 0.25 * (b.max.y - b.min.y));
  const double z_hi = std::min(b.min.z + kLandmarkMaxHeight, b.max.z);

  for (std::size_t i = 0; i < config.n_landmarks; ++i) {
    Vec3 p;
    for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
      p = {rng.uniform(b.min.x + margin_x, b.max.x - margin_x),
           rng.uniform(b.min.y + margin_y, b.max.y - margin_y), rng.uniform(b.min.z, z_hi)};
      const bool clear = std::all_of(scene.landmarks.begin(), scene.landmarks.end(), [&](const Landmark& l) {
        return distance(l.position, p) >= config.min_separation;
      });
      if (clear) break;
    }
    Landmark l;
    l.position = p;
    l.salience = rng.uniform(config.salience_min, 1.0);
    scene.landmarks.push_back(l);
  }

  const std::size_t nc = config.vocab.colors.size();
  const std::size_t nk = config.vocab.kinds.size();
  if (config.n_landmarks <= nc * nk) {
    // Partial Fisher-Yates over all (color, kind) pairs.
    std::vector<std::size_t> pairs(nc * nk);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = i;
    for (std::size_t i = 0; i < config.n_landmarks; ++i) {
      const std::size_t j = i + rng.below(pairs.size() - i);
      std::swap(pairs[i], pairs[j]);
      scene.landmarks[i].color = pairs[i] / nk;
      scene.landmarks[i].kind = pairs[i] % nk;
    }
  } else {
    for (auto& l : scene.landmarks) {
      l.color = rng.below(nc);
      l.kind = rng.below(nk);
    }
  }
  return scene;
}

}  // namespace slotnav::world
