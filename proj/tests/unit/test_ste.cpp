#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "grad_check.hpp"
#include "slotnav/error.hpp"
#include "slotnav/trajectory/trajectory.hpp"

using namespace slotnav;
using namespace slotnav::ste;
using numkit::Matrix;
using numkit::ParamSet;
using numkit::Rng;
using numkit::Var;

namespace {

std::vector<Vec3> random_path(Rng& rng, std::size_t n) {
  std::vector<Vec3> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(0, 100)});
  return p;
}

}  // namespace

TEST_CASE("relative displacement") {
  CHECK(relative_displacement(std::vector<Vec3>{}).empty());
  CHECK(relative_displacement(std::vector<Vec3>{{1, 2, 3}}).empty());
  const auto d = relative_displacement(std::vector<Vec3>{{0, 0, 0}, {3, 4, 0}});
  REQUIRE(d.size() == 1);
  CHECK(d[0] == Vec3{3, 4, 0});
  for (const auto& z : relative_displacement(std::vector<Vec3>(5, Vec3{7, 7, 7}))) CHECK(z == Vec3{});

  Rng rng(1);
  const auto p = random_path(rng, 20);
  std::vector<Vec3> shifted;
  for (const auto& x : p) shifted.push_back(x + Vec3{123.25, -77.5, 9.0});
  const auto a = relative_displacement(p);
  const auto b = relative_displacement(shifted);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(world::distance(a[i], b[i]) < 1e-9);
}

TEST_CASE("direction and scale") {
  const MotionDescriptor m = direction_scale({3, 4, 0});
  CHECK(std::abs(m.scale - 5.0) <= 1e-9);
  CHECK(m.direction.x == 0.6);
  CHECK(m.direction.y == 0.8);
  CHECK(m.direction.z == 0.0);

  const MotionDescriptor z = direction_scale({0, 0, 0});
  CHECK(z.scale == 0.0);
  CHECK(z.direction == Vec3{});
  CHECK(std::isfinite(z.direction.x));

  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double lambda = std::exp(rng.uniform(-5, 5));
    const MotionDescriptor a = direction_scale(v);
    const MotionDescriptor b = direction_scale(lambda * v);
    CHECK(world::distance(a.direction, b.direction) < 1e-6);
    CHECK(std::abs(b.scale - lambda * a.scale) <= 1e-12 * b.scale);
    if (a.scale > 1e-6) CHECK(std::abs(world::norm(a.direction) - 1.0) <= 1e-6);
  }
}

TEST_CASE("motion descriptor layout") {
  MotionDescriptor m;
  m.direction = {1, 0, 0};
  m.scale = 2;
  CHECK(motion_descriptor(m) == std::array<double, 4>{1, 0, 0, 2});
  CHECK(motion_descriptor(direction_scale({0, 0, 0})) == std::array<double, 4>{0, 0, 0, 0});
  const MotionDescriptor r = direction_scale({-1.5, 2.25, 0.125});
  const auto a = motion_descriptor(r);
  CHECK(Vec3{a[0], a[1], a[2]} == r.direction);
  CHECK(a[3] == r.scale);
}

TEST_CASE("temporal embedding") {
  const auto zero = temporal_embedding(0, 8);
  for (std::size_t c = 0; c < 8; ++c) CHECK(zero[c] == (c % 2 == 0 ? 0.0 : 1.0));

  std::set<std::vector<double>> seen;
  for (std::size_t i = 0; i <= 1000; ++i) {
    const auto t = temporal_embedding(i, 8);
    for (double v : t) CHECK((v >= -1.0 && v <= 1.0));
    seen.insert(t);
  }
  CHECK(seen.size() == 1001);

  // Independent evaluation of one entry.
  CHECK(temporal_embedding(7, 8)[5] == doctest::Approx(std::cos(7.0 / std::pow(10000.0, 4.0 / 8.0))).epsilon(1e-15));

  for (std::size_t bad : {0u, 3u, 7u}) {
    try {
      temporal_embedding(1, bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
}

TEST_CASE("encode_trajectory token count and translation invariance") {
  ParamSet ps;
  Rng rng(3);
  TrajectoryParams p = add_trajectory_params(ps, "ste", 8, 16, 12, rng);
  p.scale_unit = 20.0;
  {
    numkit::Tape t;
    CHECK_FALSE(encode_trajectory(t, std::vector<Vec3>{}, p).valid());
    CHECK_FALSE(encode_trajectory(t, std::vector<Vec3>{{1, 1, 1}}, p).valid());
  }
  for (std::size_t n : {2u, 3u, 17u}) {
    const auto path = random_path(rng, n);
    std::vector<Vec3> shifted;
    for (const auto& x : path) shifted.push_back(x + Vec3{-40.125, 310.5, 3.75});
    numkit::Tape t;
    const Var a = encode_trajectory(t, path, p);
    const Var b = encode_trajectory(t, shifted, p);
    CHECK(t.value(a).rows() == n - 1);
    CHECK(t.value(a).cols() == 12);
    for (std::size_t i = 0; i < t.value(a).size(); ++i) CHECK(std::abs(t.value(a)[i] - t.value(b)[i]) <= 1e-9);
  }
}

TEST_CASE("encode_trajectory composes the four primitive ops") {
  ParamSet ps;
  Rng rng(4);
  TrajectoryParams p = add_trajectory_params(ps, "ste", 4, 3, 2, rng);
  const std::vector<Vec3> path{{0, 0, 0}, {3, 4, 0}, {3, 4, 12}};
  numkit::Tape t;
  const Matrix& got = t.value(encode_trajectory(t, path, p));
  REQUIRE(got.rows() == 2);

  const auto deltas = relative_displacement(path);
  for (std::size_t r = 0; r < 2; ++r) {
    std::vector<double> x;
    for (double v : motion_descriptor(direction_scale(deltas[r]))) x.push_back(v);
    for (double v : temporal_embedding(r + 2, 4)) x.push_back(v);
    // Hand-evaluated two-layer MLP without the outer ReLU.
    const Matrix& w1 = p.mlp.w1->value;
    const Matrix& b1 = p.mlp.b1->value;
    const Matrix& w2 = p.mlp.w2->value;
    const Matrix& b2 = p.mlp.b2->value;
    std::vector<double> h(3);
    for (std::size_t j = 0; j < 3; ++j) {
      double s = b1(0, j);
      for (std::size_t c = 0; c < x.size(); ++c) s += w1(j, c) * x[c];
      h[j] = std::max(0.0, s);
    }
    for (std::size_t o = 0; o < 2; ++o) {
      double s = b2(0, o);
      for (std::size_t j = 0; j < 3; ++j) s += w2(o, j) * h[j];
      CHECK(got(r, o) == doctest::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("encode_trajectory gradients match finite differences") {
  for (bool outer : {false, true}) {
    ParamSet ps;
    Rng rng(5);
    TrajectoryParams p = add_trajectory_params(ps, "ste", 8, 6, 5, rng);
    p.outer_relu = outer;
    p.scale_unit = 20.0;
    const auto path = random_path(rng, 6);
    const double err = testing::max_param_grad_error(ps, [&](numkit::Tape& t) {
      return testing::weighted_sum(t, encode_trajectory(t, path, p));
    });
    CHECK(err < 1e-4);
  }
}
