#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "grad_check.hpp"
#include "slotnav/error.hpp"
#include "slotnav/prompt/model.hpp"
#include "slotnav/world/episode.hpp"

using namespace slotnav;
using namespace slotnav::pgm;
using numkit::ParamSet;
using numkit::Rng;

namespace {

ReasonerConfig tiny(std::size_t heads = 1, std::size_t layers = 1) {
  ReasonerConfig c;
  c.d = 6;
  c.d_l = 5;
  c.d_u = 8;
  c.layers = layers;
  c.heads = heads;
  c.mlp_hidden = 8;
  c.displacement_scale = 20.0;
  return c;
}

struct Inputs {
  Matrix e_l, traj, cur;
  std::array<Matrix, world::kViewCount> slots;
};

Inputs random_inputs(Rng& rng, const ReasonerConfig& c, std::size_t k = 2) {
  Inputs in;
  in.e_l = numkit::random_normal(rng, 1, c.d_l, 1.0);
  in.traj = numkit::random_normal(rng, 3, c.d, 1.0);
  in.cur = numkit::random_normal(rng, 2, c.d, 1.0);
  for (auto& s : in.slots) s = numkit::random_normal(rng, k, c.d, 1.0);
  return in;
}

Prediction forward(Tape& t, const Inputs& in, const ReasonerParams& p) {
  std::array<Var, world::kViewCount> slots{};
  std::array<Var, world::kViewCount> cur{};
  for (std::size_t v = 0; v < world::kViewCount; ++v) {
    slots[v] = project_context(t, t.constant(in.slots[v]), p, true);
    cur[v] = project_context(t, t.constant(in.cur), p, true);
  }
  const PromptSequence prompt =
      build_prompt(t, project_instruction(t, t.constant(in.e_l), p),
                   project_context(t, t.constant(in.traj), p, false), slots, cur);
  return reason(t, prompt, p);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

pgm::ModelConfig small_model() {
  pgm::ModelConfig m;
  m.d = 8;
  m.d_l = 8;
  m.d_u = 8;
  m.slots = 3;
  m.layers = 1;
  m.heads = 2;
  m.mlp_hidden = 8;
  m.ste_hidden = 8;
  m.time_dim = 4;
  return m;
}

}  // namespace

TEST_CASE("project_instruction special cases and gradient") {
  ParamSet ps;
  Rng rng(1);
  ReasonerConfig c = tiny();
  const ReasonerParams p = add_reasoner_params(ps, "pgm", c, rng);
  const Matrix saved_w = p.w_l->value;
  p.w_l->value.fill(0.0);
  p.b_l->value = numkit::random_normal(rng, 1, c.d_u, 1.0);
  {
    Tape t;
    CHECK(t.value(project_instruction(t, t.constant(numkit::random_normal(rng, 1, c.d_l, 1.0)), p)) ==
          p.b_l->value);
  }

  ParamSet ps2;
  c.d_l = c.d_u;
  const ReasonerParams q = add_reasoner_params(ps2, "pgm", c, rng);
  q.w_l->value = Matrix::identity(c.d_u);
  q.b_l->value.fill(0.0);
  const Matrix e = numkit::random_normal(rng, 1, c.d_u, 1.0);
  {
    Tape t;
    CHECK(t.value(project_instruction(t, t.constant(e), q)) == e);
  }

  p.w_l->value = saved_w;
  const Matrix x = numkit::random_normal(rng, 1, tiny().d_l, 1.0);
  Tape t;
  const Var w = t.param(*p.w_l);
  t.backward(testing::weighted_sum(t, project_instruction(t, t.constant(x), p)));
  const Matrix fd = numkit::fd_gradient(
      [&](const Matrix& probe) {
        const Matrix keep = p.w_l->value;
        p.w_l->value = probe;
        Tape u;
        const double v = u.value(testing::weighted_sum(u, project_instruction(u, u.constant(x), p)))[0];
        p.w_l->value = keep;
        return v;
      },
      p.w_l->value);
  CHECK(numkit::relative_error(t.grad(w), fd) < 1e-6);

  Tape bad;
  try {
    project_instruction(bad, bad.constant(Matrix(1, tiny().d_l + 1)), p);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::Config);
  }
}

TEST_CASE("project_context counts, zero map and dense oracle") {
  ParamSet ps;
  Rng rng(2);
  const ReasonerConfig c = tiny();
  const ReasonerParams p = add_reasoner_params(ps, "pgm", c, rng);
  const Matrix slots = numkit::random_normal(rng, 5 * 3, c.d, 1.0);
  Tape t;
  const Matrix& out = t.value(project_context(t, t.constant(slots), p, true));
  CHECK(out.rows() == 15);
  CHECK(out.cols() == c.d_u);
  // Pairwise dot products of projected tokens against a dense computation.
  for (std::size_t a = 0; a < 15; ++a) {
    for (std::size_t b = 0; b < 15; ++b) {
      long double want = 0;
      for (std::size_t o = 0; o < c.d_u; ++o) {
        long double pa = 0, pb = 0;
        for (std::size_t i = 0; i < c.d; ++i) {
          pa += p.p_v->value(o, i) * slots(a, i);
          pb += p.p_v->value(o, i) * slots(b, i);
        }
        want += pa * pb;
      }
      double got = 0;
      for (std::size_t o = 0; o < c.d_u; ++o) got += out(a, o) * out(b, o);
      CHECK(std::abs(got - static_cast<double>(want)) < 1e-10);
    }
  }
  p.p_m->value.fill(0.0);
  CHECK(t.value(project_context(t, t.constant(slots), p, false)) == Matrix(15, c.d_u));
  CHECK_FALSE(project_context(t, Var{}, p, false).valid());
  try {
    project_context(t, t.constant(Matrix(2, c.d + 1)), p, true);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("build_prompt segment order and counts") {
  ParamSet ps;
  Rng rng(3);
  const ReasonerConfig c = tiny();
  const ReasonerParams p = add_reasoner_params(ps, "pgm", c, rng);
  const Inputs in = random_inputs(rng, c, 4);
  Tape t;
  std::array<Var, world::kViewCount> slots{};
  std::array<Var, world::kViewCount> cur{};
  for (std::size_t v = 0; v < world::kViewCount; ++v) {
    slots[v] = project_context(t, t.constant(in.slots[v]), p, true);
    cur[v] = project_context(t, t.constant(Matrix(v + 1, c.d)), p, true);
  }
  const Var instr = project_instruction(t, t.constant(in.e_l), p);
  const Var traj = project_context(t, t.constant(in.traj), p, false);
  const PromptSequence full = build_prompt(t, instr, traj, slots, cur);
  CHECK(full.size() == 1 + 3 + 5 * 4 + (1 + 2 + 3 + 4 + 5) + 1);
  CHECK(t.value(full.tokens).rows() == full.size());
  CHECK(full.count(Segment::Instr) == 1);
  CHECK(full.count(Segment::Readout) == 1);
  CHECK(full.segments.front() == Segment::Instr);
  CHECK(full.segments.back() == Segment::Readout);
  for (std::size_t i = 1; i < full.size(); ++i) {
    CHECK(static_cast<std::size_t>(full.segments[i - 1]) <= static_cast<std::size_t>(full.segments[i]));
  }
  CHECK(full.recency[1] == 2);
  CHECK(full.recency[3] == 0);

  // Base system: no trajectory and no slots.
  const PromptSequence bs = build_prompt(t, instr, Var{}, {}, cur);
  CHECK(bs.size() == 1 + 15 + 1);
  CHECK(bs.count(Segment::Traj) == 0);
  for (world::View v : world::kViews) CHECK(bs.count(slot_segment(v)) == 0);

  std::array<Var, world::kViewCount> missing = cur;
  missing[3] = Var{};
  try {
    build_prompt(t, instr, traj, slots, missing);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Input);
  }
}

TEST_CASE("reason: zero heads give zero displacement and the stop bias") {
  ParamSet ps;
  Rng rng(4);
  const ReasonerParams p = add_reasoner_params(ps, "pgm", tiny(2, 2), rng);
  p.wp_w->value.fill(0.0);
  p.wp_b->value.fill(0.0);
  p.stop_w->value.fill(0.0);
  p.stop_b->value(0, 0) = 0.37;
  Tape t;
  const Prediction out = forward(t, random_inputs(rng, tiny(2, 2)), p);
  CHECK(t.value(out.waypoint) == Matrix(1, 3));
  CHECK(t.value(out.stop_logit)(0, 0) == 0.37);
}

TEST_CASE("reason is deterministic and invariant to slot order within a view") {
  ParamSet ps;
  Rng rng(5);
  const ReasonerConfig c = tiny(2, 2);
  const ReasonerParams p = add_reasoner_params(ps, "pgm", c, rng);
  Inputs in = random_inputs(rng, c, 3);
  Tape t1, t2;
  const Prediction a = forward(t1, in, p);
  const Prediction b = forward(t2, in, p);
  CHECK(t1.value(a.waypoint) == t2.value(b.waypoint));
  CHECK(t1.value(a.stop_logit) == t2.value(b.stop_logit));

  Inputs swapped = in;
  Matrix& s = swapped.slots[1];
  for (std::size_t k = 0; k < c.d; ++k) std::swap(s(0, k), s(2, k));
  Tape t3;
  const Prediction d = forward(t3, swapped, p);
  CHECK(numkit::max_abs(Matrix::row({t3.value(d.waypoint)[0] - t1.value(a.waypoint)[0],
                                     t3.value(d.waypoint)[1] - t1.value(a.waypoint)[1],
                                     t3.value(d.waypoint)[2] - t1.value(a.waypoint)[2]})) <= 1e-9);
  CHECK(std::abs(t3.value(d.stop_logit)[0] - t1.value(a.stop_logit)[0]) <= 1e-9);

  // Reordering the trajectory does change the output.
  Inputs reordered = in;
  for (std::size_t k = 0; k < c.d; ++k) std::swap(reordered.traj(0, k), reordered.traj(2, k));
  Tape t4;
  CHECK_FALSE(t4.value(forward(t4, reordered, p).waypoint) == t1.value(a.waypoint));
}

TEST_CASE("reason gradients match finite differences for every tensor") {
  for (std::size_t heads : {1u, 2u}) {
    ParamSet ps;
    Rng rng(6 + heads);
    const ReasonerConfig c = tiny(heads, 1);
    const ReasonerParams p = add_reasoner_params(ps, "pgm", c, rng);
    // Heads start near zero; widen them so their gradients are not tiny.
    p.wp_w->value = numkit::random_normal(rng, 3, c.d_u, 0.5);
    p.stop_w->value = numkit::random_normal(rng, 1, c.d_u, 0.5);
    const Inputs in = random_inputs(rng, c);
    const Matrix target = Matrix::row({3.0, -4.0, 1.0});
    std::vector<double> per;
    const double err = testing::max_param_grad_error(
        ps,
        [&](Tape& t) {
          const Prediction out = forward(t, in, p);
          const Var wp = t.sum_squares(t.sub(out.waypoint, t.constant(target)));
          return t.add(wp, t.bce_with_logits(out.stop_logit, 1.0));
        },
        1e-5, &per);
    CHECK(per.size() == ps.size());
    CHECK(err < 1e-4);
  }
}

TEST_CASE("model rollout: recording and inference tapes agree bitwise") {
  world::WorldConfig wc;
  const world::Scene scene = world::generate_scene(21, wc);
  const world::Episode ep = world::generate_episode(scene, wc, 0, world::Difficulty::Hard);
  for (std::size_t window : {0u, 2u}) {
    pgm::ModelConfig mc = small_model();
    mc.history_window = window;
    const Model model(mc, wc);
    Tape rec;
    Rollout train_like(model, ep.instruction, &rec);
    Rollout infer(model, ep.instruction);
    world::Pose pose = ep.start;
    for (std::size_t i = 0; i < 6; ++i) {
      const world::Observation obs = world::observe(scene, wc, pose);
      const StepResult a = train_like.step(obs, pose.position());
      const StepResult b = infer.step(obs, pose.position());
      CHECK(a.waypoint == b.waypoint);
      CHECK(a.stop_logit == b.stop_logit);
      CHECK(a.head.valid());
      CHECK_FALSE(b.head.valid());
      pose = world::step(pose, ep.waypoints[i], wc.bounds);
    }
  }
}

TEST_CASE("model prompt structure follows the module toggles") {
  world::WorldConfig wc;
  const world::Scene scene = world::generate_scene(5, wc);
  const world::Episode ep = world::generate_episode(scene, wc, 0, world::Difficulty::Easy);
  auto counts_at_step4 = [&](bool shic, bool ste) {
    pgm::ModelConfig mc = small_model();
    mc.use_shic = shic;
    mc.use_ste = ste;
    const Model model(mc, wc);
    Rollout r(model, ep.instruction);
    world::Pose pose = ep.start;
    StepResult last;
    for (std::size_t i = 0; i < 4; ++i) {
      last = r.step(world::observe(scene, wc, pose), pose.position());
      pose = world::step(pose, ep.waypoints[i], wc.bounds);
    }
    std::map<std::string, std::size_t> m(last.segment_counts.begin(), last.segment_counts.end());
    return m;
  };
  auto full = counts_at_step4(true, true);
  CHECK(full["INSTR"] == 1);
  CHECK(full["TRAJ"] == 2);  // history P1..P3 gives tokens t2, t3
  CHECK(full["SLOTS_front"] == 3);
  CHECK(full["READOUT"] == 1);
  auto bs = counts_at_step4(false, false);
  CHECK(bs["TRAJ"] == 0);
  CHECK(bs["SLOTS_rear"] == 0);
  CHECK(bs["CUR_front"] >= 1);
  auto shic_only = counts_at_step4(true, false);
  CHECK(shic_only["TRAJ"] == 0);
  CHECK(shic_only["SLOTS_bottom"] == 3);
}

TEST_CASE("end-to-end model gradients over a short rollout") {
  world::WorldConfig wc;
  const world::Scene scene = world::generate_scene(8, wc);
  const world::Episode ep = world::generate_episode(scene, wc, 1, world::Difficulty::Easy);
  pgm::ModelConfig mc = small_model();
  mc.slots = 2;
  Model model(mc, wc);
  auto loss = [&](Tape& t) {
    Rollout r(model, ep.instruction, &t);
    world::Pose pose = ep.start;
    Var total = t.constant(Matrix(1, 1));
    for (std::size_t i = 0; i < 4; ++i) {
      const StepResult s = r.step(world::observe(scene, wc, pose), pose.position());
      const world::Vec3 g = r.head_target(pose.position(), ep.waypoints[i]);
      total = t.add(total, t.sum_squares(t.sub(s.head, t.constant(Matrix::row({g.x, g.y, g.z})))));
      total = t.add(total, t.bce_with_logits(s.stop, i == 3 ? 1.0 : 0.0));
      pose = world::step(pose, ep.waypoints[i], wc.bounds);
    }
    return total;
  };
  std::vector<double> per;
  const double err = testing::max_param_grad_error(model.params(), loss, 1e-5, &per);
  CHECK(per.size() == model.params().size());
  CHECK(err < 1e-4);
}

TEST_CASE("rendered prompt text matches the golden file") {
  world::WorldConfig wc;
  const world::Scene scene = world::generate_scene(1234, wc);
  const world::Episode ep = world::generate_episode(scene, wc, 0, world::Difficulty::Hard);
  const Model model(small_model(), wc);
  Rollout r(model, ep.instruction);
  world::Pose pose = ep.start;
  StepResult last;
  for (std::size_t i = 0; i < 3; ++i) {
    last = r.step(world::observe(scene, wc, pose), pose.position());
    pose = world::step(pose, ep.waypoints[i], wc.bounds);
  }
  PromptText text;
  text.instruction = ep.instruction;
  text.step = r.steps();
  text.history.assign(r.history().begin(), r.history().end() - 1);
  text.position = r.history().back();
  text.previous_displacement = r.history().back() - r.history()[r.history().size() - 2];
  text.segment_counts = last.segment_counts;
  const std::string rendered = render_prompt_text(text);

  CHECK(rendered.find(ep.instruction) != std::string::npos);
  char pos[96];
  std::snprintf(pos, sizeof(pos), "(%.2f, %.2f, %.2f)", text.position.x, text.position.y, text.position.z);
  CHECK(rendered.find(pos) != std::string::npos);

  const std::string golden = std::string(SLOTNAV_TEST_DATA_DIR) + "/prompt_golden.txt";
  if (std::getenv("SLOTNAV_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << rendered;
  }
  CHECK(slurp(golden) == rendered);
}
