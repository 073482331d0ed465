#include "slotnav/prompt/prompt.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "slotnav/error.hpp"

namespace slotnav::pgm {

using numkit::Parameter;

Segment slot_segment(world::View v) {
  return static_cast<Segment>(static_cast<std::size_t>(Segment::SlotsFront) + static_cast<std::size_t>(v));
}

Segment current_segment(world::View v) {
  return static_cast<Segment>(static_cast<std::size_t>(Segment::CurFront) + static_cast<std::size_t>(v));
}

std::string segment_name(Segment s) {
  const auto i = static_cast<std::size_t>(s);
  if (s == Segment::Instr) return "INSTR";
  if (s == Segment::Traj) return "TRAJ";
  if (s == Segment::Readout) return "READOUT";
  if (i >= static_cast<std::size_t>(Segment::CurFront)) {
    return "CUR_" + std::string(world::to_string(world::kViews[i - static_cast<std::size_t>(Segment::CurFront)]));
  }
  return "SLOTS_" + std::string(world::to_string(world::kViews[i - static_cast<std::size_t>(Segment::SlotsFront)]));
}

void ReasonerConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::Config, std::string("reasoner config: ") + what);
  };
  check(d >= 1 && d_l >= 1 && d_u >= 1 && mlp_hidden >= 1, "dimensions must be >= 1");
  check(layers >= 1 && heads >= 1, "layers and heads must be >= 1");
  check(d_u % heads == 0, "d_u must be divisible by heads");
  check(displacement_scale > 0.0, "displacement_scale must be positive");
}

ReasonerParams add_reasoner_params(numkit::ParamSet& set, const std::string& prefix,
                                   const ReasonerConfig& c, numkit::Rng& rng) {
  c.validate();
  auto normal = [&](std::size_t r, std::size_t cols) {
    return numkit::random_normal(rng, r, cols, 1.0 / std::sqrt(static_cast<double>(cols)));
  };
  auto ones = [](std::size_t n) { return Matrix(1, n, 1.0); };
  auto zeros = [](std::size_t n) { return Matrix(1, n); };

  ReasonerParams p;
  p.config = c;
  p.w_l = &set.add(prefix + ".w_l", normal(c.d_u, c.d_l));
  p.b_l = &set.add(prefix + ".b_l", zeros(c.d_u));
  p.p_v = &set.add(prefix + ".p_v", normal(c.d_u, c.d));
  p.p_m = &set.add(prefix + ".p_m", normal(c.d_u, c.d));
  p.tags = &set.add(prefix + ".tags", numkit::random_normal(rng, kSegmentCount, c.d_u, 0.5));
  for (std::size_t l = 0; l < c.layers; ++l) {
    const std::string n = prefix + ".layer" + std::to_string(l);
    LayerParams lp;
    lp.ln1_g = &set.add(n + ".ln1_g", ones(c.d_u));
    lp.ln1_b = &set.add(n + ".ln1_b", zeros(c.d_u));
    lp.w_q = &set.add(n + ".w_q", normal(c.d_u, c.d_u));
    lp.w_k = &set.add(n + ".w_k", normal(c.d_u, c.d_u));
    lp.w_v = &set.add(n + ".w_v", normal(c.d_u, c.d_u));
    lp.w_o = &set.add(n + ".w_o", normal(c.d_u, c.d_u));
    lp.ln2_g = &set.add(n + ".ln2_g", ones(c.d_u));
    lp.ln2_b = &set.add(n + ".ln2_b", zeros(c.d_u));
    lp.mlp_w1 = &set.add(n + ".mlp_w1", numkit::random_normal(rng, c.mlp_hidden, c.d_u,
                                                               std::sqrt(2.0 / static_cast<double>(c.d_u))));
    lp.mlp_b1 = &set.add(n + ".mlp_b1", zeros(c.mlp_hidden));
    lp.mlp_w2 = &set.add(n + ".mlp_w2", normal(c.d_u, c.mlp_hidden));
    lp.mlp_b2 = &set.add(n + ".mlp_b2", zeros(c.d_u));
    p.layers.push_back(lp);
  }
  p.lnf_g = &set.add(prefix + ".lnf_g", ones(c.d_u));
  p.lnf_b = &set.add(prefix + ".lnf_b", zeros(c.d_u));
  // Heads start small so the first predictions are near "stay put".
  p.wp_w = &set.add(prefix + ".wp_w", numkit::random_normal(rng, 3, c.d_u, 0.01));
  p.wp_b = &set.add(prefix + ".wp_b", zeros(3));
  p.stop_w = &set.add(prefix + ".stop_w", numkit::random_normal(rng, 1, c.d_u, 0.01));
  p.stop_b = &set.add(prefix + ".stop_b", Matrix(1, 1, -2.0));
  return p;
}

Var project_instruction(Tape& tape, Var e_l, const ReasonerParams& p) {
  return numkit::linear(tape, e_l, tape.param(*p.w_l), tape.param(*p.b_l));
}

Var project_context(Tape& tape, Var tokens, const ReasonerParams& p, bool visual) {
  if (!tokens.valid()) return tokens;
  const Parameter& w = visual ? *p.p_v : *p.p_m;
  if (tape.value(tokens).cols() != w.value.cols()) {
    fail(ErrorKind::Config, "project_context: token width " + std::to_string(tape.value(tokens).cols()) +
                                " does not match projection " + w.value.shape_string());
  }
  return tape.matmul_nt(tokens, tape.param(w));
}

std::size_t PromptSequence::count(Segment s) const {
  std::size_t n = 0;
  for (Segment x : segments) n += x == s ? 1 : 0;
  return n;
}

PromptSequence build_prompt(Tape& tape, Var instruction, Var trajectory,
                            const std::array<Var, world::kViewCount>& slots,
                            const std::array<Var, world::kViewCount>& current) {
  if (!instruction.valid()) fail(ErrorKind::Input, "build_prompt: missing instruction");
  const std::size_t d_u = tape.value(instruction).cols();
  PromptSequence out;
  std::vector<Var> parts;
  auto append = [&](Var v, Segment s) {
    if (!v.valid()) return;
    const Matrix& m = tape.value(v);
    if (m.cols() != d_u) {
      fail(ErrorKind::Config, "build_prompt: " + segment_name(s) + " tokens have width " +
                                  std::to_string(m.cols()) + ", expected " + std::to_string(d_u));
    }
    parts.push_back(v);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      out.segments.push_back(s);
      out.recency.push_back(s == Segment::Traj ? m.rows() - 1 - r : 0);
    }
  };

  append(instruction, Segment::Instr);
  append(trajectory, Segment::Traj);
  for (world::View v : world::kViews) append(slots[static_cast<std::size_t>(v)], slot_segment(v));
  for (world::View v : world::kViews) {
    const Var c = current[static_cast<std::size_t>(v)];
    if (!c.valid() || tape.value(c).rows() == 0) {
      fail(ErrorKind::Input, "build_prompt: missing current observation for view " +
                                 std::string(world::to_string(v)));
    }
    append(c, current_segment(v));
  }
  append(tape.constant(Matrix(1, d_u)), Segment::Readout);
  out.tokens = tape.concat_rows(parts);
  return out;
}

std::vector<double> sinusoid(std::size_t pos, std::size_t dim) {
  std::vector<double> out(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * (c / 2)) / static_cast<double>(dim));
    const double a = static_cast<double>(pos) / freq;
    out[c] = c % 2 == 0 ? std::sin(a) : std::cos(a);
  }
  return out;
}

namespace {

Var attention_block(Tape& tape, Var x, const LayerParams& lp, std::size_t heads) {
  const std::size_t d_u = tape.value(x).cols();
  const std::size_t d_h = d_u / heads;
  const Var q = tape.matmul_nt(x, tape.param(*lp.w_q));
  const Var k = tape.matmul_nt(x, tape.param(*lp.w_k));
  const Var v = tape.matmul_nt(x, tape.param(*lp.w_v));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = heads == 1 ? q : tape.slice_cols(q, h * d_h, d_h);
    Var kh = heads == 1 ? k : tape.slice_cols(k, h * d_h, d_h);
    Var vh = heads == 1 ? v : tape.slice_cols(v, h * d_h, d_h);
    const Var logits = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(d_h)));
    outs.push_back(tape.matmul(tape.softmax_rows(logits), vh));
  }
  const Var merged = heads == 1 ? outs[0] : tape.concat_cols(outs);
  return tape.matmul_nt(merged, tape.param(*lp.w_o));
}

}  // namespace

Prediction reason(Tape& tape, const PromptSequence& prompt, const ReasonerParams& p) {
  const ReasonerConfig& c = p.config;
  const Matrix& tokens = tape.value(prompt.tokens);
  if (tokens.cols() != c.d_u || tokens.rows() != prompt.size()) {
    fail(ErrorKind::Config, "reason: prompt shape " + tokens.shape_string() + " does not match d_u " +
                                std::to_string(c.d_u));
  }
  const std::size_t n = prompt.size();
  std::vector<std::size_t> tag_rows(n);
  Matrix pe(n, c.d_u);
  for (std::size_t r = 0; r < n; ++r) {
    tag_rows[r] = static_cast<std::size_t>(prompt.segments[r]);
    if (prompt.segments[r] == Segment::Traj) {
      const auto s = sinusoid(prompt.recency[r], c.d_u);
      for (std::size_t k = 0; k < c.d_u; ++k) pe(r, k) = s[k];
    }
  }
  Var x = tape.add(prompt.tokens, tape.gather_rows(tape.param(*p.tags), std::move(tag_rows)));
  x = tape.add(x, tape.constant(std::move(pe)));

  for (const LayerParams& lp : p.layers) {
    const Var h1 = tape.layer_norm_rows(x, tape.param(*lp.ln1_g), tape.param(*lp.ln1_b));
    x = tape.add(x, attention_block(tape, h1, lp, c.heads));
    const Var h2 = tape.layer_norm_rows(x, tape.param(*lp.ln2_g), tape.param(*lp.ln2_b));
    const Var hidden = tape.relu(numkit::linear(tape, h2, tape.param(*lp.mlp_w1), tape.param(*lp.mlp_b1)));
    x = tape.add(x, numkit::linear(tape, hidden, tape.param(*lp.mlp_w2), tape.param(*lp.mlp_b2)));
  }
  const Var readout = tape.layer_norm_rows(tape.slice_rows(x, n - 1, 1), tape.param(*p.lnf_g),
                                           tape.param(*p.lnf_b));
  Prediction out;
  out.waypoint = tape.scale(numkit::linear(tape, readout, tape.param(*p.wp_w), tape.param(*p.wp_b)),
                            c.displacement_scale);
  out.stop_logit = numkit::linear(tape, readout, tape.param(*p.stop_w), tape.param(*p.stop_b));
  return out;
}

namespace {

std::string fmt(world::Vec3 v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(%.2f, %.2f, %.2f)", v.x, v.y, v.z);
  return buf;
}

}  // namespace

std::string render_prompt_text(const PromptText& t) {
  std::ostringstream out;
  out << "INSTRUCTION\n" << t.instruction << "\n";
  out << "STATUS\n";
  out << "step: " << t.step << "\n";
  out << "current position: " << fmt(t.position) << "\n";
  out << "previous displacement: "
      << (t.previous_displacement ? fmt(*t.previous_displacement) : std::string("none")) << "\n";
  out << "HISTORY WAYPOINTS\n";
  if (t.history.empty()) out << "none\n";
  for (std::size_t i = 0; i < t.history.size(); ++i) out << "P" << i + 1 << ": " << fmt(t.history[i]) << "\n";
  out << "CONTEXT SUMMARY\n";
  for (const auto& [name, n] : t.segment_counts) out << name << ": " << n << " tokens\n";
  return out.str();
}

}  // namespace slotnav::pgm
