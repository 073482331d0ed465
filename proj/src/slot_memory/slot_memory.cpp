#include "slotnav/slot_memory/slot_memory.hpp"

#include <cmath>

#include "slotnav/error.hpp"

namespace slotnav::shic {

SlotParams add_slot_params(numkit::ParamSet& set, const std::string& prefix, std::size_t slots,
                           std::size_t dim, numkit::Rng& rng) {
  if (slots == 0 || dim == 0) fail(ErrorKind::Config, "slot memory needs K >= 1 and d >= 1");
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  SlotParams p;
  p.phi = &set.add(prefix + ".phi", numkit::random_normal(rng, slots, dim, 1.0));
  p.w_q = &set.add(prefix + ".w_q", numkit::random_normal(rng, dim, dim, s));
  p.w_k = &set.add(prefix + ".w_k", numkit::random_normal(rng, dim, dim, s));
  p.w_v = &set.add(prefix + ".w_v", numkit::random_normal(rng, dim, dim, s));
  p.gru = numkit::add_gru_params(set, prefix + ".gru", dim, rng);
  return p;
}

SlotVars bind(Tape& tape, const SlotParams& p) {
  return {tape.param(*p.phi), tape.param(*p.w_q), tape.param(*p.w_k), tape.param(*p.w_v),
          numkit::bind(tape, p.gru), p.dim()};
}

SlotMemory init_slots(Tape& tape, const SlotVars& p) {
  (void)tape;
  return {p.phi, 1};
}

Var slot_attend(Tape& tape, Var s_prev, Var tokens, const SlotVars& p, Var* attention) {
  const Matrix& s = tape.value(s_prev);
  const Matrix& z = tape.value(tokens);
  if (s.cols() != p.dim || z.cols() != p.dim) {
    fail(ErrorKind::Config, "slot_attend: expected width " + std::to_string(p.dim) + ", got slots " +
                                s.shape_string() + " and tokens " + z.shape_string());
  }
  if (z.rows() == 0) fail(ErrorKind::Config, "slot_attend: empty token set");
  const Var q = tape.matmul_nt(s_prev, p.w_q);
  const Var k = tape.matmul_nt(tokens, p.w_k);
  const Var v = tape.matmul_nt(tokens, p.w_v);
  const Var logits = tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(p.dim)));
  const Var alpha = tape.softmax_rows(logits);
  if (attention) *attention = alpha;
  return tape.matmul(alpha, v);
}

SlotMemory slot_update(Tape& tape, const SlotMemory& prev, Var s_hat, const SlotVars& p) {
  return {numkit::gru_cell(tape, prev.slots, s_hat, p.gru), prev.step + 1};
}

SlotMemory absorb(Tape& tape, const SlotMemory& prev, Var tokens, const SlotVars& p) {
  return slot_update(tape, prev, slot_attend(tape, prev.slots, tokens, p), p);
}

ViewMemories compress_history(Tape& tape, const ViewStreams& streams, std::span<const SlotVars> vars,
                              std::size_t window) {
  if (vars.size() != 1 && vars.size() != world::kViewCount) {
    fail(ErrorKind::Config, "compress_history: need 1 shared or 5 per-view slot parameter sets");
  }
  const std::size_t len = streams[0].size();
  for (const auto& s : streams) {
    if (s.size() != len) fail(ErrorKind::Input, "compress_history: ragged view streams");
  }
  const std::size_t first = window > 0 && len > window ? len - window : 0;
  ViewMemories out;
  for (std::size_t v = 0; v < world::kViewCount; ++v) {
    const SlotVars& p = vars.size() == 1 ? vars[0] : vars[v];
    SlotMemory m = init_slots(tape, p);
    for (std::size_t i = first; i < len; ++i) m = absorb(tape, m, tape.constant(streams[v][i]), p);
    out[v] = m;
  }
  return out;
}

}  // namespace slotnav::shic
