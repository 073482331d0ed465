#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "slotnav/numkit/ops.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::shic {

using numkit::Matrix;
using numkit::Tape;
using numkit::Var;

/// Learnable initial slots Φ (K×d), query/key/value projections (d×d) and the
/// slot-wise GRU.
struct SlotParams {
  numkit::Parameter* phi = nullptr;
  numkit::Parameter* w_q = nullptr;
  numkit::Parameter* w_k = nullptr;
  numkit::Parameter* w_v = nullptr;
  numkit::GruParams gru;

  std::size_t slots() const { return phi->value.rows(); }
  std::size_t dim() const { return phi->value.cols(); }
};

SlotParams add_slot_params(numkit::ParamSet& set, const std::string& prefix, std::size_t slots,
                           std::size_t dim, numkit::Rng& rng);

struct SlotVars {
  Var phi, w_q, w_k, w_v;
  numkit::GruVars gru;
  std::size_t dim = 0;
};
SlotVars bind(Tape& tape, const SlotParams& p);

/// K×d slot matrix plus the 1-based index of the next frame it will absorb.
struct SlotMemory {
  Var slots;
  std::size_t step = 1;
};

/// S₁ = Φ.
SlotMemory init_slots(Tape& tape, const SlotVars& p);

/// Ŝ = softmax_j(q_k·k_j / √d) v, with q = S W_qᵀ, k = Z W_kᵀ, v = Z W_vᵀ.
/// `attention`, when given, receives the K×N weight matrix.
Var slot_attend(Tape& tape, Var s_prev, Var tokens, const SlotVars& p, Var* attention = nullptr);

/// Every slot row goes through the shared GRU: s_k ← GRU(s_k, ŝ_k).
SlotMemory slot_update(Tape& tape, const SlotMemory& prev, Var s_hat, const SlotVars& p);

/// slot_update ∘ slot_attend for one frame.
SlotMemory absorb(Tape& tape, const SlotMemory& prev, Var tokens, const SlotVars& p);

/// One token stream per view; streams[v][i] is the N×d token matrix of frame i.
using ViewStreams = std::array<std::vector<Matrix>, world::kViewCount>;
using ViewMemories = std::array<SlotMemory, world::kViewCount>;

/// Folds each view's stream into its own slot memory starting from Φ. `vars`
/// holds either one shared entry or one entry per view. With `window` > 0
/// only the last `window` frames are folded. Throws an input error when the
/// streams have different lengths.
ViewMemories compress_history(Tape& tape, const ViewStreams& streams, std::span<const SlotVars> vars,
                              std::size_t window = 0);

}  // namespace slotnav::shic
