#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "slotnav/numkit/ops.hpp"
#include "slotnav/world/geometry.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::pgm {

using numkit::Matrix;
using numkit::Tape;
using numkit::Var;

/// Segment tag of a prompt token. Slot and current-view segments carry their
/// view.
enum class Segment : std::size_t {
  Instr = 0,
  Traj = 1,
  SlotsFront = 2,  // + view index
  CurFront = 2 + world::kViewCount,
  Readout = 2 + 2 * world::kViewCount,
};
inline constexpr std::size_t kSegmentCount = 3 + 2 * world::kViewCount;
Segment slot_segment(world::View v);
Segment current_segment(world::View v);
std::string segment_name(Segment s);

struct ReasonerConfig {
  std::size_t d = 32;       // visual / slot / trajectory token width
  std::size_t d_l = 32;     // instruction embedding width
  std::size_t d_u = 32;     // unified width
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t mlp_hidden = 64;
  double displacement_scale = 20.0;  // meters per unit of waypoint-head output
  bool absolute_output = false;      // head predicts P_{t+1} directly

  void validate() const;
};

struct LayerParams {
  numkit::Parameter *ln1_g, *ln1_b, *w_q, *w_k, *w_v, *w_o;
  numkit::Parameter *ln2_g, *ln2_b, *mlp_w1, *mlp_b1, *mlp_w2, *mlp_b2;
};

struct ReasonerParams {
  ReasonerConfig config;
  numkit::Parameter* w_l = nullptr;  // d_u × d_l
  numkit::Parameter* b_l = nullptr;  // 1 × d_u
  numkit::Parameter* p_v = nullptr;  // d_u × d, slots and current-view tokens
  numkit::Parameter* p_m = nullptr;  // d_u × d, trajectory tokens
  numkit::Parameter* tags = nullptr;  // kSegmentCount × d_u
  std::vector<LayerParams> layers;
  numkit::Parameter* lnf_g = nullptr;
  numkit::Parameter* lnf_b = nullptr;
  numkit::Parameter* wp_w = nullptr;  // 3 × d_u
  numkit::Parameter* wp_b = nullptr;
  numkit::Parameter* stop_w = nullptr;  // 1 × d_u
  numkit::Parameter* stop_b = nullptr;
};

ReasonerParams add_reasoner_params(numkit::ParamSet& set, const std::string& prefix,
                                   const ReasonerConfig& config, numkit::Rng& rng);

/// Ẽ_L = E_L W_Lᵀ + b_L.
Var project_instruction(Tape& tape, Var e_l, const ReasonerParams& p);

/// Rows of `tokens` mapped by P_v (visual = true) or P_m; an invalid Var
/// passes through unchanged.
Var project_context(Tape& tape, Var tokens, const ReasonerParams& p, bool visual);

/// Ordered prompt tokens, one segment tag per row. `recency` holds the
/// distance of a TRAJ row from the most recent one (0 = latest) and is unused
/// for other rows.
struct PromptSequence {
  Var tokens;
  std::vector<Segment> segments;
  std::vector<std::size_t> recency;

  std::size_t size() const { return segments.size(); }
  std::size_t count(Segment s) const;
};

/// All inputs already projected to d_u. `trajectory` and `slots[v]` may be
/// invalid (no history, or module disabled). Every current view must be
/// present; otherwise an input error is raised.
PromptSequence build_prompt(Tape& tape, Var instruction, Var trajectory,
                            const std::array<Var, world::kViewCount>& slots,
                            const std::array<Var, world::kViewCount>& current);

struct Prediction {
  Var waypoint;   // 1×3: displacement in meters, or absolute position
  Var stop_logit;  // 1×1
};

/// Pre-norm attention stack over the prompt; the READOUT row feeds both heads.
Prediction reason(Tape& tape, const PromptSequence& prompt, const ReasonerParams& p);

/// Sinusoidal code of integer position `pos` in `dim` columns.
std::vector<double> sinusoid(std::size_t pos, std::size_t dim);

/// What the inspect command shows for one step.
struct PromptText {
  std::string instruction;
  std::size_t step = 1;
  world::Vec3 position;
  std::optional<world::Vec3> previous_displacement;
  std::vector<world::Vec3> history;  // P₁ … P_{t−1}
  std::vector<std::pair<std::string, std::size_t>> segment_counts;
};

/// Sections INSTRUCTION / STATUS / HISTORY WAYPOINTS / CONTEXT SUMMARY, one
/// item per line, coordinates to 2 decimals.
std::string render_prompt_text(const PromptText& t);

}  // namespace slotnav::pgm
