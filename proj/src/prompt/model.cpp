#include "slotnav/prompt/model.hpp"

#include "slotnav/error.hpp"

namespace slotnav::pgm {

using nlohmann::json;
using nlohmann::ordered_json;

void ModelConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::Config, std::string("model config: ") + what);
  };
  check(d >= 1 && d_l >= 1 && d_u >= 1, "dimensions must be >= 1");
  check(slots >= 1, "slots must be >= 1");
  check(layers >= 1 && heads >= 1, "layers and heads must be >= 1");
  check(d_u % heads == 0, "d_u must be divisible by heads");
  check(mlp_hidden >= 1 && ste_hidden >= 1, "hidden widths must be >= 1");
  check(time_dim >= 2 && time_dim % 2 == 0, "time_dim must be even and >= 2");
}

ordered_json to_json(const ModelConfig& c) {
  ordered_json j;
  j["d"] = c.d;
  j["d_l"] = c.d_l;
  j["d_u"] = c.d_u;
  j["slots"] = c.slots;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["mlp_hidden"] = c.mlp_hidden;
  j["ste_hidden"] = c.ste_hidden;
  j["time_dim"] = c.time_dim;
  j["use_shic"] = c.use_shic;
  j["use_ste"] = c.use_ste;
  j["per_view_slots"] = c.per_view_slots;
  j["history_window"] = c.history_window;
  j["absolute_output"] = c.absolute_output;
  j["encoder_seed"] = c.encoder_seed;
  j["init_seed"] = c.init_seed;
  return j;
}

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::Config, "model config must be a JSON object");
  ModelConfig c;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const json& v = it.value();
      if (k == "d") c.d = v.get<std::size_t>();
      else if (k == "d_l") c.d_l = v.get<std::size_t>();
      else if (k == "d_u") c.d_u = v.get<std::size_t>();
      else if (k == "slots") c.slots = v.get<std::size_t>();
      else if (k == "layers") c.layers = v.get<std::size_t>();
      else if (k == "heads") c.heads = v.get<std::size_t>();
      else if (k == "mlp_hidden") c.mlp_hidden = v.get<std::size_t>();
      else if (k == "ste_hidden") c.ste_hidden = v.get<std::size_t>();
      else if (k == "time_dim") c.time_dim = v.get<std::size_t>();
      else if (k == "use_shic") c.use_shic = v.get<bool>();
      else if (k == "use_ste") c.use_ste = v.get<bool>();
      else if (k == "per_view_slots") c.per_view_slots = v.get<bool>();
      else if (k == "history_window") c.history_window = v.get<std::size_t>();
      else if (k == "absolute_output") c.absolute_output = v.get<bool>();
      else if (k == "encoder_seed") c.encoder_seed = v.get<std::uint64_t>();
      else if (k == "init_seed") c.init_seed = v.get<std::uint64_t>();
      else fail(ErrorKind::Config, "unknown model config key '" + k + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

ReasonerConfig reasoner_config(const ModelConfig& c, const world::WorldConfig& w) {
  ReasonerConfig r;
  r.d = c.d;
  r.d_l = c.d_l;
  r.d_u = c.d_u;
  r.layers = c.layers;
  r.heads = c.heads;
  r.mlp_hidden = c.mlp_hidden;
  r.displacement_scale = w.step_max;
  r.absolute_output = c.absolute_output;
  return r;
}

}  // namespace

Model::Model(const ModelConfig& config, const world::WorldConfig& world)
    : config_((config.validate(), config)),
      world_(world),
      visual_(world, config.d, config.encoder_seed),
      text_(world.vocab, config.d_l, config.encoder_seed) {
  world_.validate();
  // Parameters are always allocated in the same order so a checkpoint's
  // tensor list is a function of the config alone.
  numkit::Rng rng(numkit::derive_seed(config.init_seed, {0x1417}));
  const std::size_t slot_sets = config.per_view_slots ? world::kViewCount : 1;
  if (config.use_shic) {
    for (std::size_t v = 0; v < slot_sets; ++v) {
      const std::string prefix = config.per_view_slots
                                     ? "shic." + std::string(world::to_string(world::kViews[v]))
                                     : std::string("shic");
      slots_.push_back(shic::add_slot_params(params_, prefix, config.slots, config.d, rng));
    }
  }
  if (config.use_ste) {
    trajectory_ = ste::add_trajectory_params(params_, "ste", config.time_dim, config.ste_hidden, config.d, rng);
    trajectory_.scale_unit = world.step_max;
  }
  reasoner_ = add_reasoner_params(params_, "pgm", reasoner_config(config, world), rng);
}

Rollout::Rollout(const Model& model, const std::string& instruction, Tape* recording)
    : model_(model),
      instruction_(instruction),
      e_l_(model.text().encode(instruction)),
      recording_(recording) {
  if (recording_ && !recording_->records_grads()) {
    fail(ErrorKind::Config, "Rollout: recording tape must record gradients");
  }
}

world::Vec3 Rollout::head_target(world::Vec3 position, world::Vec3 next) const {
  return model_.config().absolute_output ? next : next - position;
}

std::vector<shic::SlotVars> Rollout::bind_slots(Tape& tape) const {
  std::vector<shic::SlotVars> out;
  for (const auto& p : model_.slot_params()) out.push_back(shic::bind(tape, p));
  return out;
}

StepResult Rollout::step(const world::Observation& obs, world::Vec3 position) {
  const encoders::ViewTokens tokens = model_.visual().encode_views(obs);
  if (recording_) return run(*recording_, tokens, position);
  Tape tape(false);
  return run(tape, tokens, position);
}

StepResult Rollout::run(Tape& tape, const encoders::ViewTokens& tokens, world::Vec3 position) {
  const ModelConfig& c = model_.config();
  const ReasonerParams& rp = model_.reasoner();

  const Var instr = project_instruction(tape, tape.constant(e_l_), rp);

  Var traj;
  if (c.use_ste && history_.size() >= 2) {
    traj = project_context(tape, ste::encode_trajectory(tape, history_, model_.trajectory_params()), rp, false);
  }

  std::array<Var, world::kViewCount> slots{};
  std::vector<shic::SlotVars> vars;
  if (c.use_shic) {
    vars = bind_slots(tape);
    auto vars_for = [&](std::size_t v) -> const shic::SlotVars& { return vars.size() == 1 ? vars[0] : vars[v]; };
    if (c.history_window > 0) {
      memory_ = shic::compress_history(tape, frames_, vars, c.history_window);
    } else if (history_.empty()) {
      for (std::size_t v = 0; v < world::kViewCount; ++v) memory_[v] = shic::init_slots(tape, vars_for(v));
    } else if (!recording_) {
      for (std::size_t v = 0; v < world::kViewCount; ++v) {
        memory_[v] = {tape.constant(memory_values_[v]), history_.size() + 1};
      }
    }
    for (std::size_t v = 0; v < world::kViewCount; ++v) {
      slots[v] = project_context(tape, memory_[v].slots, rp, true);
    }
  }

  std::array<Var, world::kViewCount> current{};
  for (std::size_t v = 0; v < world::kViewCount; ++v) {
    current[v] = project_context(tape, tape.constant(tokens[v]), rp, true);
  }

  const PromptSequence prompt = build_prompt(tape, instr, traj, slots, current);
  const Prediction pred = reason(tape, prompt, rp);

  StepResult out;
  const Matrix& head = tape.value(pred.waypoint);
  const world::Vec3 h{head(0, 0), head(0, 1), head(0, 2)};
  out.waypoint = c.absolute_output ? h : position + h;
  out.stop_logit = tape.value(pred.stop_logit)(0, 0);
  if (recording_) {
    out.head = pred.waypoint;
    out.stop = pred.stop_logit;
  }
  for (std::size_t s = 0; s < kSegmentCount; ++s) {
    const auto seg = static_cast<Segment>(s);
    out.segment_counts.emplace_back(segment_name(seg), prompt.count(seg));
  }

  // Fold the frame just seen into the memory used from the next step on.
  if (c.use_shic) {
    if (c.history_window > 0) {
      for (std::size_t v = 0; v < world::kViewCount; ++v) {
        frames_[v].push_back(tokens[v]);
        if (frames_[v].size() > c.history_window) frames_[v].erase(frames_[v].begin());
      }
    } else {
      for (std::size_t v = 0; v < world::kViewCount; ++v) {
        const shic::SlotVars& p = vars.size() == 1 ? vars[0] : vars[v];
        memory_[v] = shic::absorb(tape, memory_[v], tape.constant(tokens[v]), p);
        if (!recording_) memory_values_[v] = tape.value(memory_[v].slots);
      }
    }
  }
  history_.push_back(position);
  return out;
}

PromptText replay_prompt(const Model& model, const world::Scene& scene, const world::Episode& episode,
                         std::size_t step) {
  if (step == 0 || step > episode.waypoints.size()) {
    fail(ErrorKind::Input, "step " + std::to_string(step) + " outside 1.." + std::to_string(episode.waypoints.size()));
  }
  Rollout r(model, episode.instruction);
  world::Pose pose = episode.start;
  StepResult last;
  for (std::size_t i = 0; i < step; ++i) {
    if (i > 0) pose = world::step(pose, episode.waypoints[i - 1], model.world().bounds);
    last = r.step(world::observe(scene, model.world(), pose), pose.position());
  }
  const auto& h = r.history();
  PromptText text;
  text.instruction = episode.instruction;
  text.step = step;
  text.position = h.back();
  text.history.assign(h.begin(), h.end() - 1);
  if (h.size() >= 2) text.previous_displacement = h.back() - h[h.size() - 2];
  text.segment_counts = last.segment_counts;
  return text;
}

}  // namespace slotnav::pgm
