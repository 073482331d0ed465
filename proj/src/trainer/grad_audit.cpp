#include "slotnav/trainer/grad_audit.hpp"

#include <algorithm>
#include <map>

#include "slotnav/error.hpp"
#include "slotnav/numkit/fd.hpp"
#include "slotnav/trainer/trainer.hpp"
#include "slotnav/world/episode.hpp"

namespace slotnav::trainer {

using numkit::Matrix;
using numkit::Tape;

std::string audit_group(const std::string& name) {
  auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
  if (starts("shic")) {
    for (const char* part : {".phi", ".w_q", ".w_k", ".w_v", ".gru"}) {
      const auto pos = name.find(part);
      if (pos != std::string::npos) return "shic" + std::string(part);
    }
    return "shic";
  }
  if (starts("ste")) return "ste.mlp";
  if (starts("pgm.w_l") || starts("pgm.b_l")) return "pgm.w_l";
  if (starts("pgm.p_v")) return "pgm.p_v";
  if (starts("pgm.p_m")) return "pgm.p_m";
  if (starts("pgm.tags")) return "pgm.tags";
  if (starts("pgm.layer")) return "pgm.attention";
  if (starts("pgm.")) return "pgm.heads";
  return name;
}

std::vector<GradAuditEntry> grad_audit(const GradAuditOptions& o) {
  if (o.dims == 0 || o.dims > 64) fail(ErrorKind::Config, "grad audit dims must lie in [1, 64]");
  world::WorldConfig wc;
  wc.seed = o.seed;
  const world::Scene scene = world::generate_scene(o.seed, wc);
  world::Episode ep;
  for (std::uint64_t k = 0;; ++k) {
    try {
      ep = world::generate_episode(scene, wc, o.seed + k, world::Difficulty::Hard);
      break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Generation || k > 32) throw;
    }
  }
  if (ep.waypoints.size() > o.rollout_steps) ep.waypoints.resize(o.rollout_steps);

  TrainConfig tc;
  tc.model.d = o.dims;
  tc.model.d_l = o.dims;
  tc.model.d_u = o.dims;
  tc.model.slots = std::max<std::size_t>(2, o.dims / 2);
  tc.model.mlp_hidden = o.dims;
  tc.model.ste_hidden = o.dims;
  tc.model.time_dim = o.dims % 2 ? o.dims + 1 : o.dims;
  tc.model.heads = o.dims % 2 ? 1 : 2;
  tc.model.init_seed = o.seed;
  pgm::Model model(tc.model, wc);
  auto loss_value = [&] {
    Tape t(true);
    return t.value(episode_loss(t, model, scene, ep, tc, 1.0, 0))[0];
  };
  numkit::GradBuffer grads(model.params());
  {
    Tape t(true);
    const numkit::Var loss = episode_loss(t, model, scene, ep, tc, 1.0, 0);
    t.backward(loss);
    t.accumulate_param_grads(grads);
  }

  std::map<std::string, GradAuditEntry> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < model.params().size(); ++i) {
    numkit::Parameter& p = model.params()[i];
    const Matrix saved = p.value;
    const Matrix fd = numkit::fd_gradient(
        [&](const Matrix& probe) {
          p.value = probe;
          return loss_value();
        },
        saved, o.eps);
    p.value = saved;
    const double err = numkit::relative_error(grads[i], fd);
    const std::string g = audit_group(p.name);
    if (!groups.count(g)) {
      order.push_back(g);
      groups[g].group = g;
    }
    GradAuditEntry& e = groups[g];
    e.tensors.push_back(p.name);
    e.max_rel_error = std::max(e.max_rel_error, err);
  }
  std::vector<GradAuditEntry> out;
  for (const auto& g : order) out.push_back(groups[g]);
  return out;
}

}  // namespace slotnav::trainer
