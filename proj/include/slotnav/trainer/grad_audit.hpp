#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace slotnav::trainer {

struct GradAuditOptions {
  std::size_t dims = 8;  // model width, slots, hidden sizes
  double eps = 1e-5;
  std::uint64_t seed = 3;
  std::size_t rollout_steps = 4;
};

struct GradAuditEntry {
  std::string group;                 // e.g. "shic.gru", "pgm.attention"
  std::vector<std::string> tensors;  // parameter names in the group
  double max_rel_error = 0.0;
};

/// Compares tape gradients of the training loss over a short teacher-forced
/// rollout against central finite differences, tensor by tensor, for every
/// trainable parameter. Entries come back grouped by module part.
std::vector<GradAuditEntry> grad_audit(const GradAuditOptions& options = {});

/// Maps a parameter name to its audit group.
std::string audit_group(const std::string& param_name);

}  // namespace slotnav::trainer
