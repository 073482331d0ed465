#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "slotnav/numkit/matrix.hpp"
#include "slotnav/world/instruction.hpp"
#include "slotnav/world/observation.hpp"

namespace slotnav::encoders {

/// Per-view token matrices (N_v × d), indexed by world::View.
using ViewTokens = std::array<numkit::Matrix, world::kViewCount>;

/// Frozen visual tokenizer: a seeded linear lift of each raw observation
/// token to dimension d. Offsets and distance are divided by the sensor
/// range first so every raw column is O(1).
/// Holds no trainable parameters.
class VisualEncoder {
 public:
  VisualEncoder(const world::WorldConfig& world, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept { return lift_.rows(); }
  std::size_t raw_dim() const noexcept { return layout_.dim(); }

  /// N×raw_dim raw tokens → N×d. Throws a config error on a column mismatch.
  numkit::Matrix encode(const numkit::Matrix& raw) const;
  ViewTokens encode_views(const world::Observation& obs) const;
  /// The embedding every empty view maps to.
  numkit::Matrix null_embedding() const;

  const numkit::Matrix& lift() const noexcept { return lift_; }

 private:
  world::FeatureLayout layout_;
  double range_;
  numkit::Matrix lift_;  // d × raw_dim
};

/// Frozen instruction encoder: one-hot attribute vector
///   [target color | target kind | via color or none | via kind or none |
///    difficulty | heading]
/// lifted to d_l by a seeded matrix and L2-normalized.
class InstructionEncoder {
 public:
  InstructionEncoder(const world::Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const noexcept { return lift_.rows(); }
  std::size_t onehot_dim() const noexcept { return lift_.cols(); }

  /// Throws an encoding error for text outside the template or vocabulary.
  numkit::Matrix encode(std::string_view text) const;
  numkit::Matrix encode(const world::InstructionSpec& spec) const;
  numkit::Matrix onehot(const world::InstructionSpec& spec) const;

  const numkit::Matrix& lift() const noexcept { return lift_; }

 private:
  world::Vocabulary vocab_;
  numkit::Matrix lift_;  // d_l × onehot_dim
};

}  // namespace slotnav::encoders
