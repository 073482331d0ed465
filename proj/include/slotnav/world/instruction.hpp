#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "slotnav/world/config.hpp"

namespace slotnav::world {

enum class Difficulty { Easy, Hard };

std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

/// Eight compass headings, counter-clockwise from +x (east).
inline constexpr std::array<std::string_view, 8> kHeadingWords = {
    "east", "north-east", "north", "north-west", "west", "south-west", "south", "south-east"};

/// Nearest compass bin of a bearing (radians, atan2 convention).
std::size_t heading_bin(double bearing);
double heading_bin_angle(std::size_t bin);

struct Descriptor {
  std::size_t color = 0;
  std::size_t kind = 0;
  friend bool operator==(const Descriptor&, const Descriptor&) = default;
};

/// Attributes carried by a templated instruction.
struct InstructionSpec {
  Descriptor target;
  std::optional<Descriptor> via;  // present iff difficulty is hard
  std::size_t heading = 0;        // compass bin of the first leg
  Difficulty difficulty() const { return via ? Difficulty::Hard : Difficulty::Easy; }
  friend bool operator==(const InstructionSpec&, const InstructionSpec&) = default;
};

/// Easy: "Fly <heading> to the <color> <kind>."
/// Hard: "Fly <heading> to the <color> <kind>, then continue to the <color> <kind>."
std::string render_instruction(const InstructionSpec& spec, const Vocabulary& vocab);

/// Inverse of render_instruction. Throws an encoding error for text that
/// does not follow the template or uses words outside `vocab`.
InstructionSpec parse_instruction(std::string_view text, const Vocabulary& vocab);

}  // namespace slotnav::world
