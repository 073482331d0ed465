#include "slotnav/world/instruction.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "slotnav/error.hpp"

namespace slotnav::world {

std::string_view to_string(Difficulty d) { return d == Difficulty::Easy ? "easy" : "hard"; }

Difficulty difficulty_from_string(std::string_view s) {
  if (s == "easy") return Difficulty::Easy;
  if (s == "hard") return Difficulty::Hard;
  fail(ErrorKind::Input, "unknown difficulty '" + std::string(s) + "'");
}

std::size_t heading_bin(double bearing) {
  const double step = std::numbers::pi / 4.0;
  const long bin = std::lround(bearing / step);
  return static_cast<std::size_t>(((bin % 8) + 8) % 8);
}

double heading_bin_angle(std::size_t bin) {
  return static_cast<double>(bin % 8) * std::numbers::pi / 4.0;
}

namespace {

std::string describe(const Descriptor& d, const Vocabulary& v) {
  return v.colors.at(d.color) + " " + v.kinds.at(d.kind);
}

[[noreturn]] void reject(std::string_view text, const std::string& why) {
  fail(ErrorKind::Encoding, "instruction '" + std::string(text) + "': " + why);
}

std::size_t lookup(const std::vector<std::string>& words, const std::string& w,
                   std::string_view text, const char* what) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] == w) return i;
  }
  reject(text, std::string("unknown ") + what + " '" + w + "'");
}

}  // namespace

std::string render_instruction(const InstructionSpec& spec, const Vocabulary& vocab) {
  std::string out = "Fly " + std::string(kHeadingWords.at(spec.heading)) + " to the ";
  if (spec.via) {
    out += describe(*spec.via, vocab) + ", then continue to the " + describe(spec.target, vocab) + ".";
  } else {
    out += describe(spec.target, vocab) + ".";
  }
  return out;
}

InstructionSpec parse_instruction(std::string_view text, const Vocabulary& vocab) {
  if (text.empty() || text.back() != '.') reject(text, "missing final period");
  std::string body(text.substr(0, text.size() - 1));
  // Split off the commas so they become their own tokens.
  std::string spaced;
  for (char c : body) {
    if (c == ',') {
      spaced += " ,";
    } else {
      spaced += c;
    }
  }
  std::istringstream in(spaced);
  std::vector<std::string> tok;
  for (std::string w; in >> w;) tok.push_back(w);

  auto expect = [&](std::size_t i, std::string_view w) {
    if (i >= tok.size() || tok[i] != w) reject(text, "expected '" + std::string(w) + "'");
  };
  expect(0, "Fly");
  if (tok.size() < 2) reject(text, "missing heading");
  InstructionSpec spec;
  bool heading_ok = false;
  for (std::size_t h = 0; h < kHeadingWords.size(); ++h) {
    if (tok[1] == kHeadingWords[h]) {
      spec.heading = h;
      heading_ok = true;
    }
  }
  if (!heading_ok) reject(text, "unknown heading '" + tok[1] + "'");
  expect(2, "to");
  expect(3, "the");
  if (tok.size() < 6) reject(text, "truncated landmark description");
  Descriptor first{lookup(vocab.colors, tok[4], text, "color"),
                   lookup(vocab.kinds, tok[5], text, "kind")};
  if (tok.size() == 6) {
    spec.target = first;
    return spec;
  }
  expect(6, ",");
  expect(7, "then");
  expect(8, "continue");
  expect(9, "to");
  expect(10, "the");
  if (tok.size() != 13) reject(text, "unexpected trailing words");
  spec.via = first;
  spec.target = {lookup(vocab.colors, tok[11], text, "color"),
                 lookup(vocab.kinds, tok[12], text, "kind")};
  return spec;
}

}  // namespace slotnav::world
