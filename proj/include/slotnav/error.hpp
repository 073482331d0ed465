#pragma once

#include <stdexcept>
#include <string>

namespace slotnav {

enum class ErrorKind {
  Config,      // invalid configuration or dimension mismatch
  Io,          // unreadable/unwritable paths
  Input,       // malformed or inconsistent input data (schema, ragged streams)
  Generation,  // world/episode generation could not satisfy a template
  Encoding,    // instruction text outside the closed vocabulary
  Actuation,   // non-finite waypoint handed to the simulator
  Numeric,     // non-finite loss, oracle failure
  Degenerate,  // metric undefined for the episode (e.g. start at goal)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
    case ErrorKind::Input: return "input";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Encoding: return "encoding";
    case ErrorKind::Actuation: return "actuation";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace slotnav
