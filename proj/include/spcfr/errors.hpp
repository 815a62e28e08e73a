#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spcfr {

/// Malformed tree, unknown node id, or a dimension mismatch between a vector
/// and the treeplex it is supposed to live on.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a minimizer's next_decision/observe_loss protocol is violated.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Game or oracle instance exceeds a hard size limit.
class SizeLimitError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Game-file diagnostic; carries the 1-based line (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : std::runtime_error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace spcfr
