#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tauclock {

enum class ErrorKind {
  invalid_parameter,
  invalid_input,
  unsupported_configuration,
  degenerate_transition,
  too_large_lattice,
  use_quadratic_probe,
  validation,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::unsupported_configuration: return "unsupported-configuration";
    case ErrorKind::degenerate_transition: return "degenerate-transition";
    case ErrorKind::too_large_lattice: return "too-large-lattice";
    case ErrorKind::use_quadratic_probe: return "use-quadratic-probe";
    case ErrorKind::validation: return "validation";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above, so
/// callers (and the command line tool) can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

namespace detail {

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace detail
}  // namespace tauclock
