#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sqzem {

/// Failure categories raised by the library. The CLI maps them onto exit codes.
enum class Errc {
  invalid_truncation,
  spec_mismatch,
  invalid_parameter,
  critical_coupling_exceeded,
  not_found,
  model_invalid,
  stiffness,
  accuracy,
  non_unique_steady_state,
  truncation_too_small,
  undefined_correlation,
  config,
};

/// Compact number formatting for messages; std::to_string would print 1e-9 as 0.000000.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_truncation: return "invalid-truncation";
    case Errc::spec_mismatch: return "spec-mismatch";
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::critical_coupling_exceeded: return "critical-coupling-exceeded";
    case Errc::not_found: return "not-found";
    case Errc::model_invalid: return "model-invalid";
    case Errc::stiffness: return "stiffness";
    case Errc::accuracy: return "accuracy";
    case Errc::non_unique_steady_state: return "non-unique-steady-state";
    case Errc::truncation_too_small: return "truncation-too-small";
    case Errc::undefined_correlation: return "undefined-correlation";
    case Errc::config: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// True for failures that come from the numerical solvers rather than from bad input.
inline bool is_solver_failure(Errc code) {
  switch (code) {
    case Errc::stiffness:
    case Errc::accuracy:
    case Errc::non_unique_steady_state:
    case Errc::truncation_too_small:
    case Errc::undefined_correlation:
      return true;
    default:
      return false;
  }
}

}  // namespace sqzem
