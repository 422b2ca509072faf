#pragma once

#include <stdexcept>
#include <string>

namespace kinmap {

enum class ErrorCode {
  precondition,
  axis_undefined,
  representation_singular,
  parse,
  validation,
  loop_closure_unsupported,
  test_vacuous,
  grid_infeasible,
  domain,
  tracking_lost,
  unknown_name,
  coverage_gap,
  io,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::precondition: return "precondition violation";
    case ErrorCode::axis_undefined: return "axis undefined";
    case ErrorCode::representation_singular: return "representation singular";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::validation: return "validation error";
    case ErrorCode::loop_closure_unsupported: return "loop closure unsupported";
    case ErrorCode::test_vacuous: return "test vacuous";
    case ErrorCode::grid_infeasible: return "grid scan infeasible";
    case ErrorCode::domain: return "domain error";
    case ErrorCode::tracking_lost: return "tracking lost";
    case ErrorCode::unknown_name: return "unknown name";
    case ErrorCode::coverage_gap: return "coverage gap";
    case ErrorCode::io: return "i/o error";
  }
  return "error";
}

/// Every failure raised by the library carries one of the codes above; the
/// message starts with the code's text so callers can match on either.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::precondition, what);
}

}  // namespace kinmap
