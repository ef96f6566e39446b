#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stemtrace {

enum class ErrorCode {
  domain,
  insufficient_control_points,
  parse,
  no_stems,
  validation,
  format,
  io,
  dimension_mismatch,
};

/// Machine-readable name, e.g. "insufficient_control_points".
std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// that the CLI and HTTP layers can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace stemtrace
