#include "stemtrace/error.hpp"

namespace stemtrace {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::domain: return "domain_error";
    case ErrorCode::insufficient_control_points: return "insufficient_control_points";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::no_stems: return "no_stems";
    case ErrorCode::validation: return "validation_error";
    case ErrorCode::format: return "format_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
  }
  return "unknown";
}

}  // namespace stemtrace
