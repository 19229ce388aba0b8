#include "drc/error.hpp"

namespace drc {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::singular_matrix: return "singular_matrix";
    case ErrorCode::numeric: return "numeric_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::internal: return "internal_error";
  }
  return "unknown";
}

}  // namespace drc
