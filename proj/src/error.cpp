#include "lead/error.hpp"

namespace lead {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid input";
    case ErrorCode::InvalidParameter: return "invalid parameter";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Format: return "format error";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::Internal: return "internal error";
  }
  return "unknown error";
}

}  // namespace lead
