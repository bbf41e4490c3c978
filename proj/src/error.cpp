#include "loggrouper/error.hpp"

namespace loggrouper {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::EmptyData: return "empty_data";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Exists: return "exists";
    case ErrorCode::Corrupt: return "corrupt";
    case ErrorCode::Io: return "io";
    case ErrorCode::Unavailable: return "unavailable";
    case ErrorCode::NotReady: return "not_ready";
    case ErrorCode::Internal: return "internal";
  }
  return "internal";
}

}  // namespace loggrouper
