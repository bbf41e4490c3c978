#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loggrouper {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  EmptyData,
  Degenerate,
  NotFound,
  Exists,
  Corrupt,
  Io,
  Unavailable,
  NotReady,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the core carries a stable code so the C API,
// the CLI exit codes and the REST error envelope can all be derived from it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace loggrouper
