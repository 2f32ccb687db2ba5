#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wcvs {

enum class ErrorCode {
  NotInFront,
  BadDepth,
  SizeMismatch,
  ShapeMismatch,
  MissingLabel,
  NoBackward,
  EmptyInput,
  WindowTooShort,
  LayerMismatch,
  LengthMismatch,
  Empty,
  OutOfRange,
  BadSpec,
  ParseError,
  MissingProperty,
  NotARotation,
  UnsupportedFormat,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported with this type; `code()` identifies the
// failure class so callers (and the CLI) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wcvs
