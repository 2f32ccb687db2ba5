#include "wcvs/error.hpp"

namespace wcvs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInFront: return "NotInFront";
    case ErrorCode::BadDepth: return "BadDepth";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::NoBackward: return "NoBackward";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::LayerMismatch: return "LayerMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadSpec: return "BadSpec";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingProperty: return "MissingProperty";
    case ErrorCode::NotARotation: return "NotARotation";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace wcvs
