#include "ctxsearch/errors.hpp"

namespace ctxsearch {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidBounds: return "InvalidBounds";
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::SpanMismatch: return "SpanMismatch";
    case ErrorCode::AliasCollision: return "AliasCollision";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::NoRelevant: return "NoRelevant";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ctxsearch
