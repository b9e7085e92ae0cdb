#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxsearch {

enum class ErrorCode {
  UnsupportedLanguage,
  EncodingError,
  IndexOutOfRange,
  InvalidBounds,
  EmptyTree,
  SpanMismatch,
  AliasCollision,
  IoError,
  SchemaError,
  DimensionMismatch,
  ZeroVector,
  NoRelevant,
  InvalidTemperature,
  BatchTooSmall,
  EmptyInput,
  Diverged,
  InvalidConfig,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by the library; `code()` says which
/// contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ctxsearch
