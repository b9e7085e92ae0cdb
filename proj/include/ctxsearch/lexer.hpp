#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ctxsearch {

/// Language-agnostic tokenization of joined pair text for the toy encoder
/// and the lexical baseline.
///
/// Emits markers (`<|...|>`) whole, words ([A-Za-z0-9_$] runs and non-ASCII
/// bytes), single punctuation characters, and for every non-empty line after
/// a newline an indentation token `<ind:N>` carrying the tab-expanded width.
/// Other whitespace is dropped.
std::vector<std::string> encoder_tokens(std::string_view text);

/// Position of the first mask marker in `tokens`, or tokens.size().
std::size_t find_mask(const std::vector<std::string>& tokens);

bool is_indent_token(std::string_view token) noexcept;
bool is_marker_token(std::string_view token) noexcept;

}  // namespace ctxsearch
