#include "ctxsearch/lexer.hpp"

#include "ctxsearch/syntax.hpp"

namespace ctxsearch {

namespace {

bool is_word_char(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '$' || c >= 0x80;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> encoder_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '\n') {
      std::size_t j = i + 1;
      while (j < n && (text[j] == ' ' || text[j] == '\t')) ++j;
      if (j < n && text[j] != '\n' && text[j] != '\r') {
        out.push_back("<ind:" + std::to_string(leading_indent_columns(text.substr(i + 1, j - i - 1))) +
                      ">");
      }
      i = j;
      continue;
    }
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '<' && i + 1 < n && text[i + 1] == '|') {
      const std::size_t close = text.find("|>", i + 2);
      if (close != std::string_view::npos) {
        out.emplace_back(text.substr(i, close + 2 - i));
        i = close + 2;
        continue;
      }
    }
    if (is_word_char(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
      out.emplace_back(text.substr(i, j - i));
      i = j;
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
  return out;
}

std::size_t find_mask(const std::vector<std::string>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "<|mask|>") return i;
  }
  return tokens.size();
}

bool is_indent_token(std::string_view token) noexcept { return token.rfind("<ind:", 0) == 0; }

bool is_marker_token(std::string_view token) noexcept {
  return token.size() >= 4 && token.substr(0, 2) == "<|" && token.substr(token.size() - 2) == "|>";
}

}  // namespace ctxsearch
