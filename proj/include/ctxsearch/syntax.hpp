#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ctxsearch {

/// Columns a tab advances to (next multiple of this width).
inline constexpr std::uint32_t kTabWidth = 4;

/// A grammar plus the synthetic marker texts used for sequences in that
/// language. Instances live in a static registry; hold them by reference.
struct Language {
  std::string name;
  std::string cls_token;
  std::string mask_token;
  std::string fold_token;
};

/// Looks up a grammar by name (java, python, c, javascript).
/// Throws Error(UnsupportedLanguage).
const Language& language(std::string_view name);

std::vector<std::string> supported_languages();

/// "name=abi" pairs for every compiled-in grammar, for --version output.
std::string grammar_versions();

/// True if `text` contains any cls/mask/fold marker of any language.
bool contains_marker_text(std::string_view text);

/// Maps file extensions to grammars. The defaults cover the compiled-in
/// grammars; a config file overrides or extends them, one `ext=grammar`
/// per line (`#` starts a comment).
class GrammarRegistry {
 public:
  static GrammarRegistry defaults();

  /// Parses config text on top of the current mapping. Throws
  /// Error(InvalidConfig) on malformed lines or unknown grammars.
  void load_config_text(std::string_view text);
  void load_config_file(const std::filesystem::path& path);

  /// Grammar for a path, keyed by its extension (without the dot, lowercase).
  std::optional<std::string> grammar_for(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& mapping() const { return ext_to_grammar_; }

 private:
  std::map<std::string, std::string> ext_to_grammar_;
};

enum class TokenClass : std::uint8_t {
  Whitespace,  // gap text between grammar tokens, all whitespace
  Identifier,  // grammar leaf whose kind names an identifier
  Literal,     // opaque text: strings, comments, non-whitespace gap text
  Other,       // keywords, punctuation, numbers
  Marker,      // synthetic cls/mask/fold token
};

enum class MarkerKind : std::uint8_t { None, Cls, Mask, Fold };

struct Token {
  std::string text;
  std::uint32_t byte_begin = 0;
  std::uint32_t byte_end = 0;
  std::string_view kind;
  TokenClass cls = TokenClass::Other;
  MarkerKind marker = MarkerKind::None;
  std::uint32_t line = 0;    // 0-based source line of byte_begin
  std::uint32_t column = 0;  // 0-based byte column of byte_begin
  std::uint32_t line_indent = 0;  // tab-expanded indentation of `line`

  bool is_identifier() const noexcept { return cls == TokenClass::Identifier; }
  bool is_whitespace() const noexcept { return cls == TokenClass::Whitespace; }
  bool is_marker() const noexcept { return cls == TokenClass::Marker; }
};

/// Synthetic marker token; zero-width at `at`.
Token make_marker(MarkerKind kind, const Language& lang, std::uint32_t at = 0);

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Node {
  std::string_view kind;
  bool named = false;
  bool error = false;     // an ERROR node
  bool in_error = false;  // a proper descendant of an ERROR node
  NodeId parent = kNoNode;
  std::vector<NodeId> children;
  std::uint32_t leaf_begin = 0;
  std::uint32_t leaf_end = 0;

  bool is_leaf() const noexcept { return children.empty() && leaf_end == leaf_begin + 1; }
  std::uint32_t leaf_count() const noexcept { return leaf_end - leaf_begin; }
};

/// Concrete syntax tree whose leaves are every token of the source,
/// whitespace included, so leaf concatenation reproduces the input.
/// Immutable once built; nodes are stored in preorder.
class SyntaxTree {
 public:
  SyntaxTree() = default;

  const Language& language() const { return *language_; }
  NodeId root() const noexcept { return 0; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  std::span<const Node> nodes() const noexcept { return nodes_; }
  std::span<const Token> leaves() const noexcept { return leaves_; }
  const Token& leaf(std::size_t index) const { return leaves_.at(index); }
  std::size_t leaf_count() const noexcept { return leaves_.size(); }

  /// Index of the leaf node for leaf `index`.
  NodeId leaf_node(std::size_t index) const { return leaf_nodes_.at(index); }

  std::string text() const;
  std::string text(std::uint32_t leaf_begin, std::uint32_t leaf_end) const;

  /// New tree rooted at a synthetic node whose children are copies of the
  /// consecutive siblings in `run`.
  SyntaxTree extract_run(std::span<const NodeId> run) const;

  /// Copy of this tree with the consecutive siblings in `run` replaced by a
  /// single synthetic leaf.
  SyntaxTree replace_run(std::span<const NodeId> run, Token replacement) const;

 private:
  friend class TreeBuilder;

  const Language* language_ = nullptr;
  std::vector<Node> nodes_;
  std::vector<Token> leaves_;
  std::vector<NodeId> leaf_nodes_;
};

/// Parses `source` with the language's grammar. Syntax errors become ERROR
/// nodes; the tree still covers every byte.
/// Throws Error(EncodingError) for input that is not valid UTF-8.
SyntaxTree parse(std::string_view source, const Language& lang);

/// Hand-built tree description: a node with children is an inner node, a
/// node without children is a leaf holding `text`.
struct TreeShape {
  std::string kind;
  std::string text;
  std::vector<TreeShape> children;
};

/// Builds a tree from a shape without parsing. Leaf classes follow the
/// parser's rules: all-whitespace text is Whitespace, kinds ending in
/// "identifier" are Identifier, the rest Other.
SyntaxTree build_tree(const TreeShape& root, const Language& lang);

/// Identifier leaves in leaf order.
std::vector<std::pair<std::size_t, std::string>> identifier_occurrences(const SyntaxTree& tree);

/// Tab-expanded indentation of the line holding leaf `leaf_index`.
/// Throws Error(IndexOutOfRange).
std::uint32_t indentation_of(const SyntaxTree& tree, std::size_t leaf_index);

/// Width in columns of the leading spaces/tabs of `line`.
std::uint32_t leading_indent_columns(std::string_view line);

bool is_valid_utf8(std::string_view text) noexcept;

}  // namespace ctxsearch
