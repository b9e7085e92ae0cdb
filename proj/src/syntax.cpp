#include "ctxsearch/syntax.hpp"

#include <tree_sitter/api.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>

#include "ctxsearch/errors.hpp"

extern "C" {
const TSLanguage* tree_sitter_c(void);
const TSLanguage* tree_sitter_java(void);
const TSLanguage* tree_sitter_javascript(void);
const TSLanguage* tree_sitter_python(void);
}

namespace ctxsearch {

namespace {

struct GrammarEntry {
  Language language;
  const TSLanguage* (*factory)();
};

Language make_language(std::string name) {
  Language lang;
  lang.cls_token = "<|cls:" + name + "|>";
  lang.mask_token = "<|mask|>";
  lang.fold_token = "<|fold|>";
  lang.name = std::move(name);
  return lang;
}

const std::vector<GrammarEntry>& grammars() {
  static const std::vector<GrammarEntry> entries = {
      {make_language("c"), tree_sitter_c},
      {make_language("java"), tree_sitter_java},
      {make_language("javascript"), tree_sitter_javascript},
      {make_language("python"), tree_sitter_python},
  };
  return entries;
}

const GrammarEntry& grammar_entry(std::string_view name) {
  for (const auto& entry : grammars()) {
    if (entry.language.name == name) return entry;
  }
  throw Error(ErrorCode::UnsupportedLanguage, std::string(name));
}

// Node kinds kept whole as one opaque leaf even when the grammar gives them
// children (string fragments, escapes, interpolations).
bool is_atomic_kind(std::string_view kind) {
  if (kind.find("string") != std::string_view::npos) return true;
  if (kind.find("comment") != std::string_view::npos) return true;
  return kind == "character_literal" || kind == "char_literal" || kind == "regex" ||
         kind == "text_block" || kind == "jsx_text";
}

bool is_identifier_kind(std::string_view kind) {
  constexpr std::string_view suffix = "identifier";
  return kind.size() >= suffix.size() && kind.substr(kind.size() - suffix.size()) == suffix;
}

bool all_whitespace(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  });
}

struct ParserDeleter {
  void operator()(TSParser* p) const { ts_parser_delete(p); }
};
struct TreeDeleter {
  void operator()(TSTree* t) const { ts_tree_delete(t); }
};
struct CursorGuard {
  TSTreeCursor cursor;
  explicit CursorGuard(TSNode node) : cursor(ts_tree_cursor_new(node)) {}
  ~CursorGuard() { ts_tree_cursor_delete(&cursor); }
  CursorGuard(const CursorGuard&) = delete;
  CursorGuard& operator=(const CursorGuard&) = delete;
};

}  // namespace

const Language& language(std::string_view name) { return grammar_entry(name).language; }

std::vector<std::string> supported_languages() {
  std::vector<std::string> names;
  for (const auto& entry : grammars()) names.push_back(entry.language.name);
  return names;
}

std::string grammar_versions() {
  std::ostringstream out;
  bool first = true;
  for (const auto& entry : grammars()) {
    if (!first) out << ' ';
    first = false;
    out << entry.language.name << "=abi" << ts_language_abi_version(entry.factory());
  }
  return out.str();
}

bool contains_marker_text(std::string_view text) {
  for (const auto& entry : grammars()) {
    const Language& lang = entry.language;
    for (const std::string* marker : {&lang.cls_token, &lang.mask_token, &lang.fold_token}) {
      if (text.find(*marker) != std::string_view::npos) return true;
    }
  }
  return false;
}

Token make_marker(MarkerKind kind, const Language& lang, std::uint32_t at) {
  Token token;
  token.cls = TokenClass::Marker;
  token.marker = kind;
  token.byte_begin = at;
  token.byte_end = at;
  switch (kind) {
    case MarkerKind::Cls:
      token.text = lang.cls_token;
      token.kind = "cls";
      break;
    case MarkerKind::Mask:
      token.text = lang.mask_token;
      token.kind = "mask";
      break;
    case MarkerKind::Fold:
      token.text = lang.fold_token;
      token.kind = "fold";
      break;
    case MarkerKind::None:
      throw Error(ErrorCode::InvalidConfig, "marker kind None");
  }
  return token;
}

// ---------------------------------------------------------------------------
// GrammarRegistry

GrammarRegistry GrammarRegistry::defaults() {
  GrammarRegistry registry;
  registry.ext_to_grammar_ = {
      {"c", "c"},           {"h", "c"},           {"java", "java"},
      {"js", "javascript"}, {"mjs", "javascript"}, {"cjs", "javascript"},
      {"py", "python"},
  };
  return registry;
}

void GrammarRegistry::load_config_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig,
                  "extension config line " + std::to_string(line_no) + ": expected ext=grammar");
    }
    std::string ext = trim(line.substr(0, eq));
    std::string grammar = trim(line.substr(eq + 1));
    if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext.empty()) {
      throw Error(ErrorCode::InvalidConfig,
                  "extension config line " + std::to_string(line_no) + ": empty extension");
    }
    try {
      (void)language(grammar);
    } catch (const Error&) {
      throw Error(ErrorCode::InvalidConfig, "extension config line " + std::to_string(line_no) +
                                                ": unknown grammar '" + grammar + "'");
    }
    ext_to_grammar_[ext] = grammar;
  }
}

void GrammarRegistry::load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  load_config_text(buffer.str());
}

std::optional<std::string> GrammarRegistry::grammar_for(const std::filesystem::path& path) const {
  std::string ext = path.extension().string();
  if (ext.empty()) return std::nullopt;
  ext.erase(0, 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto it = ext_to_grammar_.find(ext);
  if (it == ext_to_grammar_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Tree construction

class TreeBuilder {
 public:
  TreeBuilder(std::string_view source, const Language& lang) : source_(source) {
    tree_.language_ = &lang;
  }

  SyntaxTree build(TSNode root) {
    const NodeId root_id = add_node(ts_node_type(root), true, kNoNode);
    tree_.nodes_[root_id].error = ts_node_is_error(root);
    tree_.nodes_[root_id].leaf_begin = 0;
    build_children(root, root_id, static_cast<std::uint32_t>(source_.size()),
                   tree_.nodes_[root_id].error);
    tree_.nodes_[root_id].leaf_end = static_cast<std::uint32_t>(tree_.leaves_.size());
    assign_positions();
    return std::move(tree_);
  }

  // Copies a subtree of `from` under `parent` in `to`, remapping leaf ranges.
  static void copy_subtree(const SyntaxTree& from, NodeId id, SyntaxTree& to, NodeId parent) {
    const Node& src = from.nodes_[id];
    const NodeId copy = static_cast<NodeId>(to.nodes_.size());
    Node node;
    node.kind = src.kind;
    node.named = src.named;
    node.error = src.error;
    node.in_error = src.in_error;
    node.parent = parent;
    node.leaf_begin = static_cast<std::uint32_t>(to.leaves_.size());
    to.nodes_.push_back(std::move(node));
    if (parent != kNoNode) to.nodes_[parent].children.push_back(copy);
    if (src.is_leaf()) {
      to.leaves_.push_back(from.leaves_[src.leaf_begin]);
      to.leaf_nodes_.push_back(copy);
    } else {
      for (NodeId child : src.children) copy_subtree(from, child, to, copy);
    }
    to.nodes_[copy].leaf_end = static_cast<std::uint32_t>(to.leaves_.size());
  }

  static NodeId add_leaf_node(SyntaxTree& to, NodeId parent, Token token) {
    const NodeId id = static_cast<NodeId>(to.nodes_.size());
    Node node;
    node.kind = token.kind;
    node.named = token.cls != TokenClass::Whitespace;
    node.parent = parent;
    node.leaf_begin = static_cast<std::uint32_t>(to.leaves_.size());
    node.leaf_end = node.leaf_begin + 1;
    to.nodes_.push_back(std::move(node));
    if (parent != kNoNode) to.nodes_[parent].children.push_back(id);
    to.leaves_.push_back(std::move(token));
    to.leaf_nodes_.push_back(id);
    return id;
  }

  static NodeId add_root(SyntaxTree& to, std::string_view kind) {
    Node node;
    node.kind = kind;
    node.named = true;
    to.nodes_.push_back(std::move(node));
    return 0;
  }

  SyntaxTree build_shape(const TreeShape& root) {
    add_shape(root, kNoNode);
    assign_positions();
    return std::move(tree_);
  }

 private:
  static std::string_view intern(const std::string& kind) {
    static std::mutex mutex;
    static std::set<std::string, std::less<>> pool;
    const std::lock_guard<std::mutex> lock(mutex);
    return *pool.insert(kind).first;
  }

  void add_shape(const TreeShape& shape, NodeId parent) {
    const std::string_view kind = intern(shape.kind);
    if (shape.children.empty()) {
      const auto end = static_cast<std::uint32_t>(pos_ + shape.text.size());
      TokenClass cls = TokenClass::Other;
      if (all_whitespace(shape.text)) {
        cls = TokenClass::Whitespace;
      } else if (is_identifier_kind(kind)) {
        cls = TokenClass::Identifier;
      }
      emit_token(parent, end, kind, cls, cls != TokenClass::Whitespace);
      return;
    }
    const NodeId id = add_node(kind, true, parent);
    for (const TreeShape& child : shape.children) add_shape(child, id);
    tree_.nodes_[id].leaf_end = static_cast<std::uint32_t>(tree_.leaves_.size());
  }

  NodeId add_node(std::string_view kind, bool named, NodeId parent) {
    const NodeId id = static_cast<NodeId>(tree_.nodes_.size());
    Node node;
    node.kind = kind;
    node.named = named;
    node.parent = parent;
    node.leaf_begin = static_cast<std::uint32_t>(tree_.leaves_.size());
    node.leaf_end = node.leaf_begin;
    tree_.nodes_.push_back(std::move(node));
    if (parent != kNoNode) tree_.nodes_[parent].children.push_back(id);
    return id;
  }

  void emit_token(NodeId parent, std::uint32_t end, std::string_view kind, TokenClass cls,
                  bool named) {
    if (end <= pos_) return;
    Token token;
    token.byte_begin = pos_;
    token.byte_end = end;
    token.text = std::string(source_.substr(pos_, end - pos_));
    token.kind = kind;
    token.cls = cls;
    pos_ = end;
    const NodeId id = add_node(kind, named, parent);
    Node& node = tree_.nodes_[id];
    node.in_error = parent != kNoNode &&
                    (tree_.nodes_[parent].error || tree_.nodes_[parent].in_error);
    node.leaf_end = node.leaf_begin + 1;
    tree_.leaves_.push_back(std::move(token));
    tree_.leaf_nodes_.push_back(id);
  }

  void emit_gap(NodeId parent, std::uint32_t end) {
    if (end <= pos_) return;
    const std::string_view gap = source_.substr(pos_, end - pos_);
    if (all_whitespace(gap)) {
      emit_token(parent, end, "whitespace", TokenClass::Whitespace, false);
    } else {
      emit_token(parent, end, "text", TokenClass::Literal, true);
    }
  }

  void build_node(TSNode ts, NodeId parent, bool parent_in_error) {
    const std::uint32_t begin = ts_node_start_byte(ts);
    const std::uint32_t end = ts_node_end_byte(ts);
    if (end <= begin || end <= pos_) return;
    emit_gap(parent, begin);
    const std::string_view kind = ts_node_type(ts);
    const bool named = ts_node_is_named(ts);
    if (ts_node_child_count(ts) == 0 || (named && is_atomic_kind(kind))) {
      TokenClass cls = TokenClass::Other;
      if (named && is_atomic_kind(kind)) {
        cls = TokenClass::Literal;
      } else if (named && is_identifier_kind(kind)) {
        cls = TokenClass::Identifier;
      }
      emit_token(parent, end, kind, cls, named);
      return;
    }
    const NodeId id = add_node(kind, named, parent);
    tree_.nodes_[id].error = ts_node_is_error(ts);
    tree_.nodes_[id].in_error = parent_in_error;
    build_children(ts, id, end, parent_in_error || tree_.nodes_[id].error);
    Node& node = tree_.nodes_[id];
    node.leaf_end = static_cast<std::uint32_t>(tree_.leaves_.size());
    if (node.leaf_end == node.leaf_begin) {
      // Every child was zero-width; drop the node.
      tree_.nodes_[parent].children.pop_back();
      tree_.nodes_.pop_back();
    }
  }

  void build_children(TSNode ts, NodeId id, std::uint32_t end, bool in_error) {
    CursorGuard guard(ts);
    if (ts_tree_cursor_goto_first_child(&guard.cursor)) {
      do {
        build_node(ts_tree_cursor_current_node(&guard.cursor), id, in_error);
      } while (ts_tree_cursor_goto_next_sibling(&guard.cursor));
    }
    emit_gap(id, end);
  }

  void assign_positions() {
    // Line starts and per-line indentation of the original source.
    std::vector<std::uint32_t> line_starts{0};
    for (std::uint32_t i = 0; i < source_.size(); ++i) {
      if (source_[i] == '\n') line_starts.push_back(i + 1);
    }
    std::vector<std::uint32_t> indents(line_starts.size());
    for (std::size_t l = 0; l < line_starts.size(); ++l) {
      const std::uint32_t b = line_starts[l];
      const std::uint32_t e = l + 1 < line_starts.size() ? line_starts[l + 1]
                                                         : static_cast<std::uint32_t>(source_.size());
      indents[l] = leading_indent_columns(source_.substr(b, e - b));
    }
    for (Token& token : tree_.leaves_) {
      const auto it = std::upper_bound(line_starts.begin(), line_starts.end(), token.byte_begin);
      const auto line = static_cast<std::uint32_t>(std::distance(line_starts.begin(), it) - 1);
      token.line = line;
      token.column = token.byte_begin - line_starts[line];
      token.line_indent = indents[line];
    }
  }

  std::string_view source_;
  SyntaxTree tree_;
  std::uint32_t pos_ = 0;
};

SyntaxTree build_tree(const TreeShape& root, const Language& lang) {
  std::string text;
  const auto collect = [&](const auto& self, const TreeShape& shape) -> void {
    if (shape.children.empty()) text += shape.text;
    for (const TreeShape& child : shape.children) self(self, child);
  };
  collect(collect, root);
  TreeBuilder builder(text, language(lang.name));
  return builder.build_shape(root);
}

SyntaxTree parse(std::string_view source, const Language& lang) {
  if (!is_valid_utf8(source)) {
    throw Error(ErrorCode::EncodingError, "input is not valid UTF-8");
  }
  if (source.size() > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw Error(ErrorCode::EncodingError, "input too large");
  }
  const GrammarEntry& entry = grammar_entry(lang.name);
  std::unique_ptr<TSParser, ParserDeleter> parser(ts_parser_new());
  if (!ts_parser_set_language(parser.get(), entry.factory())) {
    throw Error(ErrorCode::UnsupportedLanguage, lang.name + ": incompatible grammar ABI");
  }
  std::unique_ptr<TSTree, TreeDeleter> ts_tree(ts_parser_parse_string(
      parser.get(), nullptr, source.data(), static_cast<std::uint32_t>(source.size())));
  if (!ts_tree) throw Error(ErrorCode::EncodingError, "parser returned no tree");
  TreeBuilder builder(source, entry.language);
  return builder.build(ts_tree_root_node(ts_tree.get()));
}

// ---------------------------------------------------------------------------
// SyntaxTree

std::string SyntaxTree::text() const {
  return text(0, static_cast<std::uint32_t>(leaves_.size()));
}

std::string SyntaxTree::text(std::uint32_t leaf_begin, std::uint32_t leaf_end) const {
  std::string out;
  for (std::uint32_t i = leaf_begin; i < leaf_end && i < leaves_.size(); ++i) {
    out += leaves_[i].text;
  }
  return out;
}

SyntaxTree SyntaxTree::extract_run(std::span<const NodeId> run) const {
  SyntaxTree out;
  out.language_ = language_;
  TreeBuilder::add_root(out, "segment");
  for (NodeId id : run) TreeBuilder::copy_subtree(*this, id, out, 0);
  out.nodes_[0].leaf_end = static_cast<std::uint32_t>(out.leaves_.size());
  return out;
}

SyntaxTree SyntaxTree::replace_run(std::span<const NodeId> run, Token replacement) const {
  if (run.empty()) throw Error(ErrorCode::SpanMismatch, "empty run");
  const NodeId parent = nodes_.at(run.front()).parent;
  if (parent == kNoNode) throw Error(ErrorCode::SpanMismatch, "cannot replace the root");

  SyntaxTree out;
  out.language_ = language_;
  // Preorder copy that swaps the run for the replacement leaf.
  struct Copier {
    const SyntaxTree& from;
    SyntaxTree& to;
    std::span<const NodeId> run;
    NodeId run_parent;
    Token& replacement;

    void copy(NodeId id, NodeId new_parent) {
      const Node& src = from.nodes_[id];
      const NodeId copy_id = static_cast<NodeId>(to.nodes_.size());
      Node node;
      node.kind = src.kind;
      node.named = src.named;
      node.error = src.error;
      node.in_error = src.in_error;
      node.parent = new_parent;
      node.leaf_begin = static_cast<std::uint32_t>(to.leaves_.size());
      to.nodes_.push_back(std::move(node));
      if (new_parent != kNoNode) to.nodes_[new_parent].children.push_back(copy_id);
      if (src.is_leaf()) {
        to.leaves_.push_back(from.leaves_[src.leaf_begin]);
        to.leaf_nodes_.push_back(copy_id);
      } else {
        const auto& kids = src.children;
        for (std::size_t k = 0; k < kids.size(); ++k) {
          if (id == run_parent && kids[k] == run.front()) {
            Token token = replacement;
            token.line = from.leaves_[from.nodes_[run.front()].leaf_begin].line;
            token.column = from.leaves_[from.nodes_[run.front()].leaf_begin].column;
            token.line_indent = from.leaves_[from.nodes_[run.front()].leaf_begin].line_indent;
            const NodeId leaf = TreeBuilder::add_leaf_node(to, copy_id, std::move(token));
            to.nodes_[leaf].in_error = src.error || src.in_error;
            k += run.size() - 1;
            continue;
          }
          copy(kids[k], copy_id);
        }
      }
      to.nodes_[copy_id].leaf_end = static_cast<std::uint32_t>(to.leaves_.size());
    }
  };
  Copier copier{*this, out, run, parent, replacement};
  copier.copy(0, kNoNode);
  return out;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<std::pair<std::size_t, std::string>> identifier_occurrences(const SyntaxTree& tree) {
  std::vector<std::pair<std::size_t, std::string>> out;
  const auto leaves = tree.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (leaves[i].is_identifier()) out.emplace_back(i, leaves[i].text);
  }
  return out;
}

std::uint32_t indentation_of(const SyntaxTree& tree, std::size_t leaf_index) {
  if (leaf_index >= tree.leaf_count()) {
    throw Error(ErrorCode::IndexOutOfRange, "leaf index " + std::to_string(leaf_index) +
                                                " >= " + std::to_string(tree.leaf_count()));
  }
  return tree.leaf(leaf_index).line_indent;
}

std::uint32_t leading_indent_columns(std::string_view line) {
  std::uint32_t col = 0;
  for (char c : line) {
    if (c == ' ') {
      ++col;
    } else if (c == '\t') {
      col = (col / kTabWidth + 1) * kTabWidth;
    } else {
      break;
    }
  }
  return col;
}

bool is_valid_utf8(std::string_view text) noexcept {
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned char c = s[i];
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((s[i + k] & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (s[i + k] & 0x3F);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

}  // namespace ctxsearch
