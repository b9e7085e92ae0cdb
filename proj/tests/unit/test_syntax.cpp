#include <gtest/gtest.h>

#include <tree_sitter/api.h>

#include <memory>

#include "ctxsearch/errors.hpp"
#include "ctxsearch/syntax.hpp"
#include "test_corpus.hpp"

extern "C" const TSLanguage* tree_sitter_c();

namespace ctxsearch {
namespace {

std::string leaf_text(const SyntaxTree& tree) {
  std::string out;
  for (const Token& t : tree.leaves()) out += t.text;
  return out;
}

void expect_leaf_ranges_consistent(const SyntaxTree& tree) {
  for (NodeId id = 0; id < tree.node_count(); ++id) {
    const Node& n = tree.node(id);
    if (n.children.empty()) {
      EXPECT_EQ(n.leaf_count(), 1u) << "leaf node " << id;
      continue;
    }
    EXPECT_EQ(tree.node(n.children.front()).leaf_begin, n.leaf_begin);
    EXPECT_EQ(tree.node(n.children.back()).leaf_end, n.leaf_end);
    for (std::size_t c = 1; c < n.children.size(); ++c) {
      EXPECT_EQ(tree.node(n.children[c - 1]).leaf_end, tree.node(n.children[c]).leaf_begin);
    }
    for (NodeId child : n.children) EXPECT_EQ(tree.node(child).parent, id);
  }
}

TEST(Parse, EmptyInputHasNoLeaves) {
  const SyntaxTree tree = parse("", language("java"));
  EXPECT_EQ(tree.leaf_count(), 0u);
}

TEST(Parse, PythonRoundTrip) {
  const SyntaxTree tree = parse("x = 1\n", language("python"));
  EXPECT_EQ(leaf_text(tree), "x = 1\n");
  EXPECT_EQ(tree.text(), "x = 1\n");
}

TEST(Parse, ForStatementMatchesReferenceParser) {
  const std::string source = "for(i=0;i<n;i++){f(i);}";
  // Reference: the byte range the parser library itself reports.
  std::unique_ptr<TSParser, decltype(&ts_parser_delete)> parser(ts_parser_new(), ts_parser_delete);
  ASSERT_TRUE(ts_parser_set_language(parser.get(), tree_sitter_c()));
  std::unique_ptr<TSTree, decltype(&ts_tree_delete)> ref(
      ts_parser_parse_string(parser.get(), nullptr, source.data(), static_cast<uint32_t>(source.size())),
      ts_tree_delete);
  TSNode root = ts_tree_root_node(ref.get());
  TSNode for_node = root;
  std::vector<TSNode> stack{root};
  bool found = false;
  while (!stack.empty() && !found) {
    TSNode n = stack.back();
    stack.pop_back();
    if (std::string(ts_node_type(n)) == "for_statement") {
      for_node = n;
      found = true;
    }
    for (uint32_t i = ts_node_child_count(n); i-- > 0;) stack.push_back(ts_node_child(n, i));
  }
  ASSERT_TRUE(found);
  const uint32_t ref_begin = ts_node_start_byte(for_node);
  const uint32_t ref_end = ts_node_end_byte(for_node);

  const SyntaxTree tree = parse(source, language("c"));
  const Node* ours = nullptr;
  for (const Node& n : tree.nodes()) {
    if (n.kind == "for_statement") {
      ours = &n;
      break;
    }
  }
  ASSERT_NE(ours, nullptr);
  EXPECT_EQ(tree.leaf(ours->leaf_begin).byte_begin, ref_begin);
  EXPECT_EQ(tree.leaf(ours->leaf_end - 1).byte_end, ref_end);
  EXPECT_EQ(tree.text(ours->leaf_begin, ours->leaf_end), source.substr(ref_begin, ref_end - ref_begin));
  expect_leaf_ranges_consistent(tree);
}

TEST(Parse, ConsecutiveTokensAreOrderedAndContiguous) {
  const std::string source = "int main(void) {\n\treturn 0; /* done */\n}\n";
  const SyntaxTree tree = parse(source, language("c"));
  std::uint32_t at = 0;
  for (const Token& t : tree.leaves()) {
    EXPECT_EQ(t.byte_begin, at);
    EXPECT_EQ(t.byte_end - t.byte_begin, t.text.size());
    at = t.byte_end;
  }
  EXPECT_EQ(at, source.size());
}

TEST(Parse, SyntaxErrorsStillRoundTrip) {
  const std::string source = "class A { void f( { int x = ; } \n";
  const SyntaxTree tree = parse(source, language("java"));
  EXPECT_EQ(tree.text(), source);
  bool has_error = false;
  for (const Node& n : tree.nodes()) has_error |= n.error;
  EXPECT_TRUE(has_error);
  expect_leaf_ranges_consistent(tree);
}

TEST(Parse, RejectsInvalidUtf8) {
  try {
    parse("x = '\xff\xfe'\n", language("python"));
    FAIL() << "expected EncodingError";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EncodingError);
  }
}

TEST(Parse, UnknownLanguageIsRejected) {
  try {
    language("cobol");
    FAIL() << "expected UnsupportedLanguage";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedLanguage);
  }
}

TEST(Parse, WhitespaceGapsAreLeaves) {
  const SyntaxTree tree = parse("a  =\tb\n", language("python"));
  bool saw_ws = false;
  for (const Token& t : tree.leaves()) {
    if (t.is_whitespace()) {
      saw_ws = true;
      EXPECT_EQ(t.text.find_first_not_of(" \t\r\n"), std::string::npos);
    }
  }
  EXPECT_TRUE(saw_ws);
}

TEST(Parse, WholeCorpusRoundTripsWithConsistentRanges) {
  const auto corpus = testing::load_test_corpus();
  ASSERT_GE(corpus.size(), 100u);
  for (const auto& file : corpus) {
    const SyntaxTree tree = parse(file.content, language(file.language));
    ASSERT_EQ(leaf_text(tree), file.content) << file.relative;
    expect_leaf_ranges_consistent(tree);
  }
}

TEST(Identifiers, EnumerationMatchesBruteScan) {
  const SyntaxTree tree = parse("x = x + y", language("python"));
  const auto occ = identifier_occurrences(tree);
  std::vector<std::pair<std::size_t, std::string>> brute;
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    if (tree.leaf(i).is_identifier()) brute.emplace_back(i, tree.leaf(i).text);
  }
  EXPECT_EQ(occ, brute);
  ASSERT_EQ(occ.size(), 3u);
  EXPECT_EQ(occ[0].second, "x");
  EXPECT_EQ(occ[1].second, "x");
  EXPECT_EQ(occ[2].second, "y");
}

TEST(Identifiers, NumbersOnlyHaveNone) {
  EXPECT_TRUE(identifier_occurrences(parse("42 + 7", language("python"))).empty());
}

TEST(Identifiers, DuplicateNamesAreAllReported) {
  const auto occ = identifier_occurrences(parse("foo(foo)", language("javascript")));
  ASSERT_EQ(occ.size(), 2u);
  EXPECT_EQ(occ[0].second, "foo");
  EXPECT_EQ(occ[1].second, "foo");
}

TEST(Identifiers, MethodNamesAndVariablesAreNotDistinguished) {
  const auto occ = identifier_occurrences(parse("class A { void run() { run(); } }", language("java")));
  std::size_t runs = 0;
  for (const auto& [i, text] : occ) runs += text == "run";
  EXPECT_EQ(runs, 2u);
}

std::size_t first_leaf_with_text(const SyntaxTree& tree, const std::string& text) {
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    if (tree.leaf(i).text == text) return i;
  }
  return tree.leaf_count();
}

TEST(Indentation, CountsLeadingSpaces) {
  const SyntaxTree tree = parse("if a:\n        x = 1\n", language("python"));
  EXPECT_EQ(indentation_of(tree, first_leaf_with_text(tree, "x")), 8u);
  EXPECT_EQ(indentation_of(tree, first_leaf_with_text(tree, "if")), 0u);
}

TEST(Indentation, TabsAdvanceToMultiplesOfFour) {
  const SyntaxTree tree = parse("if a:\n\tx = 1\n", language("python"));
  EXPECT_EQ(indentation_of(tree, first_leaf_with_text(tree, "x")), 4u);
  EXPECT_EQ(leading_indent_columns("  \tx"), 4u);
  EXPECT_EQ(leading_indent_columns("\t  x"), 6u);
}

TEST(Indentation, OutOfRangeLeafThrows) {
  const SyntaxTree tree = parse("x\n", language("python"));
  try {
    indentation_of(tree, 99);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IndexOutOfRange);
  }
}

TEST(Markers, DistinctAndAbsentFromCorpus) {
  const auto corpus = testing::load_test_corpus();
  for (const std::string& name : supported_languages()) {
    const Language& l = language(name);
    EXPECT_NE(l.cls_token, l.mask_token);
    EXPECT_NE(l.cls_token, l.fold_token);
    EXPECT_NE(l.mask_token, l.fold_token);
  }
  for (const auto& file : corpus) {
    const SyntaxTree tree = parse(file.content, language(file.language));
    const Language& l = language(file.language);
    for (const Token& t : tree.leaves()) {
      ASSERT_NE(t.text, l.cls_token);
      ASSERT_NE(t.text, l.mask_token);
      ASSERT_NE(t.text, l.fold_token);
    }
    EXPECT_FALSE(contains_marker_text(file.content)) << file.relative;
  }
}

TEST(Registry, ConfigTextOverridesMapping) {
  GrammarRegistry registry = GrammarRegistry::defaults();
  EXPECT_EQ(registry.grammar_for("a/b.py"), "python");
  EXPECT_FALSE(registry.grammar_for("a/b.rs").has_value());
  registry.load_config_text("# comment\npyw=python\nH = c\n");
  EXPECT_EQ(registry.grammar_for("x.pyw"), "python");
  EXPECT_EQ(registry.grammar_for("x.H"), "c");
  try {
    registry.load_config_text("rs=rust\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidConfig);
  }
}

TEST(BuildTree, ShapesBecomeTrees) {
  const TreeShape shape{"root", "",
                        {{"a", "", {{"identifier", "x", {}}, {"ws", " ", {}}}}, {"op", "+", {}}}};
  const SyntaxTree tree = build_tree(shape, language("java"));
  EXPECT_EQ(tree.text(), "x +");
  EXPECT_EQ(tree.leaf_count(), 3u);
  EXPECT_TRUE(tree.leaf(0).is_identifier());
  EXPECT_TRUE(tree.leaf(1).is_whitespace());
  expect_leaf_ranges_consistent(tree);
}

}  // namespace
}  // namespace ctxsearch
