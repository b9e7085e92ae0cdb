#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ctxsearch/syntax.hpp"

namespace ctxsearch::testing {

struct CorpusEntry {
  std::filesystem::path path;
  std::string relative;
  std::string language;
  std::string content;
};

inline std::filesystem::path test_corpus_root() { return CTXSEARCH_TEST_CORPUS; }

/// Every bundled source file with a known grammar, in path order.
inline std::vector<CorpusEntry> load_test_corpus() {
  const auto registry = GrammarRegistry::defaults();
  std::vector<CorpusEntry> out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(test_corpus_root())) {
    if (!entry.is_regular_file()) continue;
    const auto grammar = registry.grammar_for(entry.path());
    if (!grammar) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out.push_back({entry.path(), std::filesystem::relative(entry.path(), test_corpus_root()).generic_string(),
                   *grammar, std::move(ss).str()});
  }
  std::sort(out.begin(), out.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.relative < b.relative; });
  return out;
}

}  // namespace ctxsearch::testing
