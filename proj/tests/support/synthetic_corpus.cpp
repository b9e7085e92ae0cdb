#include "synthetic_corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "ctxsearch/random.hpp"
#include "ctxsearch/syntax.hpp"

namespace ctxsearch::testing {

namespace {

// Template lines start with two spaces per nesting level relative to the
// method body. Placeholders {a}..{f} are identifiers, {fn} the method name.
struct Template {
  const char* returns;
  const char* params;
  std::vector<const char*> pre;
  std::vector<const char*> core;
  std::vector<const char*> post;
  const char* call;                  // arguments of a sample invocation
  std::vector<const char*> labels;   // synonyms printed next to the result
};

const std::vector<Template>& templates() {
  static const std::vector<Template> all = {
      {"int", "int[] {a}",
       {"int {b} = 0;"},
       {"for (int {c} = 0; {c} < {a}.length; {c}++) {",
        "  {b} += {a}[{c}] * {a}[{c}];",
        "}"},
       {"return {b};"},
       "new int[] {3, 1, 4}", {"sum of squares", "squared total", "square sum"}},
      {"String", "String {a}",
       {"StringBuilder {b} = new StringBuilder();"},
       {"for (int {c} = {a}.length() - 1; {c} >= 0; {c}--) {",
        "  {b}.append({a}.charAt({c}));",
        "}"},
       {"return {b}.toString();"},
       "\"hello\"", {"reversed", "reverse", "backwards"}},
      {"int", "String {a}",
       {"int {b} = 0;", "String {d} = \"aeiouAEIOU\";"},
       {"for (char {c} : {a}.toCharArray()) {",
        "  if ({d}.indexOf({c}) >= 0) {",
        "    {b}++;",
        "  }",
        "}"},
       {"return {b};"},
       "\"education\"", {"vowels", "vowel count", "vowel total"}},
      {"int", "int[] {a}",
       {"if ({a}.length == 0) {", "  throw new IllegalArgumentException(\"empty\");", "}",
        "int {b} = {a}[0];"},
       {"for (int {c} = 1; {c} < {a}.length; {c}++) {",
        "  {b} = Math.max({b}, {a}[{c}]);",
        "}"},
       {"return {b};"},
       "new int[] {7, 2, 9}", {"maximum", "max", "largest"}},
      {"long", "int {a}",
       {"long {b} = 1L;"},
       {"for (int {c} = 2; {c} <= {a}; {c}++) {",
        "  {b} *= {c};",
        "}"},
       {"return {b};"},
       "10", {"factorial", "fact", "product up to"}},
      {"long", "int {a}",
       {"long {b} = 0L;", "long {c} = 1L;"},
       {"for (int {d} = 0; {d} < {a}; {d}++) {",
        "  long {e} = {b} + {c};",
        "  {b} = {c};",
        "  {c} = {e};",
        "}"},
       {"return {b};"},
       "20", {"fibonacci", "fib", "fibo"}},
      {"boolean", "String {a}",
       {"int {b} = 0;", "int {c} = {a}.length() - 1;"},
       {"while ({b} < {c}) {",
        "  if ({a}.charAt({b}) != {a}.charAt({c})) {",
        "    return false;",
        "  }",
        "  {b}++;",
        "  {c}--;",
        "}"},
       {"return true;"},
       "\"racecar\"", {"palindrome", "is palindrome", "mirrored"}},
      {"int", "int[] {a}, int {b}",
       {"int {c} = 0;", "int {d} = {a}.length - 1;"},
       {"while ({c} <= {d}) {",
        "  int {e} = ({c} + {d}) >>> 1;",
        "  if ({a}[{e}] < {b}) {",
        "    {c} = {e} + 1;",
        "  } else if ({a}[{e}] > {b}) {",
        "    {d} = {e} - 1;",
        "  } else {",
        "    return {e};",
        "  }",
        "}"},
       {"return -1;"},
       "new int[] {1, 3, 5, 7}, 5", {"found at", "search index", "position"}},
      {"void", "int[] {a}",
       {"int {b} = {a}.length;"},
       {"for (int {c} = 0; {c} < {b} - 1; {c}++) {",
        "  for (int {d} = 0; {d} < {b} - {c} - 1; {d}++) {",
        "    if ({a}[{d}] > {a}[{d} + 1]) {",
        "      int {e} = {a}[{d}];",
        "      {a}[{d}] = {a}[{d} + 1];",
        "      {a}[{d} + 1] = {e};",
        "    }",
        "  }",
        "}"},
       {},
       "new int[] {5, 2, 8, 1}", {"sorted", "sort", "ordered"}},
      {"int", "int {a}, int {b}",
       {"{a} = Math.abs({a});", "{b} = Math.abs({b});"},
       {"while ({b} != 0) {",
        "  int {c} = {a} % {b};",
        "  {a} = {b};",
        "  {b} = {c};",
        "}"},
       {"return {a};"},
       "48, 18", {"gcd", "common divisor", "greatest divisor"}},
      {"boolean", "int {a}",
       {"if ({a} < 2) {", "  return false;", "}"},
       {"for (int {b} = 2; (long) {b} * {b} <= {a}; {b}++) {",
        "  if ({a} % {b} == 0) {",
        "    return false;",
        "  }",
        "}"},
       {"return true;"},
       "97", {"prime", "is prime", "primality"}},
      {"Map<String, Integer>", "String {a}",
       {"Map<String, Integer> {b} = new HashMap<>();"},
       {"for (String {c} : {a}.trim().split(\"\\\\s+\")) {",
        "  if (!{c}.isEmpty()) {",
        "    {b}.merge({c}.toLowerCase(), 1, Integer::sum);",
        "  }",
        "}"},
       {"return {b};"},
       "\"to be or not to be\"", {"word counts", "frequencies", "histogram"}},
      {"List<String>", "String {a}",
       {"List<String> {b} = new ArrayList<>();"},
       {"try (BufferedReader {c} = new BufferedReader(new FileReader({a}))) {",
        "  String {d};",
        "  while (({d} = {c}.readLine()) != null) {",
        "    {b}.add({d});",
        "  }",
        "} catch (IOException {e}) {",
        "  throw new UncheckedIOException({e});",
        "}"},
       {"return {b};"},
       "\"input.txt\"", {"lines", "file lines", "contents"}},
      {"double", "double[] {a}",
       {"if ({a}.length == 0) {", "  return 0.0;", "}", "double {b} = 0.0;"},
       {"for (double {c} : {a}) {",
        "  {b} += {c};",
        "}",
        "{b} /= {a}.length;"},
       {"return {b};"},
       "new double[] {1.5, 2.5}", {"mean", "average", "avg"}},
      {"int[][]", "int[][] {a}",
       {"int {b} = {a}.length;", "int {c} = {a}[0].length;"},
       {"int[][] {d} = new int[{c}][{b}];",
        "for (int {e} = 0; {e} < {b}; {e}++) {",
        "  for (int {f} = 0; {f} < {c}; {f}++) {",
        "    {d}[{f}][{e}] = {a}[{e}][{f}];",
        "  }",
        "}"},
       {"return {d};"},
       "new int[][] {{1, 2}, {3, 4}}", {"transposed", "transpose", "flipped"}},
      {"List<Integer>", "List<Integer> {a}",
       {"Set<Integer> {b} = new HashSet<>();", "List<Integer> {c} = new ArrayList<>();"},
       {"for (Integer {d} : {a}) {",
        "  if ({b}.add({d})) {",
        "    {c}.add({d});",
        "  }",
        "}"},
       {"return {c};"},
       "Arrays.asList(1, 2, 2, 3)", {"unique", "distinct", "deduplicated"}},
      {"String", "List<String> {a}",
       {"StringBuilder {b} = new StringBuilder();"},
       {"for (String {c} : {a}) {",
        "  if ({b}.length() > 0) {",
        "    {b}.append(\", \");",
        "  }",
        "  {b}.append({c});",
        "}"},
       {"return {b}.toString();"},
       "Arrays.asList(\"a\", \"b\")", {"joined", "csv", "join"}},
      {"long", "long {a}, int {b}",
       {"long {c} = 1L;"},
       {"while ({b} > 0) {",
        "  if (({b} & 1) == 1) {",
        "    {c} *= {a};",
        "  }",
        "  {a} *= {a};",
        "  {b} >>= 1;",
        "}"},
       {"return {c};"},
       "2L, 10", {"power", "pow", "exponent"}},
      {"void", "int {a}, int {b}",
       {"System.out.println(\"C     F\");"},
       {"for (int {c} = {a}; {c} <= {b}; {c} += 10) {",
        "  double {d} = {c} * 9.0 / 5.0 + 32.0;",
        "  System.out.printf(\"%4d %6.1f%n\", {c}, {d});",
        "}"},
       {},
       "0, 100", {"table", "conversion", "temperatures"}},
      {"int", "String {a}, char {b}",
       {"int {c} = 0;"},
       {"for (char {d} : {a}.toCharArray()) {",
        "  if ({d} == {b}) {",
        "    {c}++;",
        "  }",
        "}"},
       {"return {c};"},
       "\"banana\", 'a'", {"occurrences", "char count", "frequency"}},
  };
  return all;
}

// Generic members mixed into every file; they carry no functionality signal.
const std::vector<std::vector<const char*>>& fillers() {
  static const std::vector<std::vector<const char*>> all = {
      {"private int {a};", "", "public int {fn}() {", "  return {a};", "}"},
      {"public void {fn}(int {a}) {", "  this.{b} = {a};", "}", "", "private int {b};"},
      {"@Override", "public String toString() {", "  return \"{Cls}[\" + {a} + \"]\";", "}", "",
       "private final String {a} = \"{Cls}\";"},
      {"private static void {fn}(String {a}) {", "  System.err.println(\"[{Cls}] \" + {a});", "}"},
      {"private static final int {a} = 16;"},
  };
  return all;
}

const std::vector<std::string>& name_pool() {
  static const std::vector<std::string> names = {
      "a",     "b",      "c",     "n",      "m",     "x",     "y",     "z",   "i",     "j",
      "k",     "p",      "q",     "s",      "t",     "val",   "item",  "cnt", "tmp",   "res",
      "acc",   "idx",    "cur",   "node",   "buf",   "data",  "total", "lo",  "hi",    "mid",
      "left",  "right",  "elem",  "key",    "value", "input", "out",   "arr", "list",  "str",
      "num",   "pos",    "first", "second", "head",  "tail",  "part",  "cell", "entry", "word",
      "token", "source", "dest",  "limit",  "step",  "base",  "width", "size", "index", "result",
  };
  return names;
}

const std::vector<std::string>& method_pool() {
  static const std::vector<std::string> names = {
      "compute", "process", "run",    "handle",  "apply",   "evaluate", "transform",
      "doWork",  "calc",    "execute", "perform", "solve",  "helper",   "work",
      "update",  "check",   "visit",  "build",   "produce", "derive",
  };
  return names;
}

const std::vector<std::string>& class_pool() {
  static const std::vector<std::string> names = {
      "Util",  "Helper", "Tools",  "Worker", "Task",    "Job",   "Unit",  "Module",
      "Codec", "Engine", "Kernel", "Solver", "Service", "Agent", "Logic", "Routine",
  };
  return names;
}

// Distinct picks from a pool, excluding names listed in `taken`.
std::string pick(Rng& rng, const std::vector<std::string>& pool, std::set<std::string>& taken) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const std::string& name = pool[rng.index(pool.size())];
    if (taken.insert(name).second) return name;
  }
  throw std::runtime_error("name pool exhausted");
}

std::string substitute(std::string line, const std::map<std::string, std::string>& names) {
  for (const auto& [placeholder, name] : names) {
    const std::string key = "{" + placeholder + "}";
    for (auto at = line.find(key); at != std::string::npos; at = line.find(key, at + name.size())) {
      line.replace(at, key.size(), name);
    }
  }
  return line;
}

std::size_t template_depth(const char*& line) {
  std::size_t depth = 0;
  while (line[0] == ' ' && line[1] == ' ') {
    ++depth;
    line += 2;
  }
  return depth;
}

class Writer {
 public:
  explicit Writer(std::string unit) : unit_(std::move(unit)) {}

  void line(std::size_t depth, const std::string& text) {
    if (!text.empty()) {
      for (std::size_t i = 0; i < depth; ++i) out_ += unit_;
    }
    out_ += text;
    out_ += '\n';
  }

  // Template lines relative to `depth`, with names substituted.
  void block(std::size_t depth, const std::vector<const char*>& lines,
             const std::map<std::string, std::string>& names) {
    for (const char* raw : lines) {
      const char* text = raw;
      const std::size_t rel = template_depth(text);
      line(depth + rel, substitute(text, names));
    }
  }

  std::size_t size() const { return out_.size(); }
  std::string& text() { return out_; }
  const std::string& unit() const { return unit_; }

 private:
  std::string unit_;
  std::string out_;
};

SyntheticFile make_file(std::size_t functionality, std::size_t implementation, Rng& rng) {
  const Template& tpl = templates()[functionality];
  static const std::vector<std::string> units = {"  ", "    ", "\t", "   ", "        "};

  std::set<std::string> taken;
  std::map<std::string, std::string> names;
  for (const char* p : {"a", "b", "c", "d", "e", "f"}) names[p] = pick(rng, name_pool(), taken);
  std::set<std::string> method_taken;
  names["fn"] = pick(rng, method_pool(), method_taken);
  std::set<std::string> class_taken;
  const std::string cls = pick(rng, class_pool(), class_taken) + std::to_string(rng.index(100));
  names["Cls"] = cls;

  Writer w(units[rng.index(units.size())]);
  const bool nested = rng.uniform() < 0.5;
  w.line(0, "import java.io.*;");
  w.line(0, "import java.util.*;");
  w.line(0, "");
  w.line(0, "public class " + cls + " {");
  std::size_t depth = 1;
  if (nested) {
    w.line(depth, "static class Inner" + std::to_string(rng.index(10)) + " {");
    ++depth;
  }

  const auto filler_block = [&](std::size_t which) {
    std::map<std::string, std::string> fill = names;
    std::set<std::string> fill_taken;
    fill["a"] = pick(rng, name_pool(), fill_taken);
    fill["b"] = pick(rng, name_pool(), fill_taken);
    fill["fn"] = pick(rng, method_pool(), method_taken);
    if (which == fillers().size()) {
      // A caller exercising the method, as real files usually contain.
      const std::string label = tpl.labels[rng.index(tpl.labels.size())];
      const std::string call = names["fn"] + "(" + tpl.call + ")";
      w.line(depth, "public static void main(String[] args) {");
      if (std::string(tpl.returns) == "void") {
        w.line(depth + 1, call + ";");
        w.line(depth + 1, "System.out.println(\"" + label + " done\");");
      } else {
        w.line(depth + 1, "System.out.println(\"" + label + ": \" + " + call + ");");
      }
      w.line(depth, "}");
    } else {
      w.block(depth, fillers()[which], fill);
    }
    w.line(0, "");
  };
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < fillers().size(); ++i) {
    if (rng.uniform() < 0.4) chosen.push_back(i);
  }
  if (rng.uniform() < 0.8) chosen.insert(chosen.begin() + static_cast<std::ptrdiff_t>(rng.index(chosen.size() + 1)),
                                         fillers().size());
  const std::size_t before = chosen.empty() ? 0 : rng.index(chosen.size() + 1);
  for (std::size_t i = 0; i < before; ++i) filler_block(chosen[i]);

  w.line(depth, substitute(std::string("public static ") + tpl.returns + " {fn}(" + tpl.params + ") {", names));
  w.block(depth + 1, tpl.pre, names);
  const std::size_t core_line_start = w.size();
  w.block(depth + 1, tpl.core, names);
  const std::size_t core_line_end = w.size();
  w.block(depth + 1, tpl.post, names);
  w.line(depth, "}");
  for (std::size_t i = before; i < chosen.size(); ++i) {
    w.line(0, "");
    filler_block(chosen[i]);
  }
  if (nested) w.line(1, "}");
  w.line(0, "}");

  SyntheticFile f;
  f.functionality = functionality;
  f.implementation = implementation;
  char repo[16];
  std::snprintf(repo, sizeof repo, "impl-%02zu", implementation);
  f.repo = repo;
  f.source = f.repo + "/" + cls + "F" + std::to_string(functionality) + ".java";
  f.content = std::move(w.text());
  f.core_begin = f.content.find_first_not_of(" \t", core_line_start);
  f.core_end = f.content.find_last_not_of("\n", core_line_end - 1) + 1;
  return f;
}

// Removes the indentation shared by the core block's lines; the first line
// starts at its first token already.
std::string dedent_core(const std::string& core) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = core.find('\n', start);
    lines.push_back(core.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  const auto columns = [](const std::string& line) {
    std::size_t col = 0;
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
  };
  std::size_t shared = std::string::npos;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    shared = std::min(shared, columns(lines[i]));
  }
  std::string out = lines[0];
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::size_t ws = line.find_first_not_of(" \t");
    std::string rest = ws == std::string::npos ? "" : line.substr(ws);
    const std::size_t col = ws == std::string::npos ? 0 : columns(line) - shared;
    out += '\n';
    if (!rest.empty()) out += std::string(col, ' ') + rest;
  }
  return out;
}

}  // namespace

Split split_of(std::size_t implementation) {
  return implementation < kTrainImplementations ? Split::Train : Split::Valid;
}

bool is_test_implementation(std::size_t implementation) {
  return implementation >= kTrainImplementations + kValidImplementations;
}

std::vector<CorpusFile> SyntheticCorpus::corpus_files(Split split) const {
  std::vector<CorpusFile> out;
  for (const SyntheticFile& f : files) {
    if (is_test_implementation(f.implementation) || split_of(f.implementation) != split) continue;
    CorpusFile c;
    c.path = f.source;
    c.source = f.source;
    c.repo = f.repo;
    c.language = "java";
    c.content = f.content;
    c.content_hash = content_hash(f.content);
    c.split = split;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const CorpusFile& a, const CorpusFile& b) { return a.content_hash < b.content_hash; });
  return out;
}

SyntheticCorpus make_synthetic_corpus(std::uint64_t seed) {
  SyntheticCorpus corpus;
  Rng rng(seed);
  const Language& java = language("java");
  for (std::size_t fn = 0; fn < kFunctionalities; ++fn) {
    for (std::size_t impl = 0; impl < kImplementations; ++impl) {
      corpus.files.push_back(make_file(fn, impl, rng));
    }
  }
  std::map<std::size_t, std::vector<std::string>> by_functionality;
  for (const SyntheticFile& f : corpus.files) {
    if (!is_test_implementation(f.implementation)) continue;
    const std::string id = "f" + std::to_string(f.functionality) + "-i" + std::to_string(f.implementation);
    QueryRecord q;
    q.query_id = id;
    q.language = "java";
    q.context = java.cls_token + f.content.substr(0, f.core_begin) + java.mask_token +
                f.content.substr(f.core_end);
    corpus.queries.push_back(std::move(q));
    CandidateRecord c;
    c.target_id = id;
    c.language = "java";
    c.text = java.cls_token + dedent_core(f.content.substr(f.core_begin, f.core_end - f.core_begin));
    corpus.candidates.push_back(std::move(c));
    by_functionality[f.functionality].push_back(id);
  }
  for (const auto& [fn, ids] : by_functionality) {
    for (const std::string& q : ids) {
      for (const std::string& t : ids) {
        corpus.qrels.push_back({q, t, 1, q == t ? 1 : 0});
      }
    }
  }
  return corpus;
}

void write_synthetic_tree(const SyntheticCorpus& corpus, const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  std::set<std::string> valid;
  for (const SyntheticFile& f : corpus.files) {
    if (is_test_implementation(f.implementation)) continue;
    if (split_of(f.implementation) == Split::Valid) valid.insert(f.repo);
    const auto path = root / f.source;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << f.content;
  }
  std::ofstream manifest(root / "valid-repos.txt", std::ios::binary | std::ios::trunc);
  for (const std::string& r : valid) manifest << r << '\n';
}

void write_cocos_files(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_queries(dir / "queries.jsonl", corpus.queries);
  write_candidates(dir / "candidates.jsonl", corpus.candidates);
  write_qrels(dir / "qrels.jsonl", corpus.qrels);
}

RelevanceJudgments cocos_judgments(const SyntheticCorpus& corpus) {
  return judgments_from(corpus.qrels);
}

}  // namespace ctxsearch::testing
