#include "ctxsearch/span.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "ctxsearch/errors.hpp"

namespace ctxsearch {

std::size_t sample_target_length(Rng& rng, double mean, double stddev, std::size_t min,
                                 std::size_t max) {
  if (min < 1 || max < min || !(stddev >= 0.0) || !std::isfinite(mean)) {
    throw Error(ErrorCode::InvalidBounds, "require min >= 1, max >= min, stddev >= 0");
  }
  const double draw = std::round(mean + stddev * rng.normal());
  const double clamped =
      std::clamp(draw, static_cast<double>(min), static_cast<double>(max));
  return static_cast<std::size_t>(clamped);
}

namespace {

bool range_balanced(std::span<const Token> leaves, std::size_t begin, std::size_t end) {
  std::vector<char> stack;
  for (std::size_t i = begin; i < end; ++i) {
    const Token& t = leaves[i];
    if (t.cls != TokenClass::Other || t.text.size() != 1) continue;
    const char c = t.text[0];
    if (c == '(' || c == '[' || c == '{') {
      stack.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || stack.back() != open) return false;
      stack.pop_back();
    }
  }
  return stack.empty();
}

enum class Direction { Following, Preceding };

Direction flip(Direction d) {
  return d == Direction::Following ? Direction::Preceding : Direction::Following;
}

class Expander {
 public:
  Expander(const SyntaxTree& tree, std::size_t limit, const SpanOptions& options)
      : tree_(tree), limit_(limit), options_(options) {
    const auto leaves = tree.leaves();
    nonws_prefix_.assign(leaves.size() + 1, 0);
    marker_prefix_.assign(leaves.size() + 1, 0);
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const bool ws = leaves[i].is_whitespace() || leaves[i].is_marker();
      nonws_prefix_[i + 1] = nonws_prefix_[i] + (ws ? 0 : 1);
      marker_prefix_[i + 1] = marker_prefix_[i] + (leaves[i].is_marker() ? 1 : 0);
    }
  }

  bool has_content(NodeId id) const {
    const Node& n = tree_.node(id);
    return nonws_prefix_[n.leaf_end] > nonws_prefix_[n.leaf_begin];
  }

  bool blocked(NodeId id) const {
    if (!options_.exclude_markers) return false;
    const Node& n = tree_.node(id);
    return marker_prefix_[n.leaf_end] > marker_prefix_[n.leaf_begin];
  }

  bool seed_eligible(NodeId id) const {
    const Node& n = tree_.node(id);
    return !n.in_error && n.leaf_count() > 0 && has_content(id) && !blocked(id) &&
           balanced(n.leaf_begin, n.leaf_end);
  }

  // Whole subtrees are balanced unless the parser recovered from an error
  // by inserting a zero-width token, and a run of siblings is balanced
  // unless it takes one bracket of the parent's pair.
  bool balanced(std::size_t begin, std::size_t end) const {
    return range_balanced(tree_.leaves(), begin, end);
  }

  bool run_balanced(const std::vector<NodeId>& run) const {
    return balanced(tree_.node(run.front()).leaf_begin, tree_.node(run.back()).leaf_end);
  }

  std::optional<NodeId> pick_seed(Rng& rng) const {
    const std::size_t lo = options_.min_seed_leaves > 0
                               ? options_.min_seed_leaves
                               : std::max<std::size_t>(1, limit_ / 2);
    std::vector<NodeId> candidates;
    std::optional<NodeId> largest;
    for (NodeId id = 0; id < tree_.node_count(); ++id) {
      if (!seed_eligible(id)) continue;
      const std::size_t count = tree_.node(id).leaf_count();
      if (count > limit_) continue;
      if (count >= lo) candidates.push_back(id);
      if (!largest || count > tree_.node(*largest).leaf_count()) largest = id;
    }
    if (!candidates.empty()) return candidates[rng.index(candidates.size())];
    if (options_.require_min_seed) return std::nullopt;
    if (largest) return largest;
    // Nothing eligible (whitespace-only input, or everything inside errors):
    // any single leaf, so the caller can observe and reject it.
    return tree_.leaf_node(rng.index(tree_.leaf_count()));
  }

  SpanSelection expand(NodeId seed) const {
    std::vector<NodeId> run{seed};
    Direction next = Direction::Following;
    bool exhausted[2] = {false, false};

    while (true) {
      const NodeId parent = tree_.node(run.front()).parent;
      if (parent == kNoNode) break;
      const Node& p = tree_.node(parent);
      if (p.leaf_count() <= limit_ && !blocked(parent) && balanced(p.leaf_begin, p.leaf_end)) {
        run.assign(1, parent);
        exhausted[0] = exhausted[1] = false;
        continue;
      }

      bool progressed = false;
      for (int attempt = 0; attempt < 2 && !progressed; ++attempt) {
        const Direction dir = attempt == 0 ? next : flip(next);
        auto& done = exhausted[dir == Direction::Following ? 0 : 1];
        if (done) continue;
        std::vector<NodeId> grown = grow(run, parent, dir);
        if (grown.empty() || !run_balanced(grown)) {
          done = true;
          continue;
        }
        if (run_count(grown) > limit_) continue;
        if (covers_block(grown, parent)) {
          // The parent exceeds L (checked above); a run of every child
          // would be a complete block, so this addition is rolled back.
          done = true;
          continue;
        }
        run = std::move(grown);
        next = flip(dir);
        progressed = true;
      }
      if (!progressed) break;
    }

    SpanSelection span;
    span.sibling_run = run;
    span.leaf_start = tree_.node(run.front()).leaf_begin;
    span.leaf_count = run_count(run);
    span.requested_length = limit_;
    return span;
  }

 private:
  std::size_t run_count(const std::vector<NodeId>& run) const {
    return tree_.node(run.back()).leaf_end - tree_.node(run.front()).leaf_begin;
  }

  // Run extended by the whitespace siblings and the next contentful sibling
  // in `dir`; empty when no such sibling exists or it is blocked.
  std::vector<NodeId> grow(const std::vector<NodeId>& run, NodeId parent, Direction dir) const {
    const auto& kids = tree_.node(parent).children;
    const auto first = std::find(kids.begin(), kids.end(), run.front()) - kids.begin();
    const auto last = first + static_cast<std::ptrdiff_t>(run.size()) - 1;
    std::vector<NodeId> added;
    if (dir == Direction::Following) {
      for (auto k = last + 1; k < static_cast<std::ptrdiff_t>(kids.size()); ++k) {
        if (blocked(kids[k])) return {};
        added.push_back(kids[k]);
        if (has_content(kids[k])) {
          std::vector<NodeId> out = run;
          out.insert(out.end(), added.begin(), added.end());
          return out;
        }
      }
    } else {
      for (auto k = first - 1; k >= 0; --k) {
        if (blocked(kids[k])) return {};
        added.push_back(kids[k]);
        if (has_content(kids[k])) {
          std::vector<NodeId> out(added.rbegin(), added.rend());
          out.insert(out.end(), run.begin(), run.end());
          return out;
        }
      }
    }
    return {};
  }

  bool covers_block(const std::vector<NodeId>& run, NodeId parent) const {
    const auto& kids = tree_.node(parent).children;
    const auto first_content =
        std::find_if(kids.begin(), kids.end(), [&](NodeId k) { return has_content(k); });
    const auto last_content =
        std::find_if(kids.rbegin(), kids.rend(), [&](NodeId k) { return has_content(k); });
    if (first_content == kids.end()) return false;
    const NodeId run_first = *std::find_if(run.begin(), run.end(), [&](NodeId k) { return has_content(k); });
    const NodeId run_last = *std::find_if(run.rbegin(), run.rend(), [&](NodeId k) { return has_content(k); });
    return run_first == *first_content && run_last == *last_content;
  }

  const SyntaxTree& tree_;
  std::size_t limit_;
  SpanOptions options_;
  std::vector<std::uint32_t> nonws_prefix_;
  std::vector<std::uint32_t> marker_prefix_;
};

}  // namespace

std::optional<SpanSelection> select_span(const SyntaxTree& tree, std::size_t target_length,
                                         Rng& rng, const SpanOptions& options) {
  if (tree.leaf_count() == 0) throw Error(ErrorCode::EmptyTree, "tree has no leaves");
  if (target_length < 1) throw Error(ErrorCode::InvalidBounds, "target length must be >= 1");
  Expander expander(tree, target_length, options);
  const std::optional<NodeId> seed = expander.pick_seed(rng);
  if (!seed) return std::nullopt;
  return expander.expand(*seed);
}

SpanSelection select_span(const SyntaxTree& tree, std::size_t target_length, Rng& rng) {
  return *select_span(tree, target_length, rng, SpanOptions{});
}

SpanSelection expand_from(const SyntaxTree& tree, NodeId seed, std::size_t target_length,
                          const SpanOptions& options) {
  if (tree.leaf_count() == 0) throw Error(ErrorCode::EmptyTree, "tree has no leaves");
  if (target_length < 1) throw Error(ErrorCode::InvalidBounds, "target length must be >= 1");
  if (seed >= tree.node_count()) throw Error(ErrorCode::IndexOutOfRange, "seed not in tree");
  return Expander(tree, target_length, options).expand(seed);
}

void validate_span(const SyntaxTree& tree, const SpanSelection& span) {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::SpanMismatch, why); };
  if (span.sibling_run.empty()) fail("empty sibling run");
  for (NodeId id : span.sibling_run) {
    if (id >= tree.node_count()) fail("node " + std::to_string(id) + " not in tree");
  }
  const NodeId parent = tree.node(span.sibling_run.front()).parent;
  if (parent == kNoNode) {
    if (span.sibling_run.size() != 1) fail("root run must be a single node");
  } else {
    const auto& kids = tree.node(parent).children;
    auto it = std::find(kids.begin(), kids.end(), span.sibling_run.front());
    for (NodeId id : span.sibling_run) {
      if (it == kids.end() || *it != id) fail("run is not consecutive siblings");
      ++it;
    }
  }
  const Node& first = tree.node(span.sibling_run.front());
  const Node& last = tree.node(span.sibling_run.back());
  if (span.leaf_start != first.leaf_begin || span.leaf_count != last.leaf_end - first.leaf_begin) {
    fail("leaf range does not match the run");
  }
}

SplitResult split(const SyntaxTree& tree, const SpanSelection& span, const Language& lang) {
  validate_span(tree, span);
  const auto leaves = tree.leaves();
  SplitResult result;
  result.span = span;

  result.context.reserve(leaves.size() - span.leaf_count + 2);
  result.context.push_back(make_marker(MarkerKind::Cls, lang, 0));
  result.context.insert(result.context.end(), leaves.begin(),
                        leaves.begin() + static_cast<std::ptrdiff_t>(span.leaf_start));
  Token mask = make_marker(MarkerKind::Mask, lang, leaves[span.leaf_start].byte_begin);
  mask.line = leaves[span.leaf_start].line;
  mask.column = leaves[span.leaf_start].column;
  mask.line_indent = leaves[span.leaf_start].line_indent;
  result.context.push_back(std::move(mask));
  result.context.insert(result.context.end(),
                        leaves.begin() + static_cast<std::ptrdiff_t>(span.leaf_end()), leaves.end());

  result.target.reserve(span.leaf_count + 1);
  result.target.push_back(make_marker(MarkerKind::Cls, lang, 0));
  result.target.insert(result.target.end(),
                       leaves.begin() + static_cast<std::ptrdiff_t>(span.leaf_start),
                       leaves.begin() + static_cast<std::ptrdiff_t>(span.leaf_end()));
  return result;
}

std::vector<std::string> splice(const std::vector<std::string>& context,
                                const std::vector<std::string>& target,
                                std::string_view mask_token) {
  std::vector<std::string> out;
  bool replaced = false;
  for (std::size_t i = 1; i < context.size(); ++i) {
    if (!replaced && context[i] == mask_token) {
      out.insert(out.end(), target.begin() + (target.empty() ? 0 : 1), target.end());
      replaced = true;
    } else {
      out.push_back(context[i]);
    }
  }
  return out;
}

std::vector<std::string> token_texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const Token& t : tokens) out.push_back(t.text);
  return out;
}

std::string join_tokens(const std::vector<Token>& tokens) {
  std::string out;
  for (const Token& t : tokens) out += t.text;
  return out;
}

bool delimiters_balanced(const std::vector<Token>& tokens) {
  return range_balanced(tokens, 0, tokens.size());
}

bool whitespace_only(const std::vector<Token>& tokens) {
  return std::all_of(tokens.begin(), tokens.end(),
                     [](const Token& t) { return t.is_whitespace() || t.is_marker(); });
}

}  // namespace ctxsearch
