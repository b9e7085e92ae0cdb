#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ctxsearch/random.hpp"
#include "ctxsearch/syntax.hpp"

namespace ctxsearch {

inline constexpr double kDefaultTargetMean = 150.0;
inline constexpr double kDefaultTargetStddev = 90.0;
inline constexpr std::size_t kDefaultTargetMin = 16;
inline constexpr std::size_t kDefaultTargetMax = 512;

/// Normal draw rounded to the nearest integer and clamped into [min, max].
/// Throws Error(InvalidBounds) unless min >= 1, max >= min and stddev >= 0.
std::size_t sample_target_length(Rng& rng, double mean = kDefaultTargetMean,
                                 double stddev = kDefaultTargetStddev,
                                 std::size_t min = kDefaultTargetMin,
                                 std::size_t max = kDefaultTargetMax);

/// A contiguous run of sibling subtrees chosen as the target.
struct SpanSelection {
  std::vector<NodeId> sibling_run;
  std::size_t leaf_start = 0;
  std::size_t leaf_count = 0;
  std::size_t requested_length = 0;

  std::size_t leaf_end() const noexcept { return leaf_start + leaf_count; }
  bool operator==(const SpanSelection&) const = default;
};

struct SpanOptions {
  /// Lower bound on the seed node's leaf count. Zero means max(1, L/2).
  std::size_t min_seed_leaves = 0;
  /// When set, fail (nullopt) instead of falling back to smaller seeds.
  bool require_min_seed = false;
  /// Never include marker leaves (fold tokens) in the run.
  bool exclude_markers = false;
};

/// Tree-based span selection: picks a seed node covering at most L leaves
/// and grows it greedily by moving to the parent or adding adjacent
/// siblings while the run stays within L leaves. Throws Error(EmptyTree).
SpanSelection select_span(const SyntaxTree& tree, std::size_t target_length, Rng& rng);

/// As above; returns nullopt only when `options.require_min_seed` rules out
/// every seed.
std::optional<SpanSelection> select_span(const SyntaxTree& tree, std::size_t target_length,
                                         Rng& rng, const SpanOptions& options);

/// Runs only the expansion rule from a given seed node.
SpanSelection expand_from(const SyntaxTree& tree, NodeId seed, std::size_t target_length,
                          const SpanOptions& options = {});

/// Throws Error(SpanMismatch) unless `span` is a well-formed run of `tree`.
void validate_span(const SyntaxTree& tree, const SpanSelection& span);

struct SplitResult {
  std::vector<Token> context;  // CLS, prefix, MASK, suffix
  std::vector<Token> target;   // CLS, span tokens
  SpanSelection span;
};

SplitResult split(const SyntaxTree& tree, const SpanSelection& span, const Language& lang);

/// Splices the target (minus its CLS) back in place of the context's MASK,
/// dropping the context's CLS.
std::vector<std::string> splice(const std::vector<std::string>& context,
                                const std::vector<std::string>& target,
                                std::string_view mask_token = "<|mask|>");

std::vector<std::string> token_texts(const std::vector<Token>& tokens);
std::string join_tokens(const std::vector<Token>& tokens);

/// True if the ( ) [ ] { } delimiter tokens in `tokens` nest and close.
bool delimiters_balanced(const std::vector<Token>& tokens);

/// True if every token is whitespace (markers ignored).
bool whitespace_only(const std::vector<Token>& tokens);

}  // namespace ctxsearch
