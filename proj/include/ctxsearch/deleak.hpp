#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ctxsearch/random.hpp"
#include "ctxsearch/syntax.hpp"

namespace ctxsearch {

inline constexpr double kDefaultMaskProb = 0.9;
inline constexpr double kDefaultSkipPairProb = 0.05;

enum class MaskSide : std::uint8_t { Unmasked, Context, Target };

std::string_view to_string(MaskSide side) noexcept;

/// A positive sample: masked context X' and target Y, both as joined text
/// (markers and aliases inline), plus the metadata needed to audit or
/// invert the transforms.
struct PairMeta {
  std::string source;
  std::uint64_t span_start = 0;
  std::uint64_t span_len = 0;
  std::uint32_t dedent_cols = 0;
  bool skipped_masking = false;
  std::map<std::string, std::string> context_aliases;  // identifier -> alias
  std::map<std::string, std::string> target_aliases;
  std::uint64_t seed = 0;

  bool operator==(const PairMeta&) const = default;
};

struct ContextTargetPair {
  std::string id;
  std::string language;
  std::string context;
  std::string target;
  PairMeta meta;

  bool operator==(const ContextTargetPair&) const = default;
};

struct MaskingPlan {
  std::set<std::string> mutual_identifiers;
  std::map<std::string, MaskSide> decisions;
  bool skip_pair = false;
  /// identifier -> alias on the side it is masked. Aliases are numbered
  /// independently per side, VAR1.. in order of first occurrence.
  std::map<std::string, std::string> alias_map;
};

/// Identifier texts occurring in both sequences.
std::set<std::string> mutual_identifiers(const std::vector<Token>& context,
                                         const std::vector<Token>& target);

/// Draws the whole-pair exemption first, then, per identifier in sorted
/// order, a Bernoulli(mask_prob) masking decision followed by a fair coin
/// for the side. Throws Error(InvalidConfig) for probabilities outside [0, 1].
MaskingPlan plan_masking(const std::set<std::string>& mutuals, Rng& rng,
                         double mask_prob = kDefaultMaskProb,
                         double skip_pair_prob = kDefaultSkipPairProb);

struct MaskedSequences {
  std::vector<Token> context;
  std::vector<Token> target;
};

/// Replaces every occurrence of each masked identifier on its masked side by
/// its alias. Aliases are assigned here when `plan.alias_map` is empty, and
/// skip any VARk that already occurs in either sequence. A pre-filled map
/// that collides with an existing token throws Error(AliasCollision).
MaskedSequences apply_masking(const std::vector<Token>& context, const std::vector<Token>& target,
                              MaskingPlan& plan);

/// Aliases of `plan` masked on `side`, identifier -> alias.
std::map<std::string, std::string> aliases_on(const MaskingPlan& plan, MaskSide side);

/// Replaces alias tokens by the identifiers they stand for.
std::vector<Token> unmask(const std::vector<Token>& tokens,
                          const std::map<std::string, std::string>& identifier_to_alias);

struct DedentResult {
  std::vector<Token> tokens;
  std::uint32_t dedent_columns = 0;
};

/// Shifts the target left so its least-indented non-empty line sits at
/// column 0. The first line's indentation is the source line's indentation
/// (it lives in the context); later lines are the leading whitespace after
/// newlines in whitespace tokens. Newlines inside literal tokens do not start
/// lines. Leading whitespace containing tabs is re-emitted as spaces.
DedentResult dedent_target(const std::vector<Token>& target);

/// Inverse of dedent_target up to tab expansion: prepends `columns` spaces
/// to every non-empty line after the first.
std::vector<Token> reindent_target(const std::vector<Token>& target, std::uint32_t columns);

/// Indentation (tab-expanded) of every non-empty line of the target, first
/// line included, in order.
std::vector<std::uint32_t> line_indents(const std::vector<Token>& target);

/// Copy with every line's leading whitespace tab-expanded to spaces.
std::vector<Token> expand_leading_tabs(const std::vector<Token>& target);

}  // namespace ctxsearch
