#include "ctxsearch/deleak.hpp"

#include <algorithm>
#include <limits>

#include "ctxsearch/errors.hpp"

namespace ctxsearch {

std::string_view to_string(MaskSide side) noexcept {
  switch (side) {
    case MaskSide::Unmasked: return "unmasked";
    case MaskSide::Context: return "context";
    case MaskSide::Target: return "target";
  }
  return "unmasked";
}

std::set<std::string> mutual_identifiers(const std::vector<Token>& context,
                                         const std::vector<Token>& target) {
  std::set<std::string> in_context;
  for (const Token& t : context) {
    if (t.is_identifier()) in_context.insert(t.text);
  }
  std::set<std::string> out;
  for (const Token& t : target) {
    if (t.is_identifier() && in_context.count(t.text)) out.insert(t.text);
  }
  return out;
}

MaskingPlan plan_masking(const std::set<std::string>& mutuals, Rng& rng, double mask_prob,
                         double skip_pair_prob) {
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0) || !(skip_pair_prob >= 0.0 && skip_pair_prob <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "masking probabilities must lie in [0, 1]");
  }
  MaskingPlan plan;
  plan.mutual_identifiers = mutuals;
  plan.skip_pair = rng.bernoulli(skip_pair_prob);
  for (const std::string& id : mutuals) {
    MaskSide side = MaskSide::Unmasked;
    if (!plan.skip_pair && rng.bernoulli(mask_prob)) {
      side = rng.bernoulli(0.5) ? MaskSide::Context : MaskSide::Target;
    }
    plan.decisions.emplace(id, side);
  }
  return plan;
}

namespace {

bool substitutable(const Token& t) {
  return t.cls == TokenClass::Identifier || t.cls == TokenClass::Other;
}

bool occurs_in(const std::vector<Token>& tokens, std::string_view text) {
  return std::any_of(tokens.begin(), tokens.end(),
                     [&](const Token& t) { return t.text.find(text) != std::string::npos; });
}

void assign_side(const std::vector<Token>& seq, MaskSide side, MaskingPlan& plan,
                 const std::vector<Token>& context, const std::vector<Token>& target) {
  std::set<std::string> used;
  unsigned next = 1;
  for (const Token& t : seq) {
    if (!t.is_identifier()) continue;
    const auto it = plan.decisions.find(t.text);
    if (it == plan.decisions.end() || it->second != side || plan.alias_map.count(t.text)) continue;
    std::string alias;
    do {
      alias = "VAR" + std::to_string(next++);
    } while (occurs_in(context, alias) || occurs_in(target, alias) || used.count(alias));
    used.insert(alias);
    plan.alias_map.emplace(t.text, alias);
  }
}

void check_aliases(const MaskingPlan& plan, const std::vector<Token>& context,
                   const std::vector<Token>& target) {
  std::set<std::pair<MaskSide, std::string>> seen;
  for (const auto& [id, alias] : plan.alias_map) {
    const auto it = plan.decisions.find(id);
    if (it == plan.decisions.end() || it->second == MaskSide::Unmasked) {
      throw Error(ErrorCode::AliasCollision, "alias for unmasked identifier '" + id + "'");
    }
    for (const std::vector<Token>* seq : {&context, &target}) {
      for (const Token& t : *seq) {
        if (t.text == alias) throw Error(ErrorCode::AliasCollision, "alias '" + alias + "' already occurs");
      }
    }
    if (!seen.emplace(it->second, alias).second) {
      throw Error(ErrorCode::AliasCollision, "alias '" + alias + "' assigned twice");
    }
  }
}

std::vector<Token> substitute(const std::vector<Token>& seq, const MaskingPlan& plan, MaskSide side) {
  std::vector<Token> out = seq;
  for (Token& t : out) {
    if (!substitutable(t)) continue;
    const auto d = plan.decisions.find(t.text);
    if (d == plan.decisions.end() || d->second != side) continue;
    const auto a = plan.alias_map.find(t.text);
    if (a == plan.alias_map.end()) continue;
    t.text = a->second;
    t.cls = TokenClass::Identifier;
  }
  return out;
}

}  // namespace

MaskedSequences apply_masking(const std::vector<Token>& context, const std::vector<Token>& target,
                              MaskingPlan& plan) {
  if (plan.skip_pair) {
    plan.alias_map.clear();
    return {context, target};
  }
  if (plan.alias_map.empty()) {
    assign_side(context, MaskSide::Context, plan, context, target);
    assign_side(target, MaskSide::Target, plan, context, target);
  } else {
    check_aliases(plan, context, target);
  }
  return {substitute(context, plan, MaskSide::Context), substitute(target, plan, MaskSide::Target)};
}

std::map<std::string, std::string> aliases_on(const MaskingPlan& plan, MaskSide side) {
  std::map<std::string, std::string> out;
  for (const auto& [id, alias] : plan.alias_map) {
    const auto it = plan.decisions.find(id);
    if (it != plan.decisions.end() && it->second == side) out.emplace(id, alias);
  }
  return out;
}

std::vector<Token> unmask(const std::vector<Token>& tokens,
                          const std::map<std::string, std::string>& identifier_to_alias) {
  std::map<std::string, std::string> inverse;
  for (const auto& [id, alias] : identifier_to_alias) inverse.emplace(alias, id);
  std::vector<Token> out = tokens;
  for (Token& t : out) {
    if (!t.is_identifier()) continue;
    if (const auto it = inverse.find(t.text); it != inverse.end()) t.text = it->second;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dedentation

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t'; }

// Calls `rewrite(run, empty_line)` for the leading whitespace of every line
// that starts after a newline inside a whitespace token, and splices its
// return value in place of the run.
template <typename Rewrite>
std::vector<Token> rewrite_line_starts(const std::vector<Token>& tokens, Rewrite rewrite) {
  std::vector<Token> out = tokens;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].is_whitespace()) continue;
    const std::string& text = tokens[i].text;
    if (text.find('\n') == std::string::npos) continue;
    std::string rebuilt;
    std::size_t p = 0;
    while (true) {
      const std::size_t nl = text.find('\n', p);
      if (nl == std::string::npos) {
        rebuilt.append(text, p, std::string::npos);
        break;
      }
      rebuilt.append(text, p, nl + 1 - p);
      p = nl + 1;
      std::size_t q = p;
      while (q < text.size() && is_blank(text[q])) ++q;
      bool empty_line;
      if (q < text.size()) {
        empty_line = text[q] == '\n' || text[q] == '\r';
      } else {
        empty_line = i + 1 >= tokens.size();
      }
      rebuilt += rewrite(std::string_view(text).substr(p, q - p), empty_line);
      p = q;
    }
    out[i].text = std::move(rebuilt);
  }
  return out;
}

std::uint32_t first_line_indent(const std::vector<Token>& target) {
  for (const Token& t : target) {
    if (t.marker == MarkerKind::Cls) continue;
    return t.line_indent;
  }
  return 0;
}

}  // namespace

std::vector<std::uint32_t> line_indents(const std::vector<Token>& target) {
  std::vector<std::uint32_t> indents;
  const bool has_body = std::any_of(target.begin(), target.end(),
                                    [](const Token& t) { return t.marker != MarkerKind::Cls; });
  if (!has_body) return indents;
  indents.push_back(first_line_indent(target));
  (void)rewrite_line_starts(target, [&](std::string_view run, bool empty_line) {
    if (!empty_line) indents.push_back(leading_indent_columns(run));
    return std::string(run);
  });
  return indents;
}

DedentResult dedent_target(const std::vector<Token>& target) {
  DedentResult result;
  const std::vector<std::uint32_t> indents = line_indents(target);
  if (indents.empty()) {
    result.tokens = target;
    return result;
  }
  const std::uint32_t d = *std::min_element(indents.begin(), indents.end());
  result.dedent_columns = d;
  if (d == 0) {
    result.tokens = target;
    return result;
  }
  result.tokens = rewrite_line_starts(target, [d](std::string_view run, bool empty_line) {
    if (empty_line) return std::string(run);
    const std::uint32_t width = leading_indent_columns(run);
    if (run.find('\t') != std::string_view::npos) return std::string(width - d, ' ');
    return std::string(run.substr(d));
  });
  return result;
}

std::vector<Token> reindent_target(const std::vector<Token>& target, std::uint32_t columns) {
  if (columns == 0) return target;
  return rewrite_line_starts(target, [columns](std::string_view run, bool empty_line) {
    if (empty_line) return std::string(run);
    return std::string(columns, ' ') + std::string(run);
  });
}

std::vector<Token> expand_leading_tabs(const std::vector<Token>& target) {
  return rewrite_line_starts(target, [](std::string_view run, bool empty_line) {
    if (empty_line || run.find('\t') == std::string_view::npos) return std::string(run);
    return std::string(leading_indent_columns(run), ' ');
  });
}

}  // namespace ctxsearch
