#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxsearch/deleak.hpp"
#include "ctxsearch/random.hpp"
#include "ctxsearch/span.hpp"
#include "ctxsearch/syntax.hpp"

namespace ctxsearch {

enum class Split : std::uint8_t { Train, Valid };

std::string_view to_string(Split split) noexcept;

struct CorpusFile {
  std::filesystem::path path;  // where the bytes were read from
  std::string source;          // path relative to its input root, '/'-separated
  std::string repo;            // first component of `source`, "." for top-level files
  std::string language;
  std::string content_hash;    // hex BLAKE2b-256 of the bytes
  Split split = Split::Train;
  std::string content;
};

/// Hex BLAKE2b-256 digest of `bytes`.
std::string content_hash(std::string_view bytes);

/// Per-file seed: BLAKE2b keyed by the master seed over the content hash.
std::uint64_t file_seed(std::uint64_t master_seed, std::string_view content_hash);

struct IngestConfig {
  GrammarRegistry registry = GrammarRegistry::defaults();
  /// Grammars to keep; empty keeps every supported one.
  std::set<std::string> languages;
  /// Repositories reserved for validation (from a manifest).
  std::set<std::string> valid_repos;
  /// When no manifest is given, reserve this many repositories, chosen by
  /// hashing repository names.
  std::size_t valid_repo_count = 0;
};

struct IngestStats {
  std::size_t files_seen = 0;
  std::size_t kept = 0;
  std::size_t unsupported = 0;
  std::size_t duplicates = 0;
  std::size_t unreadable = 0;
  std::size_t rejected = 0;  // not UTF-8, or containing marker text
  std::vector<std::string> warnings;
};

/// Walks the roots, keeps files with a known grammar, drops byte-identical
/// duplicates after the first (files ordered by relative path, then root),
/// and assigns the split per repository. Output is sorted by content hash.
std::vector<CorpusFile> ingest(const std::vector<std::filesystem::path>& roots,
                               const IngestConfig& config, IngestStats* stats = nullptr);

/// Reads a manifest of validation repositories, one name per line.
std::set<std::string> read_repo_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Truncation

struct TruncationConfig {
  std::size_t threshold = 1024;
  std::size_t segment_min = 150;
  std::size_t segment_max = 800;
  std::size_t max_segments = 8;
  std::size_t attempts_per_segment = 8;
};

struct TruncationResult {
  SyntaxTree shortened;               // fold markers at removal points
  std::vector<SyntaxTree> segments;   // in the order of their fold markers
};

/// Cuts syntactically complete segments out of a large file until it fits
/// the threshold or `max_segments` were taken. Files at or below the
/// threshold come back unchanged with no segments.
TruncationResult truncate_file(const SyntaxTree& tree, Rng& rng, const Language& lang,
                               const TruncationConfig& config = {});

/// Token texts of the shortened file with every fold marker replaced by its
/// segment's tokens.
std::vector<std::string> unfold(const TruncationResult& result);

// ---------------------------------------------------------------------------
// Pair generation

struct PairConfig {
  double mean = kDefaultTargetMean;
  double stddev = kDefaultTargetStddev;
  std::size_t min_length = kDefaultTargetMin;
  std::size_t max_length = kDefaultTargetMax;
  double mask_prob = kDefaultMaskProb;
  double skip_pair_prob = kDefaultSkipPairProb;
  bool identifier_masking = true;
  bool dedent = true;
  std::size_t samples_per_input = 1;
  std::size_t span_attempts = 8;
  TruncationConfig truncation;
};

/// Every intermediate of one pair, for tests and auditing.
struct PairTrace {
  SplitResult split;
  MaskingPlan plan;
  MaskedSequences masked;
  std::uint32_t dedent_columns = 0;
  std::vector<Token> final_target;
  ContextTargetPair pair;
};

/// Runs TS, IM and DE on one input. Spans that are whitespace-only or cover
/// the whole input are resampled; after `span_attempts` rejections the
/// input yields nothing.
std::optional<PairTrace> generate_pair(const SyntaxTree& input, const PairConfig& config,
                                       Rng& span_rng, Rng& mask_rng);

struct PairStats {
  std::size_t files = 0;
  std::size_t inputs = 0;
  std::size_t pairs = 0;
  std::size_t truncated_files = 0;
  std::size_t segments = 0;
  std::size_t rejected_inputs = 0;
  std::size_t failed_files = 0;
  std::vector<std::string> warnings;
};

/// Pairs for one file, in input order: the (possibly shortened) file first,
/// then its segments.
std::vector<ContextTargetPair> make_file_pairs(const CorpusFile& file, const PairConfig& config,
                                               std::uint64_t master_seed,
                                               PairStats* stats = nullptr);

/// Pairs for every file, concatenated in content-hash order. The output
/// does not depend on `jobs`.
std::vector<ContextTargetPair> make_pairs(const std::vector<CorpusFile>& files,
                                          const PairConfig& config, std::uint64_t master_seed,
                                          std::size_t jobs = 1, PairStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Batching

inline constexpr std::size_t kDefaultTokenBudget = 7000;
inline constexpr std::size_t kMaxSequenceTokens = 512;

struct Batch {
  std::string language;
  std::vector<std::size_t> members;  // indices into the pair list
  std::size_t token_count = 0;
};

using TokenCounter = std::function<std::size_t(const ContextTargetPair&)>;

/// Encoder tokens of context plus target, each side capped at `cap`.
std::size_t pair_tokens(const ContextTargetPair& pair, std::size_t cap = kMaxSequenceTokens);

/// Greedy per-language fill: a language's buffer is flushed when the next
/// pair of that language would exceed the budget. Remaining buffers flush
/// at the end in language order. Throws Error(InvalidConfig) if a single
/// pair exceeds the budget.
std::vector<Batch> batch_by_language(const std::vector<ContextTargetPair>& pairs,
                                     std::size_t budget = kDefaultTokenBudget,
                                     const TokenCounter& count = {});

// ---------------------------------------------------------------------------
// Persistence

std::string to_json_line(const ContextTargetPair& pair);

/// Throws Error(SchemaError) naming `line_number` when malformed.
ContextTargetPair from_json_line(std::string_view line, std::size_t line_number = 1);

void write_jsonl(const std::filesystem::path& path, const std::vector<ContextTargetPair>& pairs);
std::vector<ContextTargetPair> read_jsonl(const std::filesystem::path& path);

/// Writes `dir/<lang>-NNNNN.jsonl` shards of at most `per_shard` pairs,
/// keeping input order within each language. Returns the files written.
std::vector<std::filesystem::path> write_shards(const std::filesystem::path& dir,
                                                const std::vector<ContextTargetPair>& pairs,
                                                std::size_t per_shard = 10000);

/// All `*.jsonl` files in `dir` by file name, concatenated.
std::vector<ContextTargetPair> read_shards(const std::filesystem::path& dir);

}  // namespace ctxsearch
