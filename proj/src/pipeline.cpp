#include "ctxsearch/pipeline.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ctxsearch/errors.hpp"
#include "ctxsearch/lexer.hpp"

namespace ctxsearch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Split split) noexcept {
  return split == Split::Train ? "train" : "valid";
}

namespace {

void ensure_sodium() {
  static const int status = sodium_init();
  if (status < 0) throw Error(ErrorCode::IoError, "libsodium failed to initialise");
}

}  // namespace

std::string content_hash(std::string_view bytes) {
  ensure_sodium();
  unsigned char digest[crypto_generichash_BYTES];
  crypto_generichash(digest, sizeof digest, reinterpret_cast<const unsigned char*>(bytes.data()),
                     bytes.size(), nullptr, 0);
  char hex[2 * sizeof digest + 1];
  sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
  return std::string(hex, 2 * sizeof digest);
}

std::uint64_t file_seed(std::uint64_t master_seed, std::string_view hash) {
  ensure_sodium();
  unsigned char key[crypto_generichash_KEYBYTES_MIN] = {};
  for (int i = 0; i < 8; ++i) key[i] = static_cast<unsigned char>(master_seed >> (8 * i));
  std::copy_n("ctxsrch", 8, key + 8);
  unsigned char out[crypto_generichash_BYTES_MIN];
  crypto_generichash(out, sizeof out, reinterpret_cast<const unsigned char*>(hash.data()),
                     hash.size(), key, sizeof key);
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed |= static_cast<std::uint64_t>(out[i]) << (8 * i);
  return seed;
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

struct Candidate {
  std::string source;
  std::size_t root_index = 0;
  fs::path path;
};

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return std::move(ss).str();
}

std::string repo_of(const std::string& source) {
  const auto slash = source.find('/');
  return slash == std::string::npos ? std::string(".") : source.substr(0, slash);
}

std::vector<Candidate> list_files(const std::vector<fs::path>& roots, IngestStats& stats) {
  std::vector<Candidate> out;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    const fs::path& root = roots[r];
    std::error_code ec;
    if (fs::is_regular_file(root, ec)) {
      out.push_back({root.filename().generic_string(), r, root});
      continue;
    }
    if (!fs::is_directory(root, ec)) {
      stats.warnings.push_back("input root not found: " + root.string());
      ++stats.unreadable;
      continue;
    }
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    for (; !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
      std::error_code fec;
      if (!it->is_regular_file(fec)) continue;
      out.push_back({fs::relative(it->path(), root, fec).generic_string(), r, it->path()});
    }
    if (ec) stats.warnings.push_back("error walking " + root.string() + ": " + ec.message());
  }
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.source, a.root_index) < std::tie(b.source, b.root_index);
  });
  return out;
}

}  // namespace

std::set<std::string> read_repo_manifest(const fs::path& path) {
  const auto text = read_file(path);
  if (!text) throw Error(ErrorCode::IoError, "cannot read manifest " + path.string());
  std::set<std::string> repos;
  std::istringstream in(*text);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    repos.insert(line.substr(b, e - b + 1));
  }
  return repos;
}

std::vector<CorpusFile> ingest(const std::vector<fs::path>& roots, const IngestConfig& config,
                               IngestStats* stats_out) {
  IngestStats stats;
  std::vector<CorpusFile> files;
  std::set<std::string> seen_hashes;
  for (const Candidate& c : list_files(roots, stats)) {
    ++stats.files_seen;
    const auto grammar = config.registry.grammar_for(c.path);
    if (!grammar || (!config.languages.empty() && !config.languages.count(*grammar))) {
      ++stats.unsupported;
      if (!grammar) stats.warnings.push_back("skipping unsupported file " + c.source);
      continue;
    }
    auto content = read_file(c.path);
    if (!content) {
      ++stats.unreadable;
      stats.warnings.push_back("cannot read " + c.path.string());
      continue;
    }
    if (!is_valid_utf8(*content)) {
      ++stats.rejected;
      stats.warnings.push_back("skipping non-UTF-8 file " + c.source);
      continue;
    }
    if (contains_marker_text(*content)) {
      ++stats.rejected;
      stats.warnings.push_back("skipping file containing marker text " + c.source);
      continue;
    }
    std::string hash = content_hash(*content);
    if (!seen_hashes.insert(hash).second) {
      ++stats.duplicates;
      continue;
    }
    CorpusFile file;
    file.path = c.path;
    file.source = c.source;
    file.repo = repo_of(c.source);
    file.language = *grammar;
    file.content_hash = std::move(hash);
    file.content = std::move(*content);
    files.push_back(std::move(file));
  }

  std::set<std::string> valid = config.valid_repos;
  if (valid.empty() && config.valid_repo_count > 0) {
    std::set<std::string> repos;
    for (const CorpusFile& f : files) repos.insert(f.repo);
    std::vector<std::pair<std::string, std::string>> keyed;
    for (const std::string& r : repos) keyed.emplace_back(content_hash(r), r);
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t i = 0; i < keyed.size() && i < config.valid_repo_count; ++i) {
      valid.insert(keyed[i].second);
    }
  }
  for (CorpusFile& f : files) f.split = valid.count(f.repo) ? Split::Valid : Split::Train;

  std::sort(files.begin(), files.end(), [](const CorpusFile& a, const CorpusFile& b) {
    return a.content_hash < b.content_hash;
  });
  stats.kept = files.size();
  if (stats_out) *stats_out = std::move(stats);
  return files;
}

// ---------------------------------------------------------------------------
// Truncation

TruncationResult truncate_file(const SyntaxTree& tree, Rng& rng, const Language& lang,
                               const TruncationConfig& config) {
  if (config.segment_min < 1 || config.segment_max < config.segment_min) {
    throw Error(ErrorCode::InvalidBounds, "segment bounds must satisfy 1 <= min <= max");
  }
  TruncationResult result;
  result.shortened = tree;
  std::vector<std::pair<std::uint32_t, SyntaxTree>> taken;
  SpanOptions options;
  options.min_seed_leaves = config.segment_min;
  options.require_min_seed = true;
  options.exclude_markers = true;

  while (result.shortened.leaf_count() > config.threshold && taken.size() < config.max_segments) {
    const SyntaxTree& current = result.shortened;
    std::optional<SpanSelection> found;
    for (std::size_t a = 0; a < config.attempts_per_segment && !found; ++a) {
      const std::size_t length =
          config.segment_min + rng.index(config.segment_max - config.segment_min + 1);
      // Files made of many small siblings have no single node of segment
      // size; a smaller seed can still grow into a long enough run.
      options.min_seed_leaves = config.segment_min;
      auto span = select_span(current, length, rng, options);
      if (!span) {
        options.min_seed_leaves = 1;
        span = select_span(current, length, rng, options);
      }
      if (!span ||span->leaf_count < config.segment_min || span->leaf_count > config.segment_max) {
        continue;
      }
      if (current.node(span->sibling_run.front()).parent == kNoNode) continue;
      found = std::move(span);
    }
    if (!found) break;
    const std::uint32_t at = current.leaf(found->leaf_start).byte_begin;
    SyntaxTree segment = current.extract_run(found->sibling_run);
    SyntaxTree shortened = current.replace_run(found->sibling_run, make_marker(MarkerKind::Fold, lang, at));
    taken.emplace_back(at, std::move(segment));
    result.shortened = std::move(shortened);
  }
  std::stable_sort(taken.begin(), taken.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [at, segment] : taken) result.segments.push_back(std::move(segment));
  return result;
}

std::vector<std::string> unfold(const TruncationResult& result) {
  std::vector<std::string> out;
  std::size_t next = 0;
  for (const Token& t : result.shortened.leaves()) {
    if (t.marker == MarkerKind::Fold && next < result.segments.size()) {
      for (const Token& s : result.segments[next].leaves()) out.push_back(s.text);
      ++next;
    } else {
      out.push_back(t.text);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pair generation

namespace {

bool covers_all_content(const SyntaxTree& input, const SpanSelection& span) {
  const auto leaves = input.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (i >= span.leaf_start && i < span.leaf_end()) continue;
    if (!leaves[i].is_whitespace() && !leaves[i].is_marker()) return false;
  }
  return true;
}

}  // namespace

std::optional<PairTrace> generate_pair(const SyntaxTree& input, const PairConfig& config,
                                       Rng& span_rng, Rng& mask_rng) {
  if (input.leaf_count() == 0) return std::nullopt;
  const Language& lang = input.language();
  SpanOptions options;
  options.exclude_markers = true;

  std::optional<SplitResult> chosen;
  for (std::size_t attempt = 0; attempt < config.span_attempts && !chosen; ++attempt) {
    const std::size_t length = sample_target_length(span_rng, config.mean, config.stddev,
                                                     config.min_length, config.max_length);
    const auto span = select_span(input, length, span_rng, options);
    if (!span) continue;
    SplitResult split_result = split(input, *span, lang);
    if (whitespace_only(split_result.target)) continue;
    if (covers_all_content(input, *span)) continue;
    chosen = std::move(split_result);
  }
  if (!chosen) return std::nullopt;

  PairTrace trace;
  trace.split = std::move(*chosen);
  if (config.identifier_masking) {
    const auto mutuals = mutual_identifiers(trace.split.context, trace.split.target);
    trace.plan = plan_masking(mutuals, mask_rng, config.mask_prob, config.skip_pair_prob);
    trace.masked = apply_masking(trace.split.context, trace.split.target, trace.plan);
  } else {
    trace.plan.mutual_identifiers = mutual_identifiers(trace.split.context, trace.split.target);
    for (const std::string& id : trace.plan.mutual_identifiers) {
      trace.plan.decisions.emplace(id, MaskSide::Unmasked);
    }
    trace.plan.skip_pair = true;
    trace.masked = {trace.split.context, trace.split.target};
  }
  if (config.dedent) {
    DedentResult dedented = dedent_target(trace.masked.target);
    trace.dedent_columns = dedented.dedent_columns;
    trace.final_target = std::move(dedented.tokens);
  } else {
    trace.final_target = trace.masked.target;
  }

  ContextTargetPair& pair = trace.pair;
  pair.language = lang.name;
  pair.context = join_tokens(trace.masked.context);
  pair.target = join_tokens(trace.final_target);
  pair.meta.span_start = trace.split.span.leaf_start;
  pair.meta.span_len = trace.split.span.leaf_count;
  pair.meta.dedent_cols = trace.dedent_columns;
  pair.meta.skipped_masking = trace.plan.skip_pair;
  pair.meta.context_aliases = aliases_on(trace.plan, MaskSide::Context);
  pair.meta.target_aliases = aliases_on(trace.plan, MaskSide::Target);
  return trace;
}

namespace {

constexpr std::uint64_t kTruncationStream = 0x7472756e63617465ULL;

}  // namespace

std::vector<ContextTargetPair> make_file_pairs(const CorpusFile& file, const PairConfig& config,
                                               std::uint64_t master_seed, PairStats* stats) {
  PairStats local;
  PairStats& st = stats ? *stats : local;
  ++st.files;
  const Language& lang = language(file.language);
  const SyntaxTree tree = parse(file.content, lang);
  const std::uint64_t seed = file_seed(master_seed, file.content_hash);
  const Rng base(seed);

  std::vector<SyntaxTree> inputs;
  if (tree.leaf_count() > config.truncation.threshold) {
    Rng truncation_rng = base.fork(kTruncationStream);
    TruncationResult truncated = truncate_file(tree, truncation_rng, lang, config.truncation);
    if (!truncated.segments.empty()) {
      ++st.truncated_files;
      st.segments += truncated.segments.size();
    }
    inputs.push_back(std::move(truncated.shortened));
    for (SyntaxTree& s : truncated.segments) inputs.push_back(std::move(s));
  } else {
    inputs.push_back(tree);
  }

  std::vector<ContextTargetPair> pairs;
  const std::string short_hash = file.content_hash.substr(0, 16);
  for (std::size_t x = 0; x < inputs.size(); ++x) {
    ++st.inputs;
    for (std::size_t s = 0; s < config.samples_per_input; ++s) {
      Rng span_rng = base.fork(Rng::mix(x, 2 * s + 1));
      Rng mask_rng = base.fork(Rng::mix(x, 2 * s + 2));
      auto trace = generate_pair(inputs[x], config, span_rng, mask_rng);
      if (!trace) {
        ++st.rejected_inputs;
        st.warnings.push_back(file.source + ": input " + std::to_string(x) +
                              " yielded no usable span");
        continue;
      }
      ContextTargetPair pair = std::move(trace->pair);
      pair.id = short_hash + "-" + std::to_string(x) + "-" + std::to_string(s);
      pair.meta.source = file.source;
      pair.meta.seed = seed;
      pairs.push_back(std::move(pair));
    }
  }
  st.pairs += pairs.size();
  return pairs;
}

std::vector<ContextTargetPair> make_pairs(const std::vector<CorpusFile>& files,
                                          const PairConfig& config, std::uint64_t master_seed,
                                          std::size_t jobs, PairStats* stats) {
  std::vector<std::size_t> order(files.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return files[a].content_hash < files[b].content_hash;
  });

  std::vector<std::vector<ContextTargetPair>> results(files.size());
  std::vector<PairStats> file_stats(files.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= order.size()) return;
      const CorpusFile& file = files[order[k]];
      try {
        results[k] = make_file_pairs(file, config, master_seed, &file_stats[k]);
      } catch (const Error& e) {
        results[k].clear();
        file_stats[k].failed_files = 1;
        file_stats[k].warnings.push_back(file.source + ": " + e.what());
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, files.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  std::vector<ContextTargetPair> out;
  PairStats total;
  for (std::size_t k = 0; k < results.size(); ++k) {
    for (ContextTargetPair& p : results[k]) out.push_back(std::move(p));
    const PairStats& fs_ = file_stats[k];
    total.files += fs_.files;
    total.inputs += fs_.inputs;
    total.pairs += fs_.pairs;
    total.truncated_files += fs_.truncated_files;
    total.segments += fs_.segments;
    total.rejected_inputs += fs_.rejected_inputs;
    total.failed_files += fs_.failed_files;
    total.warnings.insert(total.warnings.end(), fs_.warnings.begin(), fs_.warnings.end());
  }
  if (stats) *stats = std::move(total);
  return out;
}

// ---------------------------------------------------------------------------
// Batching

std::size_t pair_tokens(const ContextTargetPair& pair, std::size_t cap) {
  return std::min(encoder_tokens(pair.context).size(), cap) +
         std::min(encoder_tokens(pair.target).size(), cap);
}

std::vector<Batch> batch_by_language(const std::vector<ContextTargetPair>& pairs,
                                     std::size_t budget, const TokenCounter& count) {
  std::vector<Batch> out;
  std::map<std::string, Batch> open;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::size_t n = count ? count(pairs[i]) : pair_tokens(pairs[i]);
    if (n > budget) {
      throw Error(ErrorCode::InvalidConfig, "pair " + pairs[i].id + " has " + std::to_string(n) +
                                                " tokens, more than the budget of " +
                                                std::to_string(budget));
    }
    Batch& batch = open[pairs[i].language];
    if (!batch.members.empty() && batch.token_count + n > budget) {
      out.push_back(std::move(batch));
      batch = Batch{};
    }
    batch.language = pairs[i].language;
    batch.members.push_back(i);
    batch.token_count += n;
  }
  for (auto& [lang, batch] : open) {
    if (!batch.members.empty()) out.push_back(std::move(batch));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

std::string to_json_line(const ContextTargetPair& pair) {
  ordered_json aliases;
  aliases["context"] = ordered_json::object();
  aliases["target"] = ordered_json::object();
  for (const auto& [id, alias] : pair.meta.context_aliases) aliases["context"][id] = alias;
  for (const auto& [id, alias] : pair.meta.target_aliases) aliases["target"][id] = alias;
  ordered_json meta;
  meta["source"] = pair.meta.source;
  meta["span_start"] = pair.meta.span_start;
  meta["span_len"] = pair.meta.span_len;
  meta["dedent_cols"] = pair.meta.dedent_cols;
  meta["skipped_masking"] = pair.meta.skipped_masking;
  meta["aliases"] = std::move(aliases);
  meta["seed"] = pair.meta.seed;
  ordered_json j;
  j["id"] = pair.id;
  j["language"] = pair.language;
  j["context"] = pair.context;
  j["target"] = pair.target;
  j["meta"] = std::move(meta);
  return j.dump();
}

namespace {

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + what);
}

const ordered_json& field(const ordered_json& obj, const char* name, std::size_t line,
                          const char* where) {
  const auto it = obj.find(name);
  if (it == obj.end()) schema_error(line, std::string("missing field '") + where + name + "'");
  return *it;
}

std::string string_field(const ordered_json& obj, const char* name, std::size_t line,
                         const char* where = "") {
  const ordered_json& v = field(obj, name, line, where);
  if (!v.is_string()) schema_error(line, std::string("field '") + where + name + "' must be a string");
  return v.get<std::string>();
}

std::uint64_t uint_field(const ordered_json& obj, const char* name, std::size_t line) {
  const ordered_json& v = field(obj, name, line, "meta.");
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    schema_error(line, std::string("field 'meta.") + name + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::map<std::string, std::string> alias_field(const ordered_json& aliases, const char* side,
                                               std::size_t line) {
  const ordered_json& v = field(aliases, side, line, "meta.aliases.");
  if (!v.is_object()) schema_error(line, std::string("field 'meta.aliases.") + side + "' must be an object");
  std::map<std::string, std::string> out;
  for (const auto& [k, a] : v.items()) {
    if (!a.is_string()) schema_error(line, "alias values must be strings");
    out.emplace(k, a.get<std::string>());
  }
  return out;
}

}  // namespace

ContextTargetPair from_json_line(std::string_view text, std::size_t line) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    schema_error(line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) schema_error(line, "expected a JSON object");
  ContextTargetPair pair;
  pair.id = string_field(j, "id", line);
  pair.language = string_field(j, "language", line);
  pair.context = string_field(j, "context", line);
  pair.target = string_field(j, "target", line);
  const ordered_json& meta = field(j, "meta", line, "");
  if (!meta.is_object()) schema_error(line, "field 'meta' must be an object");
  pair.meta.source = string_field(meta, "source", line, "meta.");
  pair.meta.span_start = uint_field(meta, "span_start", line);
  pair.meta.span_len = uint_field(meta, "span_len", line);
  const std::uint64_t dedent = uint_field(meta, "dedent_cols", line);
  if (dedent > UINT32_MAX) schema_error(line, "field 'meta.dedent_cols' out of range");
  pair.meta.dedent_cols = static_cast<std::uint32_t>(dedent);
  const ordered_json& skipped = field(meta, "skipped_masking", line, "meta.");
  if (!skipped.is_boolean()) schema_error(line, "field 'meta.skipped_masking' must be a boolean");
  pair.meta.skipped_masking = skipped.get<bool>();
  const ordered_json& aliases = field(meta, "aliases", line, "meta.");
  if (!aliases.is_object()) schema_error(line, "field 'meta.aliases' must be an object");
  pair.meta.context_aliases = alias_field(aliases, "context", line);
  pair.meta.target_aliases = alias_field(aliases, "target", line);
  pair.meta.seed = uint_field(meta, "seed", line);
  return pair;
}

void write_jsonl(const fs::path& path, const std::vector<ContextTargetPair>& pairs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const ContextTargetPair& p : pairs) out << to_json_line(p) << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<ContextTargetPair> read_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<ContextTargetPair> pairs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      pairs.push_back(from_json_line(line, number));
    } catch (const Error& e) {
      throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return pairs;
}

std::vector<fs::path> write_shards(const fs::path& dir, const std::vector<ContextTargetPair>& pairs,
                                   std::size_t per_shard) {
  if (per_shard == 0) throw Error(ErrorCode::InvalidConfig, "pairs per shard must be positive");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") fs::remove(entry.path());
  }
  std::map<std::string, std::vector<ContextTargetPair>> by_language;
  for (const ContextTargetPair& p : pairs) by_language[p.language].push_back(p);
  std::vector<fs::path> written;
  for (const auto& [lang, group] : by_language) {
    for (std::size_t begin = 0, shard = 0; begin < group.size(); begin += per_shard, ++shard) {
      char name[64];
      std::snprintf(name, sizeof name, "-%05zu.jsonl", shard);
      const fs::path path = dir / (lang + name);
      const auto end = group.begin() + static_cast<std::ptrdiff_t>(std::min(group.size(), begin + per_shard));
      write_jsonl(path, std::vector<ContextTargetPair>(group.begin() + static_cast<std::ptrdiff_t>(begin), end));
      written.push_back(path);
    }
  }
  return written;
}

std::vector<ContextTargetPair> read_shards(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ContextTargetPair> out;
  for (const fs::path& f : files) {
    auto part = read_jsonl(f);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace ctxsearch
