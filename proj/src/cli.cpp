#include "ctxsearch/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ctxsearch/contrastive.hpp"
#include "ctxsearch/errors.hpp"
#include "ctxsearch/lexer.hpp"
#include "ctxsearch/pipeline.hpp"
#include "ctxsearch/retrieval.hpp"

namespace ctxsearch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string version_string() {
  return "ctxsearch 0.1.0\ngrammars: " + grammar_versions() + "\n";
}

namespace {

// Registers options on a subcommand and remembers how to serialise their
// resolved values, so every run can echo its configuration.
class OptionSet {
 public:
  explicit OptionSet(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* add(const std::string& name, T& ref, const std::string& description) {
    echo_.emplace_back([name, &ref](ordered_json& j) { j[name] = ref; });
    return app_->add_option("--" + name, ref, description)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& ref, const std::string& description) {
    echo_.emplace_back([name, &ref](ordered_json& j) { j[name] = ref; });
    return app_->add_flag("--" + name, ref, description);
  }

  ordered_json resolved(const std::string& subcommand) const {
    ordered_json j;
    j["subcommand"] = subcommand;
    for (const auto& f : echo_) f(j);
    return j;
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::function<void(ordered_json&)>> echo_;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string scalar_text(const ordered_json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

// Fills options not given on the command line from a JSON config file.
void apply_config_file(const std::string& path, const std::string& subcommand, CLI::App* app) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file " + path + " must hold a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "subcommand") {
      if (!value.is_string() || value.get<std::string>() != subcommand) {
        throw UsageError("config file is for subcommand '" + scalar_text(value) + "'");
      }
      continue;
    }
    if (key == "config") continue;
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (!opt) throw UsageError("unknown config key '" + key + "'");
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(scalar_text(v));
    } else {
      opt->add_result(scalar_text(value));
    }
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

using Logger = std::shared_ptr<spdlog::logger>;

Logger make_logger(std::ostream& err, bool quiet) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("ctxsearch", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(quiet ? spdlog::level::warn : spdlog::level::info);
  return logger;
}

void log_warnings(const Logger& log, const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) log->warn("{}", w);
}

// ---------------------------------------------------------------------------
// Options per subcommand

struct CommonOptions {
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string config;
  bool quiet = false;
};

struct CorpusOptions {
  std::vector<std::string> inputs;
  std::string manifest;
  std::vector<std::string> langs;
  std::string grammar_config;
  std::string valid_manifest;
  std::size_t valid_repos = 0;
};

struct PairOptions {
  std::uint64_t seed = 0;
  double mean = kDefaultTargetMean;
  double stddev = kDefaultTargetStddev;
  std::size_t min_len = kDefaultTargetMin;
  std::size_t max_len = kDefaultTargetMax;
  double mask_prob = kDefaultMaskProb;
  double skip_prob = kDefaultSkipPairProb;
  std::size_t threshold = 1024;
  std::size_t samples = 1;
  bool no_im = false;
  bool no_de = false;
  std::size_t shard_size = 10000;
  std::string out;
};

struct TrainOptions {
  std::string shards;
  std::size_t steps = 1000;
  double lr = 1.0;
  std::uint64_t seed = 0;
  std::size_t d = kDefaultDimension;
  std::size_t buckets = kDefaultBuckets;
  double tau = kDefaultTemperature;
  bool negatives_only_loss = false;
  std::size_t budget = kDefaultTokenBudget;
  std::size_t max_tokens = kMaxSequenceTokens;
  double warmup = 0.1;
  double power = 1.0;
  std::size_t eval_every = 100;
  std::size_t valid_cap = 30000;
  std::string out = "toy.ckpt";
};

struct EvalOptions {
  std::string queries;
  std::string candidates;
  std::string qrels;
  std::string embeddings;
  std::string model = "embeddings";
  std::string out;
  bool no_per_query = false;
};

struct BatchOptions {
  std::string shards;
  std::size_t budget = kDefaultTokenBudget;
  std::string out;
};

struct InspectOptions {
  std::string shards;
  std::string file;
  std::string id;
  bool color = false;
};

void add_common(OptionSet& set, CommonOptions& o) {
  set.add("jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  set.app()->add_option("--config", o.config, "JSON file of option values (flags take precedence)");
  set.app()->add_flag("--quiet", o.quiet, "Only log warnings and errors");
}

void add_corpus(OptionSet& set, CorpusOptions& o) {
  set.add("input", o.inputs, "Input directory or file (repeatable)");
  set.add("manifest", o.manifest, "Corpus manifest written by `prepare`");
  set.add("langs", o.langs, "Grammars to keep (comma separated)")->delimiter(',');
  set.add("grammar-config", o.grammar_config, "Extension to grammar mapping file (ext=grammar)");
  set.add("valid-manifest", o.valid_manifest, "File listing validation repositories");
  set.add("valid-repos", o.valid_repos, "Repositories reserved for validation when no list is given");
}

// ---------------------------------------------------------------------------
// Corpus loading

IngestConfig ingest_config(const CorpusOptions& o) {
  IngestConfig config;
  if (!o.grammar_config.empty()) config.registry.load_config_file(o.grammar_config);
  for (const std::string& l : o.langs) {
    language(l);
    config.languages.insert(l);
  }
  if (!o.valid_manifest.empty()) config.valid_repos = read_repo_manifest(o.valid_manifest);
  config.valid_repo_count = o.valid_repos;
  return config;
}

ordered_json manifest_line(const CorpusFile& f) {
  ordered_json j;
  j["source"] = f.source;
  j["path"] = f.path.generic_string();
  j["repo"] = f.repo;
  j["language"] = f.language;
  j["content_hash"] = f.content_hash;
  j["split"] = std::string(to_string(f.split));
  j["bytes"] = f.content.size();
  return j;
}

std::vector<CorpusFile> read_corpus_manifest(const std::string& path, const Logger& log) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read manifest " + path);
  std::vector<CorpusFile> files;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CorpusFile f;
    try {
      const auto j = ordered_json::parse(line);
      f.source = j.at("source").get<std::string>();
      f.path = j.at("path").get<std::string>();
      f.repo = j.at("repo").get<std::string>();
      f.language = j.at("language").get<std::string>();
      f.content_hash = j.at("content_hash").get<std::string>();
      f.split = j.at("split").get<std::string>() == "valid" ? Split::Valid : Split::Train;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, path + ": line " + std::to_string(number) + ": " + e.what());
    }
    std::ifstream src(f.path, std::ios::binary);
    if (!src) {
      log->warn("cannot read {}, skipping", f.path.string());
      continue;
    }
    std::ostringstream ss;
    ss << src.rdbuf();
    f.content = std::move(ss).str();
    if (content_hash(f.content) != f.content_hash) {
      log->warn("{} changed since the manifest was written, skipping", f.source);
      continue;
    }
    files.push_back(std::move(f));
  }
  std::sort(files.begin(), files.end(),
            [](const CorpusFile& a, const CorpusFile& b) { return a.content_hash < b.content_hash; });
  return files;
}

std::vector<CorpusFile> load_corpus(const CorpusOptions& o, const Logger& log) {
  if (!o.manifest.empty()) {
    if (!o.inputs.empty()) throw UsageError("give either --input or --manifest, not both");
    return read_corpus_manifest(o.manifest, log);
  }
  if (o.inputs.empty()) throw UsageError("--input or --manifest is required");
  std::vector<fs::path> roots(o.inputs.begin(), o.inputs.end());
  for (const fs::path& root : roots) {
    std::error_code ec;
    if (!fs::exists(root, ec)) throw Error(ErrorCode::IoError, "input does not exist: " + root.string());
  }
  IngestStats stats;
  auto files = ingest(roots, ingest_config(o), &stats);
  log_warnings(log, stats.warnings);
  log->info("ingested {} files: {} kept, {} duplicates, {} unsupported, {} unreadable, {} rejected",
            stats.files_seen, stats.kept, stats.duplicates, stats.unsupported, stats.unreadable,
            stats.rejected);
  return files;
}

struct ShardDirs {
  fs::path train;
  std::optional<fs::path> valid;
};

ShardDirs shard_dirs(const std::string& dir) {
  ShardDirs d;
  const fs::path root(dir);
  if (fs::is_directory(root / "train")) {
    d.train = root / "train";
    if (fs::is_directory(root / "valid")) d.valid = root / "valid";
  } else {
    d.train = root;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_prepare(const CorpusOptions& o, const std::string& out_path, std::ostream& out,
                const Logger& log) {
  if (!o.manifest.empty()) throw UsageError("prepare reads --input directories");
  const auto files = load_corpus(o, log);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + out_path);
    sink = &file;
  }
  std::size_t valid = 0;
  for (const CorpusFile& f : files) {
    *sink << manifest_line(f).dump() << '\n';
    valid += f.split == Split::Valid;
  }
  log->info("{} files ({} train, {} valid)", files.size(), files.size() - valid, valid);
  return kExitOk;
}

PairConfig pair_config(const PairOptions& o) {
  PairConfig c;
  c.mean = o.mean;
  c.stddev = o.stddev;
  c.min_length = o.min_len;
  c.max_length = o.max_len;
  c.mask_prob = o.mask_prob;
  c.skip_pair_prob = o.skip_prob;
  c.identifier_masking = !o.no_im;
  c.dedent = !o.no_de;
  c.samples_per_input = o.samples;
  c.truncation.threshold = o.threshold;
  return c;
}

int cmd_pairs(const CommonOptions& common, const CorpusOptions& co, const PairOptions& o,
              std::ostream& out, const Logger& log) {
  if (o.out.empty()) throw UsageError("--out is required");
  const PairConfig config = pair_config(o);
  if (!(config.mask_prob >= 0 && config.mask_prob <= 1 && config.skip_pair_prob >= 0 &&
        config.skip_pair_prob <= 1)) {
    throw UsageError("--mask-prob and --skip-prob must lie in [0, 1]");
  }
  if (config.min_length < 1 || config.max_length < config.min_length || config.stddev < 0) {
    throw UsageError("require 1 <= --min-len <= --max-len and --stddev >= 0");
  }
  const auto files = load_corpus(co, log);
  std::vector<CorpusFile> train_files, valid_files;
  for (const CorpusFile& f : files) (f.split == Split::Valid ? valid_files : train_files).push_back(f);

  PairStats train_stats, valid_stats;
  const auto train = make_pairs(train_files, config, o.seed, common.jobs, &train_stats);
  const auto valid = make_pairs(valid_files, config, o.seed, common.jobs, &valid_stats);
  log_warnings(log, train_stats.warnings);
  log_warnings(log, valid_stats.warnings);

  const fs::path root(o.out);
  const auto train_shards = write_shards(root / "train", train, o.shard_size);
  const auto valid_shards = write_shards(root / "valid", valid, o.shard_size);

  ordered_json stats;
  const auto stats_of = [](const PairStats& s, std::size_t shards) {
    ordered_json j;
    j["files"] = s.files;
    j["inputs"] = s.inputs;
    j["pairs"] = s.pairs;
    j["truncated_files"] = s.truncated_files;
    j["segments"] = s.segments;
    j["rejected_inputs"] = s.rejected_inputs;
    j["failed_files"] = s.failed_files;
    j["shards"] = shards;
    return j;
  };
  stats["train"] = stats_of(train_stats, train_shards.size());
  stats["valid"] = stats_of(valid_stats, valid_shards.size());
  std::ofstream sf(root / "stats.json", std::ios::binary | std::ios::trunc);
  if (!sf) throw Error(ErrorCode::IoError, "cannot write " + (root / "stats.json").string());
  sf << stats.dump(2) << '\n';

  out << "train: " << train.size() << " pairs in " << train_shards.size() << " shards\n"
      << "valid: " << valid.size() << " pairs in " << valid_shards.size() << " shards\n";
  return kExitOk;
}

int cmd_batch(const BatchOptions& o, std::ostream& out, const Logger& log) {
  if (o.shards.empty()) throw UsageError("--shards is required");
  const auto pairs = read_shards(shard_dirs(o.shards).train);
  const auto batches = batch_by_language(pairs, o.budget);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!o.out.empty() && o.out != "-") {
    file.open(o.out, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::IoError, "cannot write " + o.out);
    sink = &file;
  }
  for (std::size_t i = 0; i < batches.size(); ++i) {
    ordered_json j;
    j["batch"] = i;
    j["language"] = batches[i].language;
    j["token_count"] = batches[i].token_count;
    ordered_json ids = ordered_json::array();
    for (std::size_t m : batches[i].members) ids.push_back(pairs[m].id);
    j["pairs"] = std::move(ids);
    *sink << j.dump() << '\n';
  }
  log->info("{} pairs in {} batches", pairs.size(), batches.size());
  return kExitOk;
}

int cmd_eval(const CommonOptions& common, const EvalOptions& o, std::ostream& out, const Logger& log) {
  if (o.queries.empty() || o.candidates.empty() || o.qrels.empty()) {
    throw UsageError("--queries, --candidates and --qrels are required");
  }
  const auto queries = read_queries(o.queries);
  const auto candidates = read_candidates(o.candidates);
  const auto judgments = judgments_from(read_qrels(o.qrels));
  MetricReport report;
  if (o.model == "lexical") {
    std::map<std::string, std::string> q, c;
    for (const auto& r : queries) q[r.query_id] = r.context;
    for (const auto& r : candidates) c[r.target_id] = r.text;
    report = evaluate_lexical(q, c, judgments, common.jobs);
  } else if (o.model == "toy" || o.model == "embeddings") {
    if (o.embeddings.empty()) throw UsageError("--embeddings is required for model " + o.model);
    std::map<std::string, Embedding> q, c;
    if (o.model == "toy") {
      const ToyEncoder encoder = load_checkpoint(o.embeddings);
      for (const auto& r : queries) q[r.query_id] = encoder.encode(r.context);
      for (const auto& r : candidates) c[r.target_id] = encoder.encode(r.text);
    } else {
      const auto all = read_embeddings(o.embeddings);
      for (const auto& r : queries) {
        if (const auto it = all.find(r.query_id); it != all.end()) q[r.query_id] = it->second;
      }
      for (const auto& r : candidates) {
        if (const auto it = all.find(r.target_id); it != all.end()) c[r.target_id] = it->second;
      }
    }
    report = evaluate(q, c, judgments, common.jobs);
  } else {
    throw UsageError("--model must be one of embeddings, toy, lexical");
  }
  out << report_table(report);
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, "cannot write " + o.out);
    f << report_json(report, !o.no_per_query) << '\n';
    log->info("report written to {}", o.out);
  }
  return kExitOk;
}

int cmd_train(const TrainOptions& o, const ordered_json& resolved, std::ostream& out,
              const Logger& log) {
  if (o.shards.empty()) throw UsageError("--shards is required");
  const ShardDirs dirs = shard_dirs(o.shards);
  const auto train = read_shards(dirs.train);
  const auto valid = dirs.valid ? read_shards(*dirs.valid) : std::vector<ContextTargetPair>{};
  TrainConfig config;
  config.steps = o.steps;
  config.learning_rate = o.lr;
  config.warmup_fraction = o.warmup;
  config.decay_power = o.power;
  config.token_budget = o.budget;
  config.eval_every = o.eval_every;
  config.validation_cap = o.valid_cap;
  config.seed = o.seed;
  config.encoder.buckets = o.buckets;
  config.encoder.dimension = o.d;
  config.encoder.tau = o.tau;
  config.encoder.loss_form = o.negatives_only_loss ? LossForm::NegativesOnly : LossForm::Standard;
  config.encoder.max_tokens = o.max_tokens;
  config.encoder.seed = o.seed;
  log->info("training on {} pairs, validating on {}", train.size(), std::min(valid.size(), o.valid_cap));
  const TrainResult result = train_toy(train, valid, config);

  ordered_json sidecar;
  sidecar["format"] = "ctxsearch-toy-encoder";
  sidecar["version"] = 1;
  ordered_json cfg = resolved;
  cfg.erase("jobs");
  sidecar["config"] = cfg;
  sidecar["train_pairs"] = train.size();
  sidecar["valid_pairs"] = std::min(valid.size(), o.valid_cap);
  sidecar["best_step"] = result.best_step;
  sidecar["best_validation_mrr"] = result.best_mrr;
  ordered_json history = ordered_json::array();
  for (const TrainLogEntry& e : result.log) {
    history.push_back({{"step", e.step}, {"loss", e.loss}, {"lr", e.learning_rate},
                       {"validation_mrr", e.validation_mrr}});
    log->info("step {} loss {:.6f} lr {:.6f} validation mrr {:.4f}", e.step, e.loss,
              e.learning_rate, e.validation_mrr);
  }
  sidecar["log"] = std::move(history);
  save_checkpoint(o.out, result.encoder, sidecar.dump(2));
  out << "best step " << result.best_step << ", validation MRR " << result.best_mrr << "\n"
      << "checkpoint written to " << o.out << "\n";
  return kExitOk;
}

// Occurrences of each code token of `text`, ignoring string and comment
// contents. Marker texts are blanked before parsing.
std::map<std::string, std::size_t> code_token_counts(const std::string& text, const Language& lang) {
  std::string blanked = text;
  for (const std::string* marker : {&lang.cls_token, &lang.mask_token, &lang.fold_token}) {
    for (auto at = blanked.find(*marker); at != std::string::npos; at = blanked.find(*marker, at)) {
      blanked.replace(at, marker->size(), std::string(marker->size(), ' '));
    }
  }
  std::map<std::string, std::size_t> counts;
  const SyntaxTree tree = parse(blanked, lang);
  for (const Token& t : tree.leaves()) {
    if (t.cls != TokenClass::Whitespace && t.cls != TokenClass::Literal) ++counts[t.text];
  }
  return counts;
}

int cmd_inspect(const InspectOptions& o, std::ostream& out) {
  std::vector<ContextTargetPair> pairs;
  if (!o.file.empty()) {
    pairs = read_jsonl(o.file);
  } else if (!o.shards.empty()) {
    const ShardDirs dirs = shard_dirs(o.shards);
    pairs = read_shards(dirs.train);
    if (dirs.valid) {
      auto v = read_shards(*dirs.valid);
      pairs.insert(pairs.end(), v.begin(), v.end());
    }
  } else {
    throw UsageError("--file or --shards is required");
  }
  const ContextTargetPair* pair = nullptr;
  for (const ContextTargetPair& p : pairs) {
    if (o.id.empty() || p.id == o.id) {
      pair = &p;
      break;
    }
  }
  if (!pair) throw Error(ErrorCode::SchemaError, "no pair with id '" + o.id + "'");

  const std::string mask = language(pair->language).mask_token;
  std::string context = pair->context;
  const std::string highlighted = o.color ? "\x1b[1;31m" + mask + "\x1b[0m" : ">>>" + mask + "<<<";
  if (const auto at = context.find(mask); at != std::string::npos) context.replace(at, mask.size(), highlighted);

  out << "pair " << pair->id << " (" << pair->language << ")\n"
      << "source " << pair->meta.source << ", span leaves [" << pair->meta.span_start << ", "
      << pair->meta.span_start + pair->meta.span_len << "), seed " << pair->meta.seed << "\n"
      << "dedent: " << pair->meta.dedent_cols << " columns\n"
      << "masking: " << (pair->meta.skipped_masking ? "skipped" : "applied") << "\n"
      << "--- context ---\n" << context << "\n"
      << "--- target ---\n" << pair->target << "\n"
      << "--- aliases ---\n";
  bool occluded = true;
  char row[256];
  std::snprintf(row, sizeof row, "%-24s %-8s %-8s %9s %9s\n", "identifier", "side", "alias",
                "in ctx", "in tgt");
  out << row;
  const Language& lang = language(pair->language);
  const auto context_counts = code_token_counts(pair->context, lang);
  const auto target_counts = code_token_counts(pair->target, lang);
  const auto count_in = [](const std::map<std::string, std::size_t>& counts, const std::string& id) {
    const auto it = counts.find(id);
    return it == counts.end() ? std::size_t{0} : it->second;
  };
  const auto print = [&](const std::map<std::string, std::string>& aliases, const char* side,
                         bool masked_in_context) {
    for (const auto& [id, alias] : aliases) {
      const std::size_t in_ctx = count_in(context_counts, id);
      const std::size_t in_tgt = count_in(target_counts, id);
      if ((masked_in_context ? in_ctx : in_tgt) != 0) occluded = false;
      std::snprintf(row, sizeof row, "%-24s %-8s %-8s %9zu %9zu\n", id.c_str(), side, alias.c_str(),
                    in_ctx, in_tgt);
      out << row;
    }
  };
  print(pair->meta.context_aliases, "context", true);
  print(pair->meta.target_aliases, "target", false);
  if (pair->meta.context_aliases.empty() && pair->meta.target_aliases.empty()) out << "(none)\n";
  out << "occlusion: " << (occluded ? "ok" : "VIOLATED") << "\n";
  return occluded ? kExitOk : kExitData;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leakage-reduced context/target pair generation and contextual code retrieval"};
  app.name("ctxsearch");
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print toolkit and grammar versions");

  CommonOptions common;
  CorpusOptions corpus;
  PairOptions pair;
  TrainOptions train;
  EvalOptions eval;
  BatchOptions batch;
  InspectOptions inspect;
  std::string prepare_out;

  std::map<std::string, std::unique_ptr<OptionSet>> sets;
  const auto sub = [&](const std::string& name, const std::string& help) -> OptionSet& {
    CLI::App* s = app.add_subcommand(name, help);
    auto& set = sets[name] = std::make_unique<OptionSet>(s);
    add_common(*set, common);
    return *set;
  };

  {
    OptionSet& s = sub("prepare", "Ingest and deduplicate a corpus, writing a file manifest");
    add_corpus(s, corpus);
    s.add("out", prepare_out, "Manifest path (default: stdout)");
  }
  {
    OptionSet& s = sub("pairs", "Generate context/target pair shards");
    add_corpus(s, corpus);
    s.add("seed", pair.seed, "Master seed");
    s.add("mean", pair.mean, "Mean target length in tokens");
    s.add("stddev", pair.stddev, "Standard deviation of the target length");
    s.add("min-len", pair.min_len, "Smallest target length");
    s.add("max-len", pair.max_len, "Largest target length");
    s.add("mask-prob", pair.mask_prob, "Probability of masking a mutual identifier");
    s.add("skip-prob", pair.skip_prob, "Probability of skipping masking for a whole pair");
    s.add("threshold", pair.threshold, "Files longer than this many tokens are truncated");
    s.add("samples", pair.samples, "Pairs drawn per input")->check(CLI::PositiveNumber);
    s.flag("no-im", pair.no_im, "Disable mutual identifier masking");
    s.flag("no-de", pair.no_de, "Disable target dedentation");
    s.add("shard-size", pair.shard_size, "Pairs per shard")->check(CLI::PositiveNumber);
    s.add("out", pair.out, "Output directory");
  }
  {
    OptionSet& s = sub("batch", "Group pairs into language-pure token-budgeted batches");
    s.add("shards", batch.shards, "Shard directory");
    s.add("budget", batch.budget, "Token budget per batch")->check(CLI::PositiveNumber);
    s.add("out", batch.out, "Batch manifest path (default: stdout)");
  }
  {
    OptionSet& s = sub("eval", "Evaluate retrieval on COCOS-format files");
    s.add("queries", eval.queries, "Queries JSONL");
    s.add("candidates", eval.candidates, "Candidates JSONL");
    s.add("qrels", eval.qrels, "Relevance JSONL");
    s.add("embeddings", eval.embeddings, "Embeddings JSONL, or a checkpoint with --model toy");
    s.add("model", eval.model, "embeddings | toy | lexical");
    s.add("out", eval.out, "Write the JSON report here");
    s.flag("no-per-query", eval.no_per_query, "Omit the per-query breakdown from the JSON report");
  }
  {
    OptionSet& s = sub("train-toy", "Train the hashed n-gram dual encoder");
    s.add("shards", train.shards, "Shard directory (with train/ and valid/)");
    s.add("steps", train.steps, "Optimisation steps");
    s.add("lr", train.lr, "Peak learning rate");
    s.add("seed", train.seed, "Seed for initialisation and batch order");
    s.add("d", train.d, "Embedding dimension")->check(CLI::PositiveNumber);
    s.add("buckets", train.buckets, "Feature hash buckets")->check(CLI::PositiveNumber);
    s.add("tau", train.tau, "Temperature");
    s.flag("negatives-only-loss", train.negatives_only_loss, "Exclude the positive from the denominator");
    s.add("budget", train.budget, "Token budget per batch")->check(CLI::PositiveNumber);
    s.add("max-tokens", train.max_tokens, "Tokens kept per sequence")->check(CLI::PositiveNumber);
    s.add("warmup", train.warmup, "Fraction of steps with linear warmup");
    s.add("power", train.power, "Exponent of the polynomial decay");
    s.add("eval-every", train.eval_every, "Steps between validation runs");
    s.add("valid-cap", train.valid_cap, "Validation pairs used for MRR");
    s.add("out", train.out, "Checkpoint path");
  }
  {
    OptionSet& s = sub("inspect", "Pretty-print one pair for auditing");
    s.add("shards", inspect.shards, "Shard directory");
    s.add("file", inspect.file, "Single shard file");
    s.add("id", inspect.id, "Pair id (default: the first pair)");
    s.flag("color", inspect.color, "Highlight the mask with ANSI colours");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitUsage;
  }
  if (show_version) {
    out << version_string();
    return kExitOk;
  }
  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    err << app.help();
    return kExitUsage;
  }
  CLI::App* command = chosen.front();
  const std::string name = command->get_name();
  const Logger log = make_logger(err, common.quiet);

  try {
    if (!common.config.empty()) apply_config_file(common.config, name, command);
    ordered_json resolved = sets.at(name)->resolved(name);
    log->info("config {}", resolved.dump());
    if (name == "prepare") return cmd_prepare(corpus, prepare_out, out, log);
    if (name == "pairs") return cmd_pairs(common, corpus, pair, out, log);
    if (name == "batch") return cmd_batch(batch, out, log);
    if (name == "eval") return cmd_eval(common, eval, out, log);
    if (name == "train-toy") return cmd_train(train, resolved, out, log);
    if (name == "inspect") return cmd_inspect(inspect, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << command->help();
    return kExitUsage;
  } catch (const Error& e) {
    log->error("{}", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ctxsearch
