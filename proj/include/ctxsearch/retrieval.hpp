#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxsearch/embedding.hpp"

namespace ctxsearch {

struct ScoredCandidate {
  std::string id;
  double score = 0.0;

  bool operator==(const ScoredCandidate&) const = default;
};

/// Candidates by descending score, ties by ascending id.
struct RankedList {
  std::string query_id;
  std::vector<ScoredCandidate> items;
};

struct RelevanceJudgments {
  std::map<std::string, std::set<std::string>> relevant;  // query -> targets
  std::map<std::string, std::string> original;            // query -> excluded target
};

/// Ranks candidates by cosine similarity to the query, dropping `exclude`.
/// Throws Error(DimensionMismatch) or Error(ZeroVector).
RankedList rank(const std::string& query_id, const Embedding& query,
                const std::map<std::string, Embedding>& candidates,
                const std::optional<std::string>& exclude = std::nullopt);

/// Orders precomputed scores the same way.
RankedList rank_scores(const std::string& query_id, std::vector<ScoredCandidate> scores,
                       const std::optional<std::string>& exclude = std::nullopt);

/// Relevant items in the top k over min(k, list length). Throws
/// Error(InvalidBounds) for k = 0.
double precision_at_k(const RankedList& list, const std::set<std::string>& relevant, std::size_t k);

/// Mean over relevant items of precision at their rank; relevant items
/// missing from the list contribute 0. Throws Error(NoRelevant).
double average_precision(const RankedList& list, const std::set<std::string>& relevant);

/// Binary-gain NDCG with log2(rank + 1) discount. Throws Error(NoRelevant).
double ndcg(const RankedList& list, const std::set<std::string>& relevant);

/// 1 / rank of the first relevant item, 0 if none is ranked. Throws
/// Error(NoRelevant).
double reciprocal_rank(const RankedList& list, const std::set<std::string>& relevant);

/// Macro averages over the lists; each list's judgments come from
/// `judgments.relevant[list.query_id]`.
double mean_average_precision(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments);
double mean_ndcg(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments);
double mean_reciprocal_rank(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments);

inline constexpr std::size_t kReportedCutoffs[] = {1, 3, 10};

struct QueryMetrics {
  std::string query_id;
  double average_precision = 0.0;
  double ndcg = 0.0;
  std::map<std::size_t, double> precision_at;
  double reciprocal_rank = 0.0;
  std::size_t relevant = 0;
  std::size_t ranked = 0;
};

struct MetricReport {
  double map = 0.0;
  double ndcg = 0.0;
  std::map<std::size_t, double> precision_at;
  double mrr = 0.0;
  std::size_t queries = 0;
  std::size_t candidates = 0;
  std::vector<QueryMetrics> per_query;
};

/// Metrics of already ranked lists.
MetricReport report_for(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments,
                        std::size_t candidate_count);

/// Ranks every candidate for every judged query (excluding its original
/// target) and aggregates the metrics. Queries are processed in id order;
/// `jobs` only affects speed. Throws Error(SchemaError) when a judged id has
/// no embedding and Error(NoRelevant) for a query without relevant targets.
MetricReport evaluate(const std::map<std::string, Embedding>& query_embeddings,
                      const std::map<std::string, Embedding>& candidate_embeddings,
                      const RelevanceJudgments& judgments, std::size_t jobs = 1);

/// JSON: {map, ndcg, p_at:{1,3,10}, mrr, queries, candidates, conventions, per_query}.
std::string report_json(const MetricReport& report, bool include_per_query = true);
std::string report_table(const MetricReport& report);

// ---------------------------------------------------------------------------
// COCOS-format files

struct QueryRecord {
  std::string query_id;
  std::string language;
  std::string context;
};

struct CandidateRecord {
  std::string target_id;
  std::string language;
  std::string text;
};

struct QrelRecord {
  std::string query_id;
  std::string target_id;
  int relevance = 0;
  int is_original = 0;
};

std::vector<QueryRecord> read_queries(const std::filesystem::path& path);
std::vector<CandidateRecord> read_candidates(const std::filesystem::path& path);
std::vector<QrelRecord> read_qrels(const std::filesystem::path& path);

void write_queries(const std::filesystem::path& path, const std::vector<QueryRecord>& records);
void write_candidates(const std::filesystem::path& path, const std::vector<CandidateRecord>& records);
void write_qrels(const std::filesystem::path& path, const std::vector<QrelRecord>& records);

/// Relevant sets from relevance=1 rows, minus each query's original target.
RelevanceJudgments judgments_from(const std::vector<QrelRecord>& qrels);

/// Embeddings from JSONL lines {"id": ..., "embedding": [...]}.
std::map<std::string, Embedding> read_embeddings(const std::filesystem::path& path);

/// Jaccard overlap of encoder-token sets (markers excluded); the lexical
/// baseline used to measure surface leakage.
double lexical_similarity(const std::string& a, const std::string& b);

/// Evaluates the lexical baseline over query and candidate texts.
MetricReport evaluate_lexical(const std::map<std::string, std::string>& queries,
                              const std::map<std::string, std::string>& candidates,
                              const RelevanceJudgments& judgments, std::size_t jobs = 1);

}  // namespace ctxsearch
