#include "ctxsearch/retrieval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ctxsearch/errors.hpp"
#include "ctxsearch/lexer.hpp"

namespace ctxsearch {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

RankedList rank_scores(const std::string& query_id, std::vector<ScoredCandidate> scores,
                       const std::optional<std::string>& exclude) {
  if (exclude) {
    std::erase_if(scores, [&](const ScoredCandidate& c) { return c.id == *exclude; });
  }
  std::sort(scores.begin(), scores.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return RankedList{query_id, std::move(scores)};
}

RankedList rank(const std::string& query_id, const Embedding& query,
                const std::map<std::string, Embedding>& candidates,
                const std::optional<std::string>& exclude) {
  std::vector<ScoredCandidate> scores;
  scores.reserve(candidates.size());
  for (const auto& [id, vec] : candidates) {
    if (exclude && id == *exclude) continue;
    scores.push_back({id, cosine(query, vec)});
  }
  return rank_scores(query_id, std::move(scores), std::nullopt);
}

namespace {

void require_relevant(const std::set<std::string>& relevant) {
  if (relevant.empty()) throw Error(ErrorCode::NoRelevant, "query has no relevant targets");
}

}  // namespace

double precision_at_k(const RankedList& list, const std::set<std::string>& relevant, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidBounds, "k must be at least 1");
  const std::size_t depth = std::min(k, list.items.size());
  if (depth == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) hits += relevant.count(list.items[i].id);
  return static_cast<double>(hits) / static_cast<double>(depth);
}

double average_precision(const RankedList& list, const std::set<std::string>& relevant) {
  require_relevant(relevant);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (!relevant.count(list.items[i].id)) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(relevant.size());
}

double ndcg(const RankedList& list, const std::set<std::string>& relevant) {
  require_relevant(relevant);
  double dcg = 0.0;
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (relevant.count(list.items[i].id)) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
  }
  double ideal = 0.0;
  const std::size_t n = std::min(relevant.size(), list.items.size());
  for (std::size_t i = 0; i < n; ++i) ideal += 1.0 / std::log2(static_cast<double>(i + 2));
  return ideal == 0.0 ? 0.0 : dcg / ideal;
}

double reciprocal_rank(const RankedList& list, const std::set<std::string>& relevant) {
  require_relevant(relevant);
  for (std::size_t i = 0; i < list.items.size(); ++i) {
    if (relevant.count(list.items[i].id)) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

namespace {

const std::set<std::string>& relevant_for(const RelevanceJudgments& judgments, const std::string& q) {
  static const std::set<std::string> empty;
  const auto it = judgments.relevant.find(q);
  return it == judgments.relevant.end() ? empty : it->second;
}

double macro(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments,
             double (*metric)(const RankedList&, const std::set<std::string>&)) {
  if (lists.empty()) return 0.0;
  double sum = 0.0;
  for (const RankedList& l : lists) sum += metric(l, relevant_for(judgments, l.query_id));
  return sum / static_cast<double>(lists.size());
}

}  // namespace

double mean_average_precision(const std::vector<RankedList>& lists, const RelevanceJudgments& j) {
  return macro(lists, j, &average_precision);
}

double mean_ndcg(const std::vector<RankedList>& lists, const RelevanceJudgments& j) {
  return macro(lists, j, &ndcg);
}

double mean_reciprocal_rank(const std::vector<RankedList>& lists, const RelevanceJudgments& j) {
  return macro(lists, j, &reciprocal_rank);
}

MetricReport report_for(const std::vector<RankedList>& lists, const RelevanceJudgments& judgments,
                        std::size_t candidate_count) {
  MetricReport report;
  report.queries = lists.size();
  report.candidates = candidate_count;
  for (std::size_t k : kReportedCutoffs) report.precision_at[k] = 0.0;
  for (const RankedList& l : lists) {
    const auto& relevant = relevant_for(judgments, l.query_id);
    QueryMetrics q;
    q.query_id = l.query_id;
    q.average_precision = average_precision(l, relevant);
    q.ndcg = ndcg(l, relevant);
    q.reciprocal_rank = reciprocal_rank(l, relevant);
    for (std::size_t k : kReportedCutoffs) q.precision_at[k] = precision_at_k(l, relevant, k);
    q.relevant = relevant.size();
    q.ranked = l.items.size();
    report.map += q.average_precision;
    report.ndcg += q.ndcg;
    report.mrr += q.reciprocal_rank;
    for (std::size_t k : kReportedCutoffs) report.precision_at[k] += q.precision_at[k];
    report.per_query.push_back(std::move(q));
  }
  if (!lists.empty()) {
    const double n = static_cast<double>(lists.size());
    report.map /= n;
    report.ndcg /= n;
    report.mrr /= n;
    for (auto& [k, v] : report.precision_at) v /= n;
  }
  return report;
}

namespace {

using Scorer = std::function<RankedList(const std::string& query, const std::optional<std::string>& exclude)>;

std::vector<RankedList> rank_all(const std::vector<std::string>& query_ids,
                                 const RelevanceJudgments& judgments, const Scorer& scorer,
                                 std::size_t jobs) {
  std::vector<RankedList> lists(query_ids.size());
  std::vector<std::optional<Error>> errors(query_ids.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= query_ids.size()) return;
      const auto orig = judgments.original.find(query_ids[i]);
      std::optional<std::string> exclude;
      if (orig != judgments.original.end()) exclude = orig->second;
      try {
        lists[i] = scorer(query_ids[i], exclude);
      } catch (const Error& e) {
        errors[i] = e;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(jobs, query_ids.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (const auto& error : errors) {
    if (error) throw *error;
  }
  return lists;
}

template <typename Map>
void check_judged_ids(const RelevanceJudgments& judgments, const Map& queries, const Map& candidates) {
  for (const auto& [q, targets] : judgments.relevant) {
    if (!queries.count(q)) throw Error(ErrorCode::SchemaError, "no query entry for '" + q + "'");
    if (targets.empty()) throw Error(ErrorCode::NoRelevant, "query '" + q + "' has no relevant targets");
    for (const std::string& t : targets) {
      if (!candidates.count(t)) throw Error(ErrorCode::SchemaError, "no candidate entry for '" + t + "'");
    }
  }
}

}  // namespace

MetricReport evaluate(const std::map<std::string, Embedding>& query_embeddings,
                      const std::map<std::string, Embedding>& candidate_embeddings,
                      const RelevanceJudgments& judgments, std::size_t jobs) {
  check_judged_ids(judgments, query_embeddings, candidate_embeddings);
  std::vector<std::string> ids;
  for (const auto& [q, targets] : judgments.relevant) ids.push_back(q);
  const auto lists = rank_all(ids, judgments,
                              [&](const std::string& q, const std::optional<std::string>& exclude) {
                                return rank(q, query_embeddings.at(q), candidate_embeddings, exclude);
                              },
                              jobs);
  return report_for(lists, judgments, candidate_embeddings.size());
}

MetricReport evaluate_lexical(const std::map<std::string, std::string>& queries,
                              const std::map<std::string, std::string>& candidates,
                              const RelevanceJudgments& judgments, std::size_t jobs) {
  check_judged_ids(judgments, queries, candidates);
  std::map<std::string, std::set<std::string>> candidate_sets;
  const auto token_set = [](const std::string& text) {
    std::set<std::string> out;
    for (std::string& t : encoder_tokens(text)) {
      if (!is_marker_token(t)) out.insert(std::move(t));
    }
    return out;
  };
  for (const auto& [id, text] : candidates) candidate_sets.emplace(id, token_set(text));
  std::vector<std::string> ids;
  for (const auto& [q, targets] : judgments.relevant) ids.push_back(q);
  const auto lists = rank_all(
      ids, judgments,
      [&](const std::string& q, const std::optional<std::string>& exclude) {
        const std::set<std::string> query = token_set(queries.at(q));
        std::vector<ScoredCandidate> scores;
        for (const auto& [id, cand] : candidate_sets) {
          std::size_t common = 0;
          for (const std::string& t : cand) common += query.count(t);
          const std::size_t uni = query.size() + cand.size() - common;
          scores.push_back({id, uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni)});
        }
        return rank_scores(q, std::move(scores), exclude);
      },
      jobs);
  return report_for(lists, judgments, candidates.size());
}

double lexical_similarity(const std::string& a, const std::string& b) {
  std::set<std::string> sa, sb;
  for (std::string& t : encoder_tokens(a)) {
    if (!is_marker_token(t)) sa.insert(std::move(t));
  }
  for (std::string& t : encoder_tokens(b)) {
    if (!is_marker_token(t)) sb.insert(std::move(t));
  }
  std::size_t common = 0;
  for (const std::string& t : sb) common += sa.count(t);
  const std::size_t uni = sa.size() + sb.size() - common;
  return uni == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(uni);
}

// ---------------------------------------------------------------------------
// Reports

std::string report_json(const MetricReport& report, bool include_per_query) {
  const auto cutoffs = [](const std::map<std::size_t, double>& p) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : p) j[std::to_string(k)] = v;
    return j;
  };
  ordered_json j;
  j["map"] = report.map;
  j["ndcg"] = report.ndcg;
  j["p_at"] = cutoffs(report.precision_at);
  j["mrr"] = report.mrr;
  j["queries"] = report.queries;
  j["candidates"] = report.candidates;
  j["conventions"] = {{"averaging", "macro over queries"},
                      {"ties", "score descending, then target id ascending"},
                      {"p_at_denominator", "min(k, ranked list length)"},
                      {"ndcg_gain", "binary, log2(rank + 1) discount"},
                      {"excluded", "each query's original target"}};
  if (include_per_query) {
    ordered_json rows = ordered_json::array();
    for (const QueryMetrics& q : report.per_query) {
      ordered_json row;
      row["query_id"] = q.query_id;
      row["ap"] = q.average_precision;
      row["ndcg"] = q.ndcg;
      row["p_at"] = cutoffs(q.precision_at);
      row["rr"] = q.reciprocal_rank;
      row["relevant"] = q.relevant;
      row["ranked"] = q.ranked;
      rows.push_back(std::move(row));
    }
    j["per_query"] = std::move(rows);
  }
  return j.dump(2);
}

std::string report_table(const MetricReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %-8s %-8s %-8s %-8s %-8s\n", "MAP", "NDCG", "P@1", "P@3",
                "P@10", "MRR");
  out << line;
  const auto p = [&](std::size_t k) {
    const auto it = report.precision_at.find(k);
    return it == report.precision_at.end() ? 0.0 : it->second;
  };
  std::snprintf(line, sizeof line, "%-8.4f %-8.4f %-8.4f %-8.4f %-8.4f %-8.4f\n", report.map,
                report.ndcg, p(1), p(3), p(10), report.mrr);
  out << line;
  out << report.queries << " queries, " << report.candidates << " candidates\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// COCOS files

namespace {

template <typename Fn>
void for_each_json_line(const fs::path& path, Fn fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::SchemaError, path.string() + ": line " + std::to_string(number) +
                                              ": invalid JSON: " + e.what());
    }
    try {
      if (!j.is_object()) throw std::runtime_error("expected an object");
      fn(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError,
                  path.string() + ": line " + std::to_string(number) + ": " + e.what());
    } catch (const std::runtime_error& e) {
      if (dynamic_cast<const Error*>(&e)) throw;
      throw Error(ErrorCode::SchemaError,
                  path.string() + ": line " + std::to_string(number) + ": " + e.what());
    }
  }
}

std::string text_of(const ordered_json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw std::runtime_error(std::string("missing field '") + key + "'");
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (!it->is_string()) throw std::runtime_error(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

int flag_of(const ordered_json& j, const char* key, bool required) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) throw std::runtime_error(std::string("missing field '") + key + "'");
    return 0;
  }
  if (it->is_boolean()) return it->get<bool>() ? 1 : 0;
  if (!it->is_number()) throw std::runtime_error(std::string("field '") + key + "' must be 0 or 1");
  const double v = it->get<double>();
  if (v != 0.0 && v != 1.0) throw std::runtime_error(std::string("field '") + key + "' must be 0 or 1");
  return static_cast<int>(v);
}

template <typename T, typename Fn>
void write_lines(const fs::path& path, const std::vector<T>& records, Fn to_json) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const T& r : records) out << to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

std::vector<QueryRecord> read_queries(const fs::path& path) {
  std::vector<QueryRecord> out;
  for_each_json_line(path, [&](const ordered_json& j) {
    out.push_back({text_of(j, "query_id"), text_of(j, "language"), text_of(j, "context")});
  });
  return out;
}

std::vector<CandidateRecord> read_candidates(const fs::path& path) {
  std::vector<CandidateRecord> out;
  for_each_json_line(path, [&](const ordered_json& j) {
    out.push_back({text_of(j, "target_id"), text_of(j, "language"), text_of(j, "text")});
  });
  return out;
}

std::vector<QrelRecord> read_qrels(const fs::path& path) {
  std::vector<QrelRecord> out;
  for_each_json_line(path, [&](const ordered_json& j) {
    out.push_back({text_of(j, "query_id"), text_of(j, "target_id"), flag_of(j, "relevance", true),
                   flag_of(j, "is_original", false)});
  });
  return out;
}

void write_queries(const fs::path& path, const std::vector<QueryRecord>& records) {
  write_lines(path, records, [](const QueryRecord& r) {
    ordered_json j;
    j["query_id"] = r.query_id;
    j["language"] = r.language;
    j["context"] = r.context;
    return j;
  });
}

void write_candidates(const fs::path& path, const std::vector<CandidateRecord>& records) {
  write_lines(path, records, [](const CandidateRecord& r) {
    ordered_json j;
    j["target_id"] = r.target_id;
    j["language"] = r.language;
    j["text"] = r.text;
    return j;
  });
}

void write_qrels(const fs::path& path, const std::vector<QrelRecord>& records) {
  write_lines(path, records, [](const QrelRecord& r) {
    ordered_json j;
    j["query_id"] = r.query_id;
    j["target_id"] = r.target_id;
    j["relevance"] = r.relevance;
    j["is_original"] = r.is_original;
    return j;
  });
}

RelevanceJudgments judgments_from(const std::vector<QrelRecord>& qrels) {
  RelevanceJudgments j;
  for (const QrelRecord& r : qrels) {
    if (r.is_original) j.original[r.query_id] = r.target_id;
  }
  for (const QrelRecord& r : qrels) {
    j.relevant[r.query_id];
    if (r.relevance != 1 || r.is_original) continue;
    const auto orig = j.original.find(r.query_id);
    if (orig != j.original.end() && orig->second == r.target_id) continue;
    j.relevant[r.query_id].insert(r.target_id);
  }
  return j;
}

std::map<std::string, Embedding> read_embeddings(const fs::path& path) {
  std::map<std::string, Embedding> out;
  for_each_json_line(path, [&](const ordered_json& j) {
    std::string id = text_of(j, "id");
    const auto it = j.find("embedding");
    if (it == j.end() || !it->is_array()) throw std::runtime_error("field 'embedding' must be an array");
    Embedding e;
    for (const auto& v : *it) {
      if (!v.is_number()) throw std::runtime_error("embedding values must be numbers");
      e.push_back(v.get<double>());
    }
    out[std::move(id)] = std::move(e);
  });
  return out;
}

}  // namespace ctxsearch
