#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ctxsearch/errors.hpp"
#include "ctxsearch/retrieval.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace ctxsearch {
namespace {

RankedList list_of(std::initializer_list<const char*> ids) {
  RankedList list;
  list.query_id = "q";
  double score = static_cast<double>(ids.size());
  for (const char* id : ids) list.items.push_back({id, score--});
  return list;
}

std::vector<std::string> ids_of(const RankedList& list) {
  std::vector<std::string> out;
  for (const auto& c : list.items) out.push_back(c.id);
  return out;
}

TEST(Metrics, PrecisionAtK) {
  const RankedList l = list_of({"n1", "n2", "r", "n3"});
  EXPECT_DOUBLE_EQ(precision_at_k(l, {"r"}, 3), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(precision_at_k(list_of({"a", "n", "c", "d"}), {"a", "c"}, 3), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(precision_at_k(l, {"r"}, 1), 0.0);
  EXPECT_THROW(precision_at_k(l, {"r"}, 0), Error);
}

TEST(Metrics, PrecisionDenominatorIsListLengthWhenShort) {
  EXPECT_DOUBLE_EQ(precision_at_k(list_of({"r", "n"}), {"r"}, 10), 0.5);
}

TEST(Metrics, AveragePrecision) {
  EXPECT_DOUBLE_EQ(average_precision(list_of({"a", "n", "c", "d"}), {"a", "c"}), 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(average_precision(list_of({"n1", "n2", "n3", "r"}), {"r"}), 0.25);
  EXPECT_DOUBLE_EQ(average_precision(list_of({"a", "n"}), {"a", "missing"}), 0.5);
  EXPECT_THROW(average_precision(list_of({"a"}), {}), Error);
}

TEST(Metrics, NdcgSingleRelevantAtRankTwo) {
  EXPECT_NEAR(ndcg(list_of({"n", "r", "m"}), {"r"}), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_DOUBLE_EQ(ndcg(list_of({"r", "s", "n"}), {"r", "s"}), 1.0);
}

TEST(Metrics, MeanReciprocalRank) {
  RelevanceJudgments j;
  j.relevant = {{"q1", {"a"}}, {"q2", {"b"}}};
  RankedList l1 = list_of({"a", "x"});
  l1.query_id = "q1";
  RankedList l2 = list_of({"x", "y", "z", "b"});
  l2.query_id = "q2";
  EXPECT_DOUBLE_EQ(mean_reciprocal_rank({l1, l2}, j), 0.625);
  EXPECT_DOUBLE_EQ(reciprocal_rank(list_of({"x"}), {"b"}), 0.0);
}

TEST(Metrics, AgreeWithDefinitionsOnRandomRankings) {
  Rng rng(8);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("c" + std::to_string(i));
    for (std::size_t i = n; i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
    std::set<std::string> rel;
    for (const auto& id : ids) {
      if (rng.bernoulli(0.3)) rel.insert(id);
    }
    if (rel.empty()) rel.insert(ids[rng.index(n)]);
    RankedList list;
    for (std::size_t i = 0; i < n; ++i) list.items.push_back({ids[i], static_cast<double>(n - i)});
    EXPECT_NEAR(average_precision(list, rel), testing::oracle_average_precision(ids, rel), 1e-12);
    EXPECT_NEAR(ndcg(list, rel), testing::oracle_ndcg(ids, rel), 1e-12);
    EXPECT_NEAR(reciprocal_rank(list, rel), testing::oracle_reciprocal_rank(ids, rel), 1e-12);
    for (std::size_t k : {1u, 3u, 10u}) {
      EXPECT_NEAR(precision_at_k(list, rel, k), testing::oracle_precision_at(ids, rel, k), 1e-12);
    }
  }
}

TEST(Rank, TiesBreakByAscendingId) {
  const RankedList l = rank_scores("q", {{"b", 1.0}, {"c", 2.0}, {"a", 1.0}});
  EXPECT_EQ(ids_of(l), (std::vector<std::string>{"c", "a", "b"}));
  const RankedList ex = rank_scores("q", {{"b", 1.0}, {"c", 2.0}, {"a", 1.0}}, std::string("c"));
  EXPECT_EQ(ids_of(ex), (std::vector<std::string>{"a", "b"}));
}

TEST(Rank, CosineIgnoresScale) {
  const std::map<std::string, Embedding> c{{"x", {1, 0}}, {"y", {1, 1}}, {"z", {0, 1}}};
  std::map<std::string, Embedding> scaled;
  for (const auto& [id, v] : c) scaled[id] = {v[0] * 7.5, v[1] * 7.5};
  EXPECT_EQ(ids_of(rank("q", {2, 1}, c)), ids_of(rank("q", {20, 10}, scaled)));
  EXPECT_EQ(ids_of(rank("q", {2, 1}, c)), (std::vector<std::string>{"y", "x", "z"}));
  EXPECT_THROW(rank("q", {1, 0, 0}, c), Error);
  EXPECT_THROW(rank("q", {0, 0}, c), Error);
}

struct Fixture {
  std::map<std::string, Embedding> queries;
  std::map<std::string, Embedding> candidates;
  RelevanceJudgments judgments;
};

// Three queries over five candidates. Each query's original target is the
// best match and must be excluded; its other relevant target is placed at a
// known rank.
Fixture adversarial() {
  Fixture f;
  f.candidates = {{"t1", {1, 0, 0}}, {"t2", {0, 1, 0}}, {"t3", {0, 0, 1}},
                  {"u1", {0.9, 0.1, 0}}, {"u2", {0.1, 0.9, 0.2}}};
  f.queries = {{"q1", {1, 0, 0}}, {"q2", {0, 1, 0}}, {"q3", {0, 0, 1}}};
  f.judgments.relevant = {{"q1", {"u1"}}, {"q2", {"t3"}}, {"q3", {"u2"}}};
  f.judgments.original = {{"q1", "t1"}, {"q2", "t2"}, {"q3", "t3"}};
  return f;
}

TEST(Evaluate, ExcludesOriginalTargets) {
  const Fixture f = adversarial();
  const MetricReport r = evaluate(f.queries, f.candidates, f.judgments);
  ASSERT_EQ(r.per_query.size(), 3u);
  // q1: u1 ranks first once t1 is gone. q2: u2, u1, then t1 and t3 tie at 0
  // and t3 comes last by id. q3: u2 first.
  EXPECT_DOUBLE_EQ(r.per_query[0].reciprocal_rank, 1.0);
  EXPECT_DOUBLE_EQ(r.per_query[1].reciprocal_rank, 0.25);
  EXPECT_DOUBLE_EQ(r.per_query[2].reciprocal_rank, 1.0);
  EXPECT_NEAR(r.mrr, (1.0 + 0.25 + 1.0) / 3.0, 1e-15);
  for (const auto& q : r.per_query) EXPECT_EQ(q.ranked, 4u);
  EXPECT_EQ(r.queries, 3u);
  EXPECT_EQ(r.candidates, 5u);
}

TEST(Evaluate, OracleEmbeddingsScorePerfectly) {
  Fixture f;
  for (int i = 0; i < 6; ++i) {
    Embedding e(6, 0.0);
    e[i] = 1.0;
    f.candidates["t" + std::to_string(i)] = e;
    f.queries["q" + std::to_string(i)] = e;
    f.judgments.relevant["q" + std::to_string(i)] = {"t" + std::to_string(i)};
  }
  const MetricReport r = evaluate(f.queries, f.candidates, f.judgments, 4);
  EXPECT_DOUBLE_EQ(r.map, 1.0);
  EXPECT_DOUBLE_EQ(r.ndcg, 1.0);
  EXPECT_DOUBLE_EQ(r.mrr, 1.0);
  EXPECT_DOUBLE_EQ(r.precision_at.at(1), 1.0);
}

TEST(Evaluate, JobsDoNotChangeResults) {
  const Fixture f = adversarial();
  EXPECT_EQ(report_json(evaluate(f.queries, f.candidates, f.judgments, 1)),
            report_json(evaluate(f.queries, f.candidates, f.judgments, 8)));
}

TEST(Evaluate, MissingEmbeddingAndEmptyJudgmentsThrow) {
  Fixture f = adversarial();
  f.judgments.relevant["q9"] = {"t1"};
  EXPECT_THROW(evaluate(f.queries, f.candidates, f.judgments), Error);
  f = adversarial();
  f.judgments.relevant["q1"] = {};
  EXPECT_THROW(evaluate(f.queries, f.candidates, f.judgments), Error);
}

TEST(Report, JsonAndTable) {
  const Fixture f = adversarial();
  const MetricReport r = evaluate(f.queries, f.candidates, f.judgments);
  const std::string json = report_json(r);
  EXPECT_NE(json.find("\"mrr\""), std::string::npos);
  EXPECT_NE(json.find("\"per_query\""), std::string::npos);
  EXPECT_EQ(report_json(r, false).find("\"per_query\""), std::string::npos);
  EXPECT_NE(report_table(r).find("MRR"), std::string::npos);
}

TEST(Cocos, FilesRoundTripAndOriginalsAreDropped) {
  testing::TempDir dir;
  const std::vector<QueryRecord> q{{"q1", "java", "ctx <|mask|>"}};
  const std::vector<CandidateRecord> c{{"t1", "java", "a"}, {"t2", "java", "b"}};
  const std::vector<QrelRecord> r{{"q1", "t1", 1, 1}, {"q1", "t2", 1, 0}};
  write_queries(dir.path() / "q.jsonl", q);
  write_candidates(dir.path() / "c.jsonl", c);
  write_qrels(dir.path() / "r.jsonl", r);
  const auto qb = read_queries(dir.path() / "q.jsonl");
  ASSERT_EQ(qb.size(), 1u);
  EXPECT_EQ(qb[0].context, "ctx <|mask|>");
  EXPECT_EQ(read_candidates(dir.path() / "c.jsonl").size(), 2u);
  const RelevanceJudgments j = judgments_from(read_qrels(dir.path() / "r.jsonl"));
  EXPECT_EQ(j.relevant.at("q1"), std::set<std::string>{"t2"});
  EXPECT_EQ(j.original.at("q1"), "t1");
}

TEST(Cocos, EmbeddingFile) {
  testing::TempDir dir;
  const auto p = dir.write("e.jsonl", "{\"id\":\"a\",\"embedding\":[1,2]}\n{\"id\":\"b\",\"embedding\":[0.5,0]}\n");
  const auto e = read_embeddings(p);
  EXPECT_EQ(e.at("a"), (Embedding{1, 2}));
  EXPECT_THROW(read_embeddings(dir.write("bad.jsonl", "{\"id\":1}\n")), Error);
}

TEST(Lexical, JaccardOverTokenSets) {
  EXPECT_DOUBLE_EQ(lexical_similarity("a b c", "b c d"), 0.5);
  EXPECT_DOUBLE_EQ(lexical_similarity("a <|mask|>", "a"), 1.0);
  EXPECT_DOUBLE_EQ(lexical_similarity("x", "y"), 0.0);
}

TEST(Lexical, EvaluateRanksByOverlap) {
  RelevanceJudgments j;
  j.relevant = {{"q", {"good"}}};
  const MetricReport r =
      evaluate_lexical({{"q", "alpha beta gamma"}}, {{"good", "alpha beta"}, {"bad", "delta"}}, j);
  EXPECT_DOUBLE_EQ(r.mrr, 1.0);
}

}  // namespace
}  // namespace ctxsearch
