#include <gtest/gtest.h>

#include <cmath>

#include "ctxsearch/contrastive.hpp"
#include "ctxsearch/errors.hpp"
#include "ctxsearch/pipeline.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "test_corpus.hpp"

namespace ctxsearch {
namespace {

ToyEncoderConfig small_config(std::uint64_t seed = 1) {
  ToyEncoderConfig c;
  c.buckets = 512;
  c.dimension = 16;
  c.seed = seed;
  return c;
}

std::vector<TextPair> toy_batch() {
  return {{"int add ( int a , int b ) { <|mask|> }", "return a + b ;"},
          {"def mul ( x , y ) : <|mask|>", "return x * y"},
          {"for ( i = 0 ; i < n ; i ++ ) { <|mask|> }", "sum += v [ i ] ;"},
          {"class Box { <|mask|> }", "int width ; int height ;"}};
}

std::vector<ContextTargetPair> corpus_pairs(std::uint64_t seed) {
  std::vector<CorpusFile> files;
  for (const auto& e : testing::load_test_corpus()) {
    CorpusFile f;
    f.source = e.relative;
    f.language = e.language;
    f.content = e.content;
    f.content_hash = content_hash(e.content);
    files.push_back(std::move(f));
  }
  return make_pairs(files, PairConfig{}, seed, 4);
}

TEST(InfoNce, ConfidentPositive) {
  const double loss = info_nce({1, 0}, {1, 0}, {{0, 1}}, 0.1);
  EXPECT_NEAR(loss, std::log1p(std::exp(-10.0)), 1e-15);
  EXPECT_NEAR(loss, 4.5399e-5, 1e-9);
}

TEST(InfoNce, PrintedFormOmitsPositiveFromDenominator) {
  EXPECT_NEAR(info_nce({1, 0}, {1, 0}, {{0, 1}}, 0.1, LossForm::NegativesOnly), -10.0, 1e-12);
}

TEST(InfoNce, UniformScoresGiveLogOfCount) {
  const Embedding q{0, 0, 1};
  for (std::size_t n : {1u, 2u, 5u, 31u}) {
    const std::vector<Embedding> negatives(n, Embedding{1, 0, 0});
    EXPECT_NEAR(info_nce(q, {0, 1, 0}, negatives, 0.1), std::log(static_cast<double>(n) + 1.0), 1e-12);
  }
  EXPECT_NEAR(info_nce(q, {0, 1, 0}, {{1, 0, 0}, {1, 0, 0}}, 0.5), std::log(3.0), 1e-12);
}

TEST(InfoNce, MatchesExtendedPrecisionOracle) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    auto vec = [&] {
      Embedding v(8);
      for (double& x : v) x = rng.normal();
      return normalized(v);
    };
    const Embedding q = vec(), p = vec();
    std::vector<Embedding> negs;
    for (int i = 0; i < 1 + trial % 7; ++i) negs.push_back(vec());
    for (LossForm form : {LossForm::Standard, LossForm::NegativesOnly}) {
      EXPECT_NEAR(info_nce(q, p, negs, 0.07, form),
                  testing::oracle_info_nce(q, p, negs, 0.07, form == LossForm::NegativesOnly), 1e-9);
    }
  }
}

TEST(InfoNce, HalvingTemperatureSharpensAConfidentPositive) {
  const Embedding q = normalized({1, 0.2, 0});
  const Embedding p = normalized({1, 0.1, 0});
  const std::vector<Embedding> negs{normalized({0.2, 1, 0}), normalized({0, 0.3, 1})};
  double previous = info_nce(q, p, negs, 1.0);
  for (double tau = 0.5; tau > 0.01; tau /= 2) {
    const double loss = info_nce(q, p, negs, tau);
    EXPECT_LT(loss, previous) << tau;
    previous = loss;
  }
}

TEST(InfoNce, InvalidInputs) {
  EXPECT_THROW(info_nce({1}, {1}, {{1}}, 0.0), Error);
  EXPECT_THROW(info_nce({1}, {1}, {{1}}, -1.0), Error);
  try {
    info_nce({1}, {1}, {}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BatchTooSmall);
  }
}

TEST(InfoNceMatrix, TwoByTwoClosedForm) {
  const double a = 0.9, b = 0.1, c = -0.2, d = 0.5, tau = 0.2;
  const MatrixLoss m = info_nce_matrix({a, b, c, d}, 2, tau, LossForm::Standard);
  const double expected = 0.5 * (std::log1p(std::exp((b - a) / tau)) + std::log1p(std::exp((c - d) / tau)));
  EXPECT_NEAR(m.loss, expected, 1e-12);
  const double s0 = 1.0 / (1.0 + std::exp((a - b) / tau));  // softmax weight of b in row 0
  EXPECT_NEAR(m.grad[1], 0.5 * s0 / tau, 1e-12);
  EXPECT_NEAR(m.grad[0], -0.5 * s0 / tau, 1e-12);
  const MatrixLoss lit = info_nce_matrix({a, b, c, d}, 2, tau, LossForm::NegativesOnly);
  EXPECT_NEAR(lit.loss, 0.5 * ((b - a) / tau + (c - d) / tau), 1e-12);
}

TEST(InfoNceMatrix, FiniteDifferences) {
  Rng rng(12);
  const std::size_t k = 5;
  std::vector<double> s(k * k);
  for (double& x : s) x = rng.uniform() * 2 - 1;
  for (LossForm form : {LossForm::Standard, LossForm::NegativesOnly}) {
    const MatrixLoss m = info_nce_matrix(s, k, 0.1, form);
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto plus = s, minus = s;
      plus[i] += 1e-6;
      minus[i] -= 1e-6;
      const double numeric =
          (info_nce_matrix(plus, k, 0.1, form).loss - info_nce_matrix(minus, k, 0.1, form).loss) / 2e-6;
      EXPECT_NEAR(m.grad[i], numeric, 1e-5);
    }
  }
}

TEST(ToyEncoderTest, SingleTokenEmbeddingIsItsNormalisedRow) {
  const ToyEncoder enc(small_config());
  const Embedding e = enc.encode("x");
  const std::size_t d = enc.config().dimension;
  const std::uint32_t b = enc.bucket_of("x");
  const Embedding row(enc.weights().begin() + b * d, enc.weights().begin() + (b + 1) * d);
  const Embedding expected = normalized(row);
  ASSERT_EQ(e.size(), d);
  for (std::size_t i = 0; i < d; ++i) EXPECT_NEAR(e[i], expected[i], 1e-15);
  EXPECT_EQ(enc.features("x").size(), 1u);
  EXPECT_EQ(enc.features("x y").size(), 3u);
}

TEST(ToyEncoderTest, SameSeedSameWeights) {
  EXPECT_EQ(ToyEncoder(small_config(3)), ToyEncoder(small_config(3)));
  EXPECT_NE(ToyEncoder(small_config(3)).weights(), ToyEncoder(small_config(4)).weights());
}

TEST(ToyEncoderTest, WindowCentresOnMask) {
  ToyEncoderConfig c = small_config();
  c.max_tokens = 5;
  const ToyEncoder enc(c);
  std::string text;
  for (int i = 0; i < 20; ++i) text += "a" + std::to_string(i) + " ";
  text += "<|mask|>";
  for (int i = 0; i < 20; ++i) text += " b" + std::to_string(i);
  const auto w = enc.window(text);
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[2], "<|mask|>");
  EXPECT_THROW(enc.encode("   "), Error);
}

TEST(ToyEncoderTest, GradientMatchesFiniteDifferences) {
  ToyEncoder enc(small_config(9));
  Rng rng(5);
  const GradCheckReport r = grad_check(enc, toy_batch(), 1e-5, 1e-4, rng, 64);
  EXPECT_TRUE(r.passed) << r.max_relative_error;
  EXPECT_EQ(r.checked, 64u);
  EXPECT_GT(r.mean_abs_gradient, 0.0);
  EXPECT_THROW(grad_check(enc, toy_batch(), 1e-1, 1e-4, rng), Error);
}

TEST(ToyEncoderTest, BatchOfOneIsRejected) {
  const ToyEncoder enc(small_config());
  EXPECT_THROW(batch_loss({{"a", "b"}}, enc), Error);
}

TEST(Schedule, WarmupThenDecay) {
  TrainConfig c;
  c.steps = 100;
  c.learning_rate = 2.0;
  c.warmup_fraction = 0.1;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0), 0.2);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 9), 2.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 10), 2.0);
  EXPECT_NEAR(learning_rate_at(c, 55), 1.0, 1e-12);
  EXPECT_GT(learning_rate_at(c, 99), 0.0);
  EXPECT_LT(learning_rate_at(c, 99), 0.1);
}

TEST(Train, ZeroStepsKeepsInitialWeights) {
  TrainConfig c;
  c.steps = 0;
  c.encoder = small_config(2);
  const TrainResult r = train_toy({}, {}, c);
  EXPECT_EQ(r.encoder, ToyEncoder(c.encoder));
  EXPECT_EQ(r.best_step, 0u);
}

TEST(Train, ImprovesRetrievalAndIsDeterministic) {
  const auto pairs = corpus_pairs(5);
  TrainConfig c;
  c.steps = 150;
  c.eval_every = 50;
  c.learning_rate = 2.0;
  c.encoder.buckets = 4096;
  c.encoder.dimension = 32;
  c.seed = 3;
  const double before = validation_mrr(ToyEncoder(c.encoder), text_pairs(pairs));
  const TrainResult a = train_toy(pairs, pairs, c);
  const TrainResult b = train_toy(pairs, pairs, c);
  EXPECT_EQ(a.encoder, b.encoder);
  EXPECT_EQ(a.best_step, b.best_step);
  EXPECT_GT(a.best_mrr, before);
  EXPECT_DOUBLE_EQ(validation_mrr(a.encoder, text_pairs(pairs)), a.best_mrr);
}

TEST(Train, NoUsableBatchThrows) {
  std::vector<ContextTargetPair> one(1);
  one[0].language = "c";
  one[0].context = "a <|mask|>";
  one[0].target = "b";
  TrainConfig c;
  c.steps = 5;
  c.encoder = small_config();
  EXPECT_THROW(train_toy(one, {}, c), Error);
}

TEST(Checkpoint, RoundTripsExactly) {
  testing::TempDir dir;
  ToyEncoderConfig cfg = small_config(6);
  cfg.loss_form = LossForm::NegativesOnly;
  cfg.tau = 0.05;
  ToyEncoder enc(cfg);
  enc.weights()[7] = -0.0;
  enc.weights()[8] = 1e-310;
  save_checkpoint(dir.path() / "m.ckpt", enc, "{\"note\":1}");
  const ToyEncoder back = load_checkpoint(dir.path() / "m.ckpt");
  EXPECT_EQ(back.config(), enc.config());
  ASSERT_EQ(back.weights().size(), enc.weights().size());
  for (std::size_t i = 0; i < back.weights().size(); ++i) {
    EXPECT_EQ(std::signbit(back.weights()[i]), std::signbit(enc.weights()[i]));
    EXPECT_EQ(back.weights()[i], enc.weights()[i]);
  }
  EXPECT_EQ(testing::read_file(dir.path() / "m.ckpt.json"), "{\"note\":1}\n");
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  testing::TempDir dir;
  EXPECT_THROW(load_checkpoint(dir.write("x.ckpt", "garbage")), Error);
  EXPECT_THROW(load_checkpoint(dir.path() / "missing.ckpt"), Error);
  save_checkpoint(dir.path() / "m.ckpt", ToyEncoder(small_config()), "{}");
  std::string bytes = testing::read_file(dir.path() / "m.ckpt");
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(load_checkpoint(dir.write("t.ckpt", bytes)), Error);
}

}  // namespace
}  // namespace ctxsearch
