#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ctxsearch/deleak.hpp"
#include "ctxsearch/embedding.hpp"
#include "ctxsearch/random.hpp"

namespace ctxsearch {

inline constexpr double kDefaultTemperature = 0.1;
inline constexpr std::size_t kDefaultBuckets = std::size_t{1} << 16;
inline constexpr std::size_t kDefaultDimension = 256;

/// Standard InfoNCE keeps the positive in the denominator; the printed
/// variant sums over the negatives only.
enum class LossForm : std::uint8_t { Standard, NegativesOnly };

std::string_view to_string(LossForm form) noexcept;

/// InfoNCE for one query. Throws Error(InvalidTemperature) for tau <= 0 and
/// Error(BatchTooSmall) without negatives.
double info_nce(const Embedding& query, const Embedding& positive,
                const std::vector<Embedding>& negatives, double tau = kDefaultTemperature,
                LossForm form = LossForm::Standard);

/// Mean InfoNCE over the rows of a K x K similarity matrix whose diagonal
/// holds the positives, and its gradient with respect to every entry.
struct MatrixLoss {
  double loss = 0.0;
  std::vector<double> grad;  // row-major K x K
};

MatrixLoss info_nce_matrix(const std::vector<double>& similarities, std::size_t k, double tau,
                           LossForm form);

struct ToyEncoderConfig {
  std::size_t buckets = kDefaultBuckets;
  std::size_t dimension = kDefaultDimension;
  double tau = kDefaultTemperature;
  LossForm loss_form = LossForm::Standard;
  std::size_t max_tokens = 512;
  std::uint64_t seed = 0;

  bool operator==(const ToyEncoderConfig&) const = default;
};

/// Bucket ids (with multiplicity) of a text's unigrams and bigrams.
using FeatureBag = std::vector<std::uint32_t>;

/// Hashed n-gram bag-of-features encoder: the embedding is the normalised
/// sum of one parameter row per feature. Contexts and targets share it.
class ToyEncoder {
 public:
  /// Rows drawn from N(0, 1/d) with the config's seed. Throws
  /// Error(InvalidConfig) for zero sizes.
  explicit ToyEncoder(const ToyEncoderConfig& config);

  /// Encoder with given parameters. Throws Error(DimensionMismatch) unless
  /// weights.size() == buckets * dimension.
  ToyEncoder(const ToyEncoderConfig& config, std::vector<double> weights);

  const ToyEncoderConfig& config() const noexcept { return config_; }
  std::size_t parameter_count() const noexcept { return weights_.size(); }
  std::vector<double>& weights() noexcept { return weights_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Encoder tokens capped at max_tokens; when a mask marker is present the
  /// window is centred on it.
  std::vector<std::string> window(const std::string& text) const;

  FeatureBag features(const std::string& text) const;
  std::uint32_t bucket_of(const std::string& token) const;
  std::uint32_t bucket_of(const std::string& first, const std::string& second) const;

  /// Throws Error(EmptyInput) when the text has no tokens and
  /// Error(ZeroVector) when the summed rows cancel.
  Embedding encode(const std::string& text) const;
  Embedding encode_features(const FeatureBag& features) const;

  bool operator==(const ToyEncoder&) const = default;

 private:
  ToyEncoderConfig config_;
  std::vector<double> weights_;  // buckets x dimension, row-major
};

using TextPair = std::pair<std::string, std::string>;  // context, target

std::vector<TextPair> text_pairs(const std::vector<ContextTargetPair>& pairs);

/// Sparse gradient: bucket -> d partial derivatives.
using RowGradients = std::map<std::uint32_t, std::vector<double>>;

/// Mean in-batch InfoNCE: pair i's context is query i, its target the
/// positive, other targets the negatives. Throws Error(BatchTooSmall) for
/// fewer than two pairs.
double batch_loss(const std::vector<TextPair>& batch, const ToyEncoder& encoder);
double batch_loss(const std::vector<TextPair>& batch, const ToyEncoder& encoder,
                  RowGradients* gradients);

struct GradCheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  double mean_abs_gradient = 0.0;
  std::vector<std::size_t> parameters;  // flat indices checked
  std::vector<double> analytic;
  std::vector<double> numeric;
  bool passed = false;
};

/// Central finite differences of batch_loss on `samples` parameters drawn
/// from the rows the batch touches. Relative error is |a - n| / max(|a|, |n|),
/// taken as 0 when both are below 1e-10. Throws Error(InvalidBounds) for
/// eps outside [1e-6, 1e-3].
GradCheckReport grad_check(ToyEncoder& encoder, const std::vector<TextPair>& batch, double eps,
                           double tolerance, Rng& rng, std::size_t samples = 128);

/// Same check on explicitly chosen flat parameter indices.
GradCheckReport grad_check_at(ToyEncoder& encoder, const std::vector<TextPair>& batch, double eps,
                              double tolerance, const std::vector<std::size_t>& parameters);

struct TrainConfig {
  std::size_t steps = 1000;
  double learning_rate = 1.0;
  double warmup_fraction = 0.1;
  double decay_power = 1.0;
  std::size_t token_budget = 7000;
  std::size_t eval_every = 100;
  std::size_t validation_cap = 30000;
  std::uint64_t seed = 0;
  ToyEncoderConfig encoder;
};

/// Learning rate at `step` (0-based): linear warmup over the first
/// warmup_fraction of the steps, then polynomial decay to zero.
double learning_rate_at(const TrainConfig& config, std::size_t step);

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double validation_mrr = -1.0;
};

struct TrainResult {
  ToyEncoder encoder;  // best validation MRR (final if there is no validation set)
  std::size_t best_step = 0;
  double best_mrr = -1.0;
  std::vector<TrainLogEntry> log;
};

/// MRR of each context retrieving its own target among all targets.
double validation_mrr(const ToyEncoder& encoder, const std::vector<TextPair>& pairs);

/// SGD over language-pure batches in a seeded order. Throws
/// Error(BatchTooSmall) when no batch holds two pairs and Error(Diverged)
/// on a non-finite loss.
TrainResult train_toy(const std::vector<ContextTargetPair>& train,
                      const std::vector<ContextTargetPair>& valid, const TrainConfig& config);

/// Binary checkpoint (magic, version, sizes, then parameters as IEEE-754
/// little-endian doubles) plus a `<path>.json` sidecar with the config.
void save_checkpoint(const std::filesystem::path& path, const ToyEncoder& encoder,
                     const std::string& sidecar_json);
ToyEncoder load_checkpoint(const std::filesystem::path& path);

}  // namespace ctxsearch
