#include "ctxsearch/contrastive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "ctxsearch/errors.hpp"
#include "ctxsearch/lexer.hpp"
#include "ctxsearch/pipeline.hpp"

namespace ctxsearch {

namespace fs = std::filesystem;

std::string_view to_string(LossForm form) noexcept {
  return form == LossForm::Standard ? "standard" : "negatives-only";
}

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::InvalidTemperature, "temperature must be positive and finite");
  }
}

// -z[pos] + log sum_{j in terms} exp(z[j]), computed without cancellation
// when z[pos] dominates.
double neg_log_softmax(const std::vector<double>& z, std::size_t pos, bool include_positive) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j == pos && !include_positive) continue;
    m = std::max(m, z[j]);
  }
  if (include_positive && m == z[pos]) {
    double rest = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != pos) rest += std::exp(z[j] - z[pos]);
    }
    return std::log1p(rest);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (j == pos && !include_positive) continue;
    sum += std::exp(z[j] - m);
  }
  return m + std::log(sum) - z[pos];
}

}  // namespace

double info_nce(const Embedding& query, const Embedding& positive,
                const std::vector<Embedding>& negatives, double tau, LossForm form) {
  check_tau(tau);
  if (negatives.empty()) throw Error(ErrorCode::BatchTooSmall, "InfoNCE needs at least one negative");
  std::vector<double> z;
  z.reserve(negatives.size() + 1);
  z.push_back(cosine(query, positive) / tau);
  for (const Embedding& n : negatives) z.push_back(cosine(query, n) / tau);
  return neg_log_softmax(z, 0, form == LossForm::Standard);
}

MatrixLoss info_nce_matrix(const std::vector<double>& s, std::size_t k, double tau, LossForm form) {
  check_tau(tau);
  if (k < 2) throw Error(ErrorCode::BatchTooSmall, "in-batch InfoNCE needs at least two pairs");
  if (s.size() != k * k) throw Error(ErrorCode::DimensionMismatch, "similarity matrix is not K x K");
  const bool standard = form == LossForm::Standard;
  MatrixLoss out;
  out.grad.assign(k * k, 0.0);
  std::vector<double> z(k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) z[j] = s[i * k + j] / tau;
    out.loss += neg_log_softmax(z, i, standard);
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      if (standard || j != i) m = std::max(m, z[j]);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (standard || j != i) sum += std::exp(z[j] - m);
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double p = (standard || j != i) ? std::exp(z[j] - m) / sum : 0.0;
      out.grad[i * k + j] = (p - (j == i ? 1.0 : 0.0)) / tau / static_cast<double>(k);
    }
  }
  out.loss /= static_cast<double>(k);
  return out;
}

// ---------------------------------------------------------------------------
// Toy encoder

namespace {

std::uint64_t fnv1a(std::string_view a, std::string_view b = {}, char tag = '1') {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto feed = [&](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  feed(static_cast<unsigned char>(tag));
  feed(0x1f);
  for (char c : a) feed(static_cast<unsigned char>(c));
  if (tag == '2') {
    feed(0x1f);
    for (char c : b) feed(static_cast<unsigned char>(c));
  }
  return h;
}

void check_sizes(const ToyEncoderConfig& config) {
  if (config.buckets == 0 || config.dimension == 0 || config.max_tokens == 0) {
    throw Error(ErrorCode::InvalidConfig, "encoder buckets, dimension and max_tokens must be positive");
  }
  if (config.buckets > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidConfig, "too many buckets");
  }
  check_tau(config.tau);
}

}  // namespace

ToyEncoder::ToyEncoder(const ToyEncoderConfig& config) : config_(config) {
  check_sizes(config);
  weights_.resize(config.buckets * config.dimension);
  Rng rng(config.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.dimension));
  for (double& w : weights_) w = rng.normal() * scale;
}

ToyEncoder::ToyEncoder(const ToyEncoderConfig& config, std::vector<double> weights)
    : config_(config), weights_(std::move(weights)) {
  check_sizes(config);
  if (weights_.size() != config.buckets * config.dimension) {
    throw Error(ErrorCode::DimensionMismatch, "parameter count does not match buckets x dimension");
  }
}

std::vector<std::string> ToyEncoder::window(const std::string& text) const {
  std::vector<std::string> tokens = encoder_tokens(text);
  const std::size_t cap = config_.max_tokens;
  if (tokens.size() <= cap) return tokens;
  const std::size_t mask = find_mask(tokens);
  std::size_t start = 0;
  if (mask < tokens.size()) {
    start = mask > cap / 2 ? mask - cap / 2 : 0;
    start = std::min(start, tokens.size() - cap);
  }
  return {tokens.begin() + static_cast<std::ptrdiff_t>(start),
          tokens.begin() + static_cast<std::ptrdiff_t>(start + cap)};
}

std::uint32_t ToyEncoder::bucket_of(const std::string& token) const {
  return static_cast<std::uint32_t>(fnv1a(token) % config_.buckets);
}

std::uint32_t ToyEncoder::bucket_of(const std::string& first, const std::string& second) const {
  return static_cast<std::uint32_t>(fnv1a(first, second, '2') % config_.buckets);
}

FeatureBag ToyEncoder::features(const std::string& text) const {
  const std::vector<std::string> tokens = window(text);
  FeatureBag bag;
  bag.reserve(tokens.size() * 2);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    bag.push_back(bucket_of(tokens[i]));
    if (i + 1 < tokens.size()) bag.push_back(bucket_of(tokens[i], tokens[i + 1]));
  }
  return bag;
}

Embedding ToyEncoder::encode_features(const FeatureBag& bag) const {
  if (bag.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty sequence");
  const std::size_t d = config_.dimension;
  Embedding sum(d, 0.0);
  for (std::uint32_t b : bag) {
    const double* row = &weights_[static_cast<std::size_t>(b) * d];
    for (std::size_t c = 0; c < d; ++c) sum[c] += row[c];
  }
  return normalized(sum);
}

Embedding ToyEncoder::encode(const std::string& text) const { return encode_features(features(text)); }

std::vector<TextPair> text_pairs(const std::vector<ContextTargetPair>& pairs) {
  std::vector<TextPair> out;
  out.reserve(pairs.size());
  for (const ContextTargetPair& p : pairs) out.emplace_back(p.context, p.target);
  return out;
}

// ---------------------------------------------------------------------------
// Batch loss and gradient

namespace {

struct Encoded {
  FeatureBag bag;
  Embedding sum;
  double norm = 0.0;
  Embedding unit;
};

Encoded encode_full(const ToyEncoder& encoder, const std::string& text) {
  Encoded e;
  e.bag = encoder.features(text);
  if (e.bag.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty sequence");
  const std::size_t d = encoder.config().dimension;
  e.sum.assign(d, 0.0);
  for (std::uint32_t b : e.bag) {
    const double* row = &encoder.weights()[static_cast<std::size_t>(b) * d];
    for (std::size_t c = 0; c < d; ++c) e.sum[c] += row[c];
  }
  e.norm = l2_norm(e.sum);
  e.unit = normalized(e.sum);
  return e;
}

// Back-propagates dL/d(unit) through the normalisation into every row the
// sequence's features touch.
void accumulate(const Encoded& e, const std::vector<double>& g_unit, RowGradients& grads) {
  const std::size_t d = e.unit.size();
  const double proj = dot(e.unit, g_unit);
  std::vector<double> g_sum(d);
  for (std::size_t c = 0; c < d; ++c) g_sum[c] = (g_unit[c] - e.unit[c] * proj) / e.norm;
  for (std::uint32_t b : e.bag) {
    auto [it, inserted] = grads.try_emplace(b);
    if (inserted) it->second.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) it->second[c] += g_sum[c];
  }
}

}  // namespace

double batch_loss(const std::vector<TextPair>& batch, const ToyEncoder& encoder) {
  return batch_loss(batch, encoder, nullptr);
}

double batch_loss(const std::vector<TextPair>& batch, const ToyEncoder& encoder, RowGradients* grads) {
  const std::size_t k = batch.size();
  if (k < 2) throw Error(ErrorCode::BatchTooSmall, "a batch needs at least two pairs");
  std::vector<Encoded> queries, keys;
  queries.reserve(k);
  keys.reserve(k);
  for (const TextPair& p : batch) {
    queries.push_back(encode_full(encoder, p.first));
    keys.push_back(encode_full(encoder, p.second));
  }
  std::vector<double> s(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) s[i * k + j] = dot(queries[i].unit, keys[j].unit);
  }
  const MatrixLoss ml = info_nce_matrix(s, k, encoder.config().tau, encoder.config().loss_form);
  if (grads) {
    const std::size_t d = encoder.config().dimension;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> gq(d, 0.0), gk(d, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        const double a = ml.grad[i * k + j];  // dL / dS_ij
        const double b = ml.grad[j * k + i];  // dL / dS_ji
        for (std::size_t c = 0; c < d; ++c) {
          gq[c] += a * keys[j].unit[c];
          gk[c] += b * queries[j].unit[c];
        }
      }
      accumulate(queries[i], gq, *grads);
      accumulate(keys[i], gk, *grads);
    }
  }
  return ml.loss;
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckReport grad_check_at(ToyEncoder& encoder, const std::vector<TextPair>& batch, double eps,
                              double tolerance, const std::vector<std::size_t>& parameters) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) throw Error(ErrorCode::InvalidBounds, "eps must lie in [1e-6, 1e-3]");
  RowGradients grads;
  batch_loss(batch, encoder, &grads);
  const std::size_t d = encoder.config().dimension;
  std::vector<double>& w = encoder.weights();
  GradCheckReport report;
  double abs_sum = 0.0;
  for (std::size_t p : parameters) {
    if (p >= w.size()) throw Error(ErrorCode::IndexOutOfRange, "parameter index out of range");
    const auto row = grads.find(static_cast<std::uint32_t>(p / d));
    const double analytic = row == grads.end() ? 0.0 : row->second[p % d];
    const double saved = w[p];
    w[p] = saved + eps;
    const double plus = batch_loss(batch, encoder);
    w[p] = saved - eps;
    const double minus = batch_loss(batch, encoder);
    w[p] = saved;
    const double numeric = (plus - minus) / (2.0 * eps);
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    const double rel = scale < 1e-10 ? 0.0 : std::abs(analytic - numeric) / scale;
    report.max_relative_error = std::max(report.max_relative_error, rel);
    abs_sum += std::abs(analytic);
    report.parameters.push_back(p);
    report.analytic.push_back(analytic);
    report.numeric.push_back(numeric);
  }
  report.checked = parameters.size();
  report.mean_abs_gradient = parameters.empty() ? 0.0 : abs_sum / static_cast<double>(parameters.size());
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(ToyEncoder& encoder, const std::vector<TextPair>& batch, double eps,
                           double tolerance, Rng& rng, std::size_t samples) {
  RowGradients grads;
  batch_loss(batch, encoder, &grads);
  std::vector<std::uint32_t> rows;
  for (const auto& [b, g] : grads) rows.push_back(b);
  const std::size_t d = encoder.config().dimension;
  const std::size_t available = rows.size() * d;
  std::set<std::size_t> chosen;
  while (chosen.size() < std::min(samples, available)) {
    const std::size_t row = rows[rng.index(rows.size())];
    chosen.insert(row * d + rng.index(d));
  }
  std::vector<std::size_t> params(chosen.begin(), chosen.end());
  return grad_check_at(encoder, batch, eps, tolerance, params);
}

// ---------------------------------------------------------------------------
// Training

double learning_rate_at(const TrainConfig& config, std::size_t step) {
  if (config.steps == 0) return 0.0;
  const auto warmup = static_cast<std::size_t>(
      std::llround(config.warmup_fraction * static_cast<double>(config.steps)));
  if (step < warmup) {
    return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const std::size_t remaining = config.steps - std::min(warmup, config.steps);
  if (remaining == 0) return config.learning_rate;
  const double frac = static_cast<double>(step - warmup) / static_cast<double>(remaining);
  return config.learning_rate * std::pow(std::max(0.0, 1.0 - frac), config.decay_power);
}

double validation_mrr(const ToyEncoder& encoder, const std::vector<TextPair>& pairs) {
  if (pairs.empty()) return 0.0;
  std::vector<Embedding> q, k;
  q.reserve(pairs.size());
  k.reserve(pairs.size());
  for (const TextPair& p : pairs) {
    q.push_back(encoder.encode(p.first));
    k.push_back(encoder.encode(p.second));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double own = dot(q[i], k[i]);
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (j == i) continue;
      const double s = dot(q[i], k[j]);
      if (s > own || (s == own && j < i)) ++ahead;
    }
    total += 1.0 / static_cast<double>(ahead + 1);
  }
  return total / static_cast<double>(q.size());
}

TrainResult train_toy(const std::vector<ContextTargetPair>& train,
                      const std::vector<ContextTargetPair>& valid, const TrainConfig& config) {
  TrainResult result{ToyEncoder(config.encoder), 0, -1.0, {}};
  ToyEncoder current = result.encoder;

  std::vector<std::vector<TextPair>> batches;
  for (const Batch& b : batch_by_language(train, config.token_budget)) {
    if (b.members.size() < 2) continue;
    std::vector<TextPair> texts;
    for (std::size_t m : b.members) texts.emplace_back(train[m].context, train[m].target);
    batches.push_back(std::move(texts));
  }
  if (config.steps > 0 && batches.empty()) {
    throw Error(ErrorCode::BatchTooSmall, "no language has two training pairs within the budget");
  }

  std::vector<TextPair> held_out = text_pairs(valid);
  if (held_out.size() > config.validation_cap) held_out.resize(config.validation_cap);
  const bool validate = !held_out.empty();
  if (validate) {
    result.best_mrr = validation_mrr(current, held_out);
    result.log.push_back({0, 0.0, 0.0, result.best_mrr});
  }

  Rng order_rng(Rng::mix(config.seed, 0x6261746368ULL));
  std::vector<std::size_t> order(batches.size());
  std::size_t cursor = order.size();
  const std::size_t d = config.encoder.dimension;
  double running = 0.0;
  std::size_t running_n = 0;

  for (std::size_t step = 0; step < config.steps; ++step) {
    if (cursor == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.index(i)]);
      cursor = 0;
    }
    const auto& batch = batches[order[cursor++]];
    RowGradients grads;
    const double loss = batch_loss(batch, current, &grads);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::Diverged, "non-finite loss at step " + std::to_string(step));
    }
    const double lr = learning_rate_at(config, step);
    std::vector<double>& w = current.weights();
    for (const auto& [bucket, g] : grads) {
      double* row = &w[static_cast<std::size_t>(bucket) * d];
      for (std::size_t c = 0; c < d; ++c) row[c] -= lr * g[c];
    }
    running += loss;
    ++running_n;

    const bool last = step + 1 == config.steps;
    if ((config.eval_every > 0 && (step + 1) % config.eval_every == 0) || last) {
      TrainLogEntry entry{step + 1, running / static_cast<double>(running_n), lr, -1.0};
      running = 0.0;
      running_n = 0;
      if (validate) {
        entry.validation_mrr = validation_mrr(current, held_out);
        if (entry.validation_mrr > result.best_mrr) {
          result.best_mrr = entry.validation_mrr;
          result.best_step = step + 1;
          result.encoder = current;
        }
      }
      result.log.push_back(entry);
    }
  }
  if (!validate) {
    result.encoder = std::move(current);
    result.best_step = config.steps;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'C', 'T', 'X', 'S', 'E', 'N', 'C', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw Error(ErrorCode::SchemaError, "checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 8;
  return v;
}

}  // namespace

void save_checkpoint(const fs::path& path, const ToyEncoder& encoder, const std::string& sidecar_json) {
  const ToyEncoderConfig& c = encoder.config();
  std::string blob(kMagic, sizeof kMagic);
  put_u64(blob, kCheckpointVersion);
  put_u64(blob, c.buckets);
  put_u64(blob, c.dimension);
  put_u64(blob, c.max_tokens);
  put_u64(blob, c.seed);
  put_u64(blob, std::bit_cast<std::uint64_t>(c.tau));
  put_u64(blob, static_cast<std::uint64_t>(c.loss_form));
  put_u64(blob, encoder.weights().size());
  blob.reserve(blob.size() + encoder.weights().size() * 8);
  for (double w : encoder.weights()) put_u64(blob, std::bit_cast<std::uint64_t>(w));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
  std::ofstream side(path.string() + ".json", std::ios::binary | std::ios::trunc);
  if (!side) throw Error(ErrorCode::IoError, "cannot write " + path.string() + ".json");
  side << sidecar_json << '\n';
  if (!side) throw Error(ErrorCode::IoError, "write failed for " + path.string() + ".json");
}

ToyEncoder load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (blob.size() < sizeof kMagic || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::SchemaError, path.string() + " is not a toy encoder checkpoint");
  }
  std::size_t pos = sizeof kMagic;
  if (get_u64(blob, pos) != kCheckpointVersion) {
    throw Error(ErrorCode::SchemaError, "unsupported checkpoint version");
  }
  ToyEncoderConfig c;
  c.buckets = get_u64(blob, pos);
  c.dimension = get_u64(blob, pos);
  c.max_tokens = get_u64(blob, pos);
  c.seed = get_u64(blob, pos);
  c.tau = std::bit_cast<double>(get_u64(blob, pos));
  const std::uint64_t form = get_u64(blob, pos);
  if (form > 1) throw Error(ErrorCode::SchemaError, "unknown loss form in checkpoint");
  c.loss_form = static_cast<LossForm>(form);
  const std::uint64_t count = get_u64(blob, pos);
  if (c.buckets == 0 || c.dimension == 0 || count != c.buckets * c.dimension ||
      blob.size() - pos != count * 8) {
    throw Error(ErrorCode::SchemaError, "checkpoint size does not match its header");
  }
  std::vector<double> weights(count);
  for (std::size_t i = 0; i < count; ++i) weights[i] = std::bit_cast<double>(get_u64(blob, pos));
  return ToyEncoder(c, std::move(weights));
}

}  // namespace ctxsearch
