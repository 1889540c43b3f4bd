// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Binary cross-entropy, Adam, seeded mini-batching, the epoch loop and
// early stopping with best-epoch rollback.
//
// Batch gradients are the mean of per-example gradients. Each example's
// gradient is computed into its own zeroed buffer and the buffers are
// summed in example order, so any thread count yields the same bits.
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sentiment/errors.hpp"
#include "sentiment/layers.hpp"
#include "sentiment/parallel.hpp"
#include "sentiment/random.hpp"
#include "sentiment/text_pipeline.hpp"

namespace sentiment {

// ---------------------------------------------------------------------------
// Configuration

struct TrainConfig {
  std::size_t embedding_dim = 128;
  std::size_t gru_units = 256;  // per direction
  std::size_t lstm_units = 128;
  double dropout_rate = 0.2;
  std::size_t batch_size = 128;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  std::size_t max_len = 200;
  std::size_t vocab_size = 20000;
  std::size_t min_freq = 1;
  double test_fraction = 0.3;
  double validation_fraction = 0.1;
  std::uint64_t seed = 42;
  StackVariant stack = StackVariant::hbgru_lstm;

  void validate() const {
    auto positive = [](std::string_view key, std::size_t v) {
      if (v < 1) throw ConfigError(std::string(key), "must be at least 1");
    };
    positive("embedding_dim", embedding_dim);
    if (stack != StackVariant::lstm_only) positive("gru_units", gru_units);
    positive("lstm_units", lstm_units);
    positive("batch_size", batch_size);
    positive("max_epochs", max_epochs);
    positive("patience", patience);
    positive("max_len", max_len);
    positive("min_freq", min_freq);
    if (vocab_size < 3) throw ConfigError("vocab_size", "must be at least 3");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ConfigError("dropout_rate", "must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate", "must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2", "must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
    if (!(min_delta >= 0.0)) throw ConfigError("min_delta", "must be non-negative");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
      throw ConfigError("test_fraction", "must lie strictly between 0 and 1");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
      throw ConfigError("validation_fraction", "must lie strictly between 0 and 1");
    }
  }

  ModelDims dims(std::size_t actual_vocab) const {
    return {actual_vocab, embedding_dim, stack == StackVariant::lstm_only ? 0 : gru_units,
            lstm_units};
  }

  // Fixed key order; doubles printed with 17 significant digits so the
  // text form round-trips exactly.
  std::vector<std::pair<std::string, std::string>> to_key_values() const {
    auto d = [](double v) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    auto u = [](std::uint64_t v) { return std::to_string(v); };
    return {
        {"embedding_dim", u(embedding_dim)}, {"gru_units", u(gru_units)},
        {"lstm_units", u(lstm_units)},       {"dropout_rate", d(dropout_rate)},
        {"batch_size", u(batch_size)},       {"learning_rate", d(learning_rate)},
        {"beta1", d(beta1)},                 {"beta2", d(beta2)},
        {"epsilon", d(epsilon)},             {"max_epochs", u(max_epochs)},
        {"patience", u(patience)},           {"min_delta", d(min_delta)},
        {"max_len", u(max_len)},             {"vocab_size", u(vocab_size)},
        {"min_freq", u(min_freq)},           {"test_fraction", d(test_fraction)},
        {"validation_fraction", d(validation_fraction)},
        {"seed", u(seed)},                   {"stack", std::string(to_string(stack))},
    };
  }

  static bool is_key(std::string_view key) {
    for (const auto& [k, v] : TrainConfig{}.to_key_values()) {
      if (k == key) return true;
    }
    return false;
  }

  // Throws ConfigError naming the key on an unknown key or bad value.
  void set(std::string_view key, std::string_view value) {
    const std::string k(key);
    auto parse_u = [&](std::size_t& out) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size()) {
        throw ConfigError(k, "expected a non-negative integer, got '" + std::string(value) + "'");
      }
      out = static_cast<std::size_t>(v);
    };
    auto parse_d = [&](double& out) {
      double v = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
      if (ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v)) {
        throw ConfigError(k, "expected a number, got '" + std::string(value) + "'");
      }
      out = v;
    };
    if (key == "embedding_dim") parse_u(embedding_dim);
    else if (key == "gru_units") parse_u(gru_units);
    else if (key == "lstm_units") parse_u(lstm_units);
    else if (key == "dropout_rate") parse_d(dropout_rate);
    else if (key == "batch_size") parse_u(batch_size);
    else if (key == "learning_rate") parse_d(learning_rate);
    else if (key == "beta1") parse_d(beta1);
    else if (key == "beta2") parse_d(beta2);
    else if (key == "epsilon") parse_d(epsilon);
    else if (key == "max_epochs") parse_u(max_epochs);
    else if (key == "patience") parse_u(patience);
    else if (key == "min_delta") parse_d(min_delta);
    else if (key == "max_len") parse_u(max_len);
    else if (key == "vocab_size") parse_u(vocab_size);
    else if (key == "min_freq") parse_u(min_freq);
    else if (key == "test_fraction") parse_d(test_fraction);
    else if (key == "validation_fraction") parse_d(validation_fraction);
    else if (key == "seed") {
      std::size_t s = 0;
      parse_u(s);
      seed = s;
    } else if (key == "stack") stack = parse_stack_variant(value);
    else throw ConfigError(k, "unknown configuration key");
  }

  bool operator==(const TrainConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Loss

inline constexpr double kProbabilityClamp = 1e-12;

inline double clamp_probability(double yhat) noexcept {
  return std::clamp(yhat, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

inline double bce_loss(int y, double yhat) noexcept {
  const double p = clamp_probability(yhat);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

// dL/dŷ = (ŷ - y) / (ŷ (1 - ŷ)), on the clamped ŷ.
inline double bce_grad(int y, double yhat) noexcept {
  const double p = clamp_probability(yhat);
  return (p - y) / (p * (1.0 - p));
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(const ModelParams& params)
      : first_moment(params.zeros_like()), second_moment(params.zeros_like()) {}
};

// One bias-corrected Adam update. The PAD embedding row is never touched.
inline void adam_step(AdamState& state, ModelParams& params, const Gradients& grads,
                      const TrainConfig& config) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw DimensionError("adam_step: parameter, gradient and moment shapes differ");
  }
  state.step += 1;
  const double b1 = config.beta1, b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate, eps = config.epsilon;

  auto theta = params.tensors();
  auto g = grads.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  for (std::size_t t = 0; t < theta.size(); ++t) {
    // PAD row occupies the first `dim` entries of the embedding table.
    const std::size_t skip = t == 0 ? params.embedding.dim() : 0;
    for (std::size_t j = skip; j < theta[t].values.size(); ++j) {
      const double gj = g[t].values[j];
      m[t].values[j] = b1 * m[t].values[j] + (1.0 - b1) * gj;
      v[t].values[j] = b2 * v[t].values[j] + (1.0 - b2) * gj * gj;
      const double m_hat = m[t].values[j] / correction1;
      const double v_hat = v[t].values[j] / correction2;
      theta[t].values[j] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
  params.revision += 1;
}

// ---------------------------------------------------------------------------
// Data and batching

struct EncodedExample {
  TokenSequence sequence;
  int label = 0;
};

using EncodedCorpus = std::vector<EncodedExample>;

inline EncodedCorpus encode_corpus(const LabeledCorpus& cleaned, const Vocabulary& vocab,
                                   std::size_t max_len) {
  EncodedCorpus out;
  out.reserve(cleaned.size());
  for (const auto& r : cleaned.reviews()) out.push_back({encode_sequence(r.text, vocab, max_len), r.label});
  return out;
}

using Batch = std::vector<std::size_t>;

// Seeded permutation of [0, n) for this epoch, cut into contiguous slices.
inline std::vector<Batch> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed,
                                       std::uint64_t epoch) {
  if (batch_size < 1) throw ConfigError("batch_size", "must be at least 1");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, epoch));
  rng.shuffle(order);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

// Dropout stream for one example in one epoch.
inline std::uint64_t example_seed(std::uint64_t seed, std::uint64_t epoch, std::size_t index) {
  return mix_seed(mix_seed(seed, epoch), index);
}

struct RunOptions {
  std::size_t threads = 1;  // 0 = hardware concurrency
  bool deterministic = true;
};

// ---------------------------------------------------------------------------
// Epoch loop

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Infer-mode probabilities, in corpus order.
inline std::vector<double> predict_all(const ModelParams& params, const EncodedCorpus& data,
                                       const RunOptions& options = {}) {
  std::vector<double> out(data.size());
  parallel_for(data.size(), resolve_threads(options.threads),
               [&](std::size_t i, std::size_t) { out[i] = predict_probability(params, data[i].sequence); });
  return out;
}

inline LossAccuracy evaluate_loss(const ModelParams& params, const EncodedCorpus& data,
                                  const RunOptions& options = {}) {
  if (data.empty()) throw DataError("", 0, "evaluate_loss: empty corpus");
  const auto probs = predict_all(params, data, options);
  LossAccuracy out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.loss += bce_loss(data[i].label, probs[i]);
    correct += classify(probs[i]) == data[i].label ? 1 : 0;
  }
  out.loss /= static_cast<double>(data.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

// Mean gradient of the batch, with per-example train-mode loss and
// correctness written to `losses` / `correct` (indexed like `batch`).
inline Gradients batch_gradient(const ModelParams& params, const EncodedCorpus& data,
                                const Batch& batch, const TrainConfig& config, std::uint64_t epoch,
                                const RunOptions& options, std::vector<double>& losses,
                                std::vector<int>& correct) {
  const std::size_t threads = std::min(resolve_threads(options.threads), batch.size());
  std::vector<Gradients> scratch(std::max<std::size_t>(threads, 1), params.zeros_like());
  Gradients sum = params.zeros_like();
  losses.assign(batch.size(), 0.0);
  correct.assign(batch.size(), 0);
  for (std::size_t start = 0; start < batch.size(); start += scratch.size()) {
    const std::size_t count = std::min(scratch.size(), batch.size() - start);
    parallel_for(count, threads, [&](std::size_t i, std::size_t) {
      const std::size_t pos = start + i;
      const auto& ex = data[batch[pos]];
      const auto cache = model_forward(params, ex.sequence, Mode::train, config.dropout_rate,
                                       example_seed(config.seed, epoch, batch[pos]));
      losses[pos] = bce_loss(ex.label, cache.yhat);
      correct[pos] = classify(cache.yhat) == ex.label ? 1 : 0;
      scratch[i].set_zero();
      model_backward_into(params, cache, bce_grad(ex.label, cache.yhat), scratch[i]);
    });
    for (std::size_t i = 0; i < count; ++i) sum.accumulate(scratch[i]);
  }
  sum.scale(1.0 / static_cast<double>(batch.size()));
  return sum;
}

// Mean train-mode loss and accuracy over the epoch (each example scored
// with the parameters in effect when its batch was processed).
inline LossAccuracy train_epoch(ModelParams& params, AdamState& adam, const EncodedCorpus& data,
                                const std::vector<Batch>& batches, const TrainConfig& config,
                                std::uint64_t epoch, const RunOptions& options = {}) {
  double loss_sum = 0.0;
  std::size_t correct_sum = 0, seen = 0;
  std::vector<double> losses;
  std::vector<int> correct;
  for (const auto& batch : batches) {
    if (batch.empty()) continue;
    Gradients grad = batch_gradient(params, data, batch, config, epoch, options, losses, correct);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      loss_sum += losses[i];
      correct_sum += static_cast<std::size_t>(correct[i]);
    }
    seen += batch.size();
    adam_step(adam, params, grad, config);
  }
  if (seen == 0) throw DataError("", 0, "train_epoch: no examples");
  return {loss_sum / static_cast<double>(seen),
          static_cast<double>(correct_sum) / static_cast<double>(seen)};
}

// ---------------------------------------------------------------------------
// Early stopping and fit

// Tracks the best validation loss. An epoch improves when its loss is
// below best - min_delta; `patience` consecutive non-improving epochs stop.
class EarlyStopping {
 public:
  EarlyStopping(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  enum class Decision { improved, wait, stop };

  Decision update(std::size_t epoch, double validation_loss) {
    if (validation_loss < best_loss_ - min_delta_) {
      best_loss_ = validation_loss;
      best_epoch_ = epoch;
      waited_ = 0;
      return Decision::improved;
    }
    return ++waited_ >= patience_ ? Decision::stop : Decision::wait;
  }

  double best_loss() const noexcept { return best_loss_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t waited_ = 0;
};

enum class StopReason { max_epochs, early_stop };

inline std::string_view to_string(StopReason r) noexcept {
  return r == StopReason::max_epochs ? "max_epochs" : "early_stop";
}

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double validation_loss = 0.0;
  double validation_accuracy = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t stop_epoch = 0;
  std::size_t best_epoch = 0;
  StopReason stop_reason = StopReason::max_epochs;
};

inline void write_history(std::ostream& out, const TrainingHistory& h) {
  char buf[256];
  out << "epoch\ttrain_loss\ttrain_accuracy\tvalidation_loss\tvalidation_accuracy\n";
  for (const auto& e : h.epochs) {
    std::snprintf(buf, sizeof buf, "%zu\t%.10f\t%.6f\t%.10f\t%.6f\n", e.epoch, e.train_loss,
                  e.train_accuracy, e.validation_loss, e.validation_accuracy);
    out << buf;
  }
  out << "# stop_epoch " << h.stop_epoch << "\n"
      << "# stop_reason " << to_string(h.stop_reason) << "\n"
      << "# best_epoch " << h.best_epoch << "\n";
}

struct FitResult {
  ModelParams params;  // from the best validation epoch
  TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

inline FitResult fit(const TrainConfig& config, ModelParams initial, const EncodedCorpus& train,
                     const EncodedCorpus& validation, const RunOptions& options = {},
                     const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train.empty()) throw DataError("", 0, "fit: empty training corpus");
  if (validation.empty()) throw DataError("", 0, "fit: empty validation corpus");

  ModelParams params = std::move(initial);
  AdamState adam(params);
  EarlyStopping stopper(config.patience, config.min_delta);
  FitResult result{params, {}};
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = make_batches(train.size(), config.batch_size, config.seed, epoch);
    const auto train_stats = train_epoch(params, adam, train, batches, config, epoch, options);
    const auto val = evaluate_loss(params, validation, options);
    EpochRecord record{epoch, train_stats.loss, train_stats.accuracy, val.loss, val.accuracy};
    result.history.epochs.push_back(record);
    result.history.stop_epoch = epoch;
    if (on_epoch) on_epoch(record);
    const auto decision = stopper.update(epoch, val.loss);
    if (decision == EarlyStopping::Decision::improved) {
      result.params = params;
    } else if (decision == EarlyStopping::Decision::stop) {
      result.history.stop_reason = StopReason::early_stop;
      break;
    }
  }
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

inline FitResult fit(const TrainConfig& config, std::size_t vocab_size, const EncodedCorpus& train,
                     const EncodedCorpus& validation, const RunOptions& options = {},
                     const EpochCallback& on_epoch = {}) {
  config.validate();
  return fit(config, ModelParams::initialize(config.stack, config.dims(vocab_size), config.seed),
             train, validation, options, on_epoch);
}

}  // namespace sentiment
