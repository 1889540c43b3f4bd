// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles/corpora.hpp"
#include "sentiment/training.hpp"

namespace sentiment {
namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.embedding_dim = 4;
  c.gru_units = 3;
  c.lstm_units = 3;
  c.dropout_rate = 0.0;
  c.batch_size = 4;
  c.learning_rate = 0.01;
  c.max_epochs = 5;
  c.max_len = 5;
  c.seed = 3;
  return c;
}

// "good" -> 1, "bad" -> 0, with a filler token so sequences differ.
EncodedCorpus good_bad_corpus(const Vocabulary& vocab, std::size_t n, std::size_t max_len) {
  EncodedCorpus out;
  const char* filler[] = {"film", "plot", "food"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const std::string text = std::string(filler[i % 3]) + (label ? " good" : " bad");
    out.push_back({encode_sequence(text, vocab, max_len), label});
  }
  return out;
}

Vocabulary good_bad_vocab() { return Vocabulary::from_tokens({"good", "bad", "film", "plot", "food"}); }

// ---------------------------------------------------------------------------
// Loss

TEST(BceLoss, Values) {
  EXPECT_EQ(bce_loss(1, 1.0), bce_loss(1, 1.0 - kProbabilityClamp));
  EXPECT_LT(bce_loss(1, 1.0), 1e-11);
  EXPECT_NEAR(bce_loss(1, 0.5), 0.6931471805599453, 1e-15);
  EXPECT_NEAR(bce_loss(0, 0.9), 2.3025850929940455, 1e-12);
  EXPECT_TRUE(std::isfinite(bce_loss(1, 0.0)));
  EXPECT_TRUE(std::isfinite(bce_loss(0, 1.0)));
}

TEST(BceLoss, NonNegative) {
  for (double p = 0.0; p <= 1.0; p += 0.01) {
    EXPECT_GE(bce_loss(0, p), 0.0);
    EXPECT_GE(bce_loss(1, p), 0.0);
  }
}

TEST(BceGrad, ClosedFormAndFiniteDifference) {
  EXPECT_DOUBLE_EQ(bce_grad(1, 0.5), -2.0);
  EXPECT_DOUBLE_EQ(bce_grad(0, 0.5), 2.0);
  const double h = 1e-6;
  for (int y : {0, 1}) {
    for (double p : {0.2, 0.5, 0.8}) {
      const double fd = (bce_loss(y, p + h) - bce_loss(y, p - h)) / (2.0 * h);
      EXPECT_NEAR(bce_grad(y, p), fd, 1e-6) << y << " " << p;
    }
  }
}

// ---------------------------------------------------------------------------
// TrainConfig

TEST(TrainConfig, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.embedding_dim, 128u);
  EXPECT_EQ(c.gru_units, 256u);
  EXPECT_EQ(c.lstm_units, 128u);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_EQ(c.learning_rate, 0.001);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.epsilon, 1e-7);
  EXPECT_EQ(c.dropout_rate, 0.2);
  EXPECT_EQ(c.test_fraction, 0.3);
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, ValidationNamesKey) {
  auto expect_key = [](TrainConfig c, const std::string& key) {
    try {
      c.validate();
      ADD_FAILURE() << "no error for " << key;
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), key);
    }
  };
  TrainConfig c;
  c.dropout_rate = 1.5;
  expect_key(c, "dropout_rate");
  c = {};
  c.learning_rate = 0.0;
  expect_key(c, "learning_rate");
  c = {};
  c.batch_size = 0;
  expect_key(c, "batch_size");
  c = {};
  c.beta2 = 1.0;
  expect_key(c, "beta2");
}

TEST(TrainConfig, KeyValueRoundTrip) {
  TrainConfig a = tiny_config();
  a.stack = StackVariant::gru_lstm;
  a.learning_rate = 0.1 + 0.2;
  TrainConfig b;
  for (const auto& [k, v] : a.to_key_values()) b.set(k, v);
  EXPECT_EQ(a.to_key_values(), b.to_key_values());
  EXPECT_EQ(b.learning_rate, a.learning_rate);
  EXPECT_EQ(b.stack, StackVariant::gru_lstm);
  EXPECT_THROW(b.set("learning_rat", "1"), ConfigError);
  EXPECT_THROW(b.set("batch_size", "ten"), ConfigError);
}

// ---------------------------------------------------------------------------
// Adam

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = ModelParams::initialize(StackVariant::hbgru_lstm, {6, 2, 2, 2}, 1);
  const auto before = p;
  AdamState s(p);
  adam_step(s, p, p.zeros_like(), TrainConfig{});
  EXPECT_EQ(s.step, 1u);
  auto a = p.tensors();
  auto b = before.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j = 0; j < a[t].values.size(); ++j) EXPECT_EQ(a[t].values[j], b[t].values[j]);
  }
}

TEST(Adam, FirstStepClosedForm) {
  auto p = ModelParams::zeros(StackVariant::lstm_only, {3, 1, 0, 1});
  AdamState s(p);
  auto g = p.zeros_like();
  g.dense.bias[0] = 0.3;
  g.dense.weights(0, 0) = -2.0;
  const TrainConfig c;
  adam_step(s, p, g, c);
  EXPECT_NEAR(p.dense.bias[0], -0.001 * 0.3 / (0.3 + 1e-7), 1e-15);
  EXPECT_NEAR(p.dense.weights(0, 0), 0.001 * 2.0 / (2.0 + 1e-7), 1e-15);
  EXPECT_LT(std::abs(p.dense.bias[0]), c.learning_rate);
}

TEST(Adam, FirstStepBoundedByLearningRate) {
  auto p = ModelParams::initialize(StackVariant::hbgru_lstm, {8, 3, 2, 2}, 5);
  const auto before = p;
  Rng rng(6);
  auto g = p.zeros_like();
  for (auto& t : g.tensors()) {
    for (double& v : t.values) v = 10.0 * (rng.uniform01() - 0.5);
  }
  AdamState s(p);
  const TrainConfig c;
  adam_step(s, p, g, c);
  auto a = p.tensors();
  auto b = before.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j = 0; j < a[t].values.size(); ++j) {
      EXPECT_LT(std::abs(a[t].values[j] - b[t].values[j]), c.learning_rate);
    }
  }
  for (std::size_t c2 = 0; c2 < p.embedding.dim(); ++c2) EXPECT_EQ(p.embedding.table(0, c2), 0.0);
}

TEST(Adam, ConstantGradientDecreasesMonotonically) {
  auto p = ModelParams::zeros(StackVariant::lstm_only, {3, 1, 0, 1});
  AdamState s(p);
  auto g = p.zeros_like();
  g.dense.bias[0] = 0.5;
  double last = p.dense.bias[0];
  for (int i = 0; i < 3; ++i) {
    adam_step(s, p, g, TrainConfig{});
    EXPECT_LT(p.dense.bias[0], last);
    last = p.dense.bias[0];
  }
  EXPECT_EQ(s.step, 3u);
  for (const auto& t : s.second_moment.tensors()) {
    for (double v : t.values) EXPECT_GE(v, 0.0);
  }
}

TEST(Adam, ShapeMismatchThrows) {
  auto p = ModelParams::zeros(StackVariant::lstm_only, {3, 1, 0, 1});
  AdamState s(p);
  const auto other = ModelParams::zeros(StackVariant::lstm_only, {4, 1, 0, 1});
  EXPECT_THROW(adam_step(s, p, other, TrainConfig{}), DimensionError);
}

// ---------------------------------------------------------------------------
// Batching

TEST(MakeBatches, SizesAndDeterminism) {
  const auto b = make_batches(10, 4, 1, 1);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 4u);
  EXPECT_EQ(b[2].size(), 2u);
  EXPECT_EQ(make_batches(10, 4, 1, 1), b);
  EXPECT_NE(make_batches(100, 100, 1, 1), make_batches(100, 100, 1, 2));
  std::vector<std::size_t> all;
  for (const auto& batch : make_batches(37, 5, 9, 3)) all.insert(all.end(), batch.begin(), batch.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
}

// ---------------------------------------------------------------------------
// Epoch loop

TEST(BatchGradient, SingleExampleEqualsPerExample) {
  const auto vocab = good_bad_vocab();
  const auto data = good_bad_corpus(vocab, 4, 5);
  const auto config = tiny_config();
  const auto p = ModelParams::initialize(StackVariant::hbgru_lstm, config.dims(vocab.size()), 2);
  std::vector<double> losses;
  std::vector<int> correct;
  const auto g = batch_gradient(p, data, {2}, config, 1, {}, losses, correct);
  const auto cache = model_forward(p, data[2].sequence, Mode::train, 0.0, example_seed(config.seed, 1, 2));
  EXPECT_EQ(g, model_backward(p, cache, bce_grad(data[2].label, cache.yhat)));
  EXPECT_EQ(losses[0], bce_loss(data[2].label, cache.yhat));
}

TEST(BatchGradient, ThreadCountIndependent) {
  const auto vocab = good_bad_vocab();
  const auto data = good_bad_corpus(vocab, 11, 5);
  auto config = tiny_config();
  config.dropout_rate = 0.3;
  const auto p = ModelParams::initialize(StackVariant::hbgru_lstm, config.dims(vocab.size()), 2);
  Batch all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<double> l1, l3;
  std::vector<int> c1, c3;
  const auto g1 = batch_gradient(p, data, all, config, 2, {1, true}, l1, c1);
  const auto g3 = batch_gradient(p, data, all, config, 2, {3, true}, l3, c3);
  EXPECT_EQ(g1, g3);
  EXPECT_EQ(l1, l3);
}

TEST(TrainEpoch, ZeroLearningRateFreezesParameters) {
  const auto vocab = good_bad_vocab();
  const auto data = good_bad_corpus(vocab, 8, 5);
  auto config = tiny_config();
  config.learning_rate = 0.0;
  EXPECT_THROW(config.validate(), ConfigError);  // fit rejects it; train_epoch takes it as given
  auto p = ModelParams::initialize(StackVariant::hbgru_lstm, config.dims(vocab.size()), 2);
  const auto before = p;
  AdamState adam(p);
  const auto stats = train_epoch(p, adam, data, make_batches(data.size(), 4, 1, 1), config, 1);
  EXPECT_GT(stats.loss, 0.0);
  auto a = p.tensors();
  auto b = before.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (std::size_t j = 0; j < a[t].values.size(); ++j) EXPECT_EQ(a[t].values[j], b[t].values[j]);
  }
}

TEST(Fit, ToyLossStrictlyDecreases) {
  const auto vocab = good_bad_vocab();
  const auto train = good_bad_corpus(vocab, 20, 5);
  const auto config = tiny_config();
  const auto r = fit(config, vocab.size(), train, train);
  ASSERT_EQ(r.history.epochs.size(), 5u);
  for (std::size_t e = 1; e < 5; ++e) {
    EXPECT_LT(r.history.epochs[e].train_loss, r.history.epochs[e - 1].train_loss) << e;
  }
}

TEST(Fit, ToyReachesFullAccuracy) {
  const auto vocab = good_bad_vocab();
  const auto train = good_bad_corpus(vocab, 20, 5);
  auto config = tiny_config();
  config.max_epochs = 40;
  const auto r = fit(config, vocab.size(), train, train);
  EXPECT_EQ(evaluate_loss(r.params, train).accuracy, 1.0);
  EXPECT_EQ(r.history.epochs[r.history.best_epoch - 1].validation_accuracy, 1.0);
}

TEST(Fit, MaxEpochsStop) {
  const auto vocab = good_bad_vocab();
  const auto train = good_bad_corpus(vocab, 12, 5);
  auto config = tiny_config();
  config.max_epochs = 3;
  const auto r = fit(config, vocab.size(), train, train);
  EXPECT_EQ(r.history.epochs.size(), 3u);
  EXPECT_EQ(r.history.stop_epoch, 3u);
  EXPECT_EQ(r.history.stop_reason, StopReason::max_epochs);
}

TEST(Fit, EarlyStopRollsBackToBestEpoch) {
  const auto vocab = good_bad_vocab();
  auto train = good_bad_corpus(vocab, 12, 5);
  for (auto& ex : train) ex.label = 1;
  auto validation = train;
  for (auto& ex : validation) ex.label = 0;
  auto config = tiny_config();
  config.patience = 1;
  config.max_epochs = 10;
  const auto r = fit(config, vocab.size(), train, validation);
  EXPECT_EQ(r.history.stop_reason, StopReason::early_stop);
  EXPECT_EQ(r.history.stop_epoch, 2u);
  EXPECT_EQ(r.history.best_epoch, 1u);
  EXPECT_GT(r.history.epochs[1].validation_loss, r.history.epochs[0].validation_loss);

  config.max_epochs = 1;
  const auto one = fit(config, vocab.size(), train, validation);
  EXPECT_EQ(r.params, one.params);
  EXPECT_EQ(evaluate_loss(r.params, validation).loss, r.history.epochs[0].validation_loss);
}

TEST(Fit, ReturnedParametersNeverWorseThanBest) {
  const auto corpus = clean_corpus(oracle::keyword_corpus(60, 4), {}, {});
  const auto vocab = build_vocabulary(corpus, 100, 1);
  const auto data = encode_corpus(corpus, vocab, 8);
  const EncodedCorpus train(data.begin(), data.begin() + 40), validation(data.begin() + 40, data.end());
  auto config = tiny_config();
  config.dropout_rate = 0.2;
  config.max_epochs = 8;
  config.patience = 2;
  const auto r = fit(config, vocab.size(), train, validation);
  double best = INFINITY;
  for (const auto& e : r.history.epochs) best = std::min(best, e.validation_loss);
  EXPECT_EQ(evaluate_loss(r.params, validation).loss, best);
}

TEST(Fit, Deterministic) {
  const auto corpus = clean_corpus(oracle::keyword_corpus(30, 8), {}, {});
  const auto vocab = build_vocabulary(corpus, 100, 1);
  const auto data = encode_corpus(corpus, vocab, 8);
  auto config = tiny_config();
  config.dropout_rate = 0.2;
  config.max_epochs = 3;
  const auto a = fit(config, vocab.size(), data, data);
  const auto b = fit(config, vocab.size(), data, data);
  EXPECT_EQ(a.params, b.params);
  std::ostringstream ha, hb;
  write_history(ha, a.history);
  write_history(hb, b.history);
  EXPECT_EQ(ha.str(), hb.str());
}

TEST(Fit, ZeroDropoutMatchesNoDropoutPath) {
  const auto vocab = good_bad_vocab();
  const auto data = good_bad_corpus(vocab, 10, 5);
  auto config = tiny_config();
  config.max_epochs = 1;  // the first epoch always improves, so no rollback
  const auto init = ModelParams::initialize(config.stack, config.dims(vocab.size()), config.seed);
  const auto with_zero = fit(config, init, data, data);
  // the same loop, done by hand through infer-mode forwards
  ModelParams p = init;
  AdamState adam(p);
  for (std::size_t epoch = 1; epoch <= 1; ++epoch) {
    for (const auto& batch : make_batches(data.size(), config.batch_size, config.seed, epoch)) {
      Gradients sum = p.zeros_like();
      for (std::size_t i : batch) {
        const auto cache = model_forward(p, data[i].sequence, Mode::infer, 0.0, 0);
        sum.accumulate(model_backward(p, cache, bce_grad(data[i].label, cache.yhat)));
      }
      sum.scale(1.0 / static_cast<double>(batch.size()));
      adam_step(adam, p, sum, config);
    }
  }
  EXPECT_EQ(with_zero.params, p);
}

TEST(Fit, EmptyCorpusThrows) {
  EXPECT_THROW(fit(tiny_config(), 7, {}, good_bad_corpus(good_bad_vocab(), 2, 5)), DataError);
  EXPECT_THROW(fit(tiny_config(), 7, good_bad_corpus(good_bad_vocab(), 2, 5), {}), DataError);
}

TEST(EarlyStopping, PatienceCounting) {
  EarlyStopping s(2, 0.1);
  using D = EarlyStopping::Decision;
  EXPECT_EQ(s.update(1, 1.0), D::improved);
  EXPECT_EQ(s.update(2, 0.95), D::wait);  // not below 1.0 - 0.1
  EXPECT_EQ(s.update(3, 0.85), D::improved);
  EXPECT_EQ(s.update(4, 0.9), D::wait);
  EXPECT_EQ(s.update(5, 0.9), D::stop);
  EXPECT_EQ(s.best_epoch(), 3u);
}

}  // namespace
}  // namespace sentiment
