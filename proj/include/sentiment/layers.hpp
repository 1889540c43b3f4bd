// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Layer stack of the hybrid classifier:
//
//   tokens -> embedding -> BGRU (forward GRU ‖ backward GRU per step)
//          -> dropout -> LSTM (final state) -> dropout -> sigmoid unit
//
// plus two baselines sharing the same cells: LSTM directly on embeddings,
// and a single forward GRU under the LSTM. Forward passes record a
// ForwardCache; model_backward runs full BPTT against it.
//
// GRU (k units, input x):
//   z = σ(W_z [h_prev, x] + b_z)
//   r = σ(W_r [h_prev, x] + b_r)
//   h̃ = tanh(W_h [r ∗ h_prev, x] + b_h)
//   h = (1 − z) ∗ h_prev + z ∗ h̃
// The backward-direction GRU runs the same cell from t = n down to 1 with
// h_{n+1} = 0; the BGRU output at t is [h_t^f ; h_t^b].
//
// LSTM (m units):
//   f, i, o = σ(W_{f,i,o} [h_prev, x] + b),  C̃ = tanh(W_C [h_prev, x] + b_C)
//   C = f ∗ C_prev + i ∗ C̃,  h = o ∗ tanh(C)
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sentiment/errors.hpp"
#include "sentiment/random.hpp"
#include "sentiment/tensor.hpp"
#include "sentiment/text_pipeline.hpp"

namespace sentiment {

enum class StackVariant { hbgru_lstm, lstm_only, gru_lstm };

inline std::string_view to_string(StackVariant s) noexcept {
  switch (s) {
    case StackVariant::hbgru_lstm: return "hbgru_lstm";
    case StackVariant::lstm_only: return "lstm_only";
    case StackVariant::gru_lstm: return "gru_lstm";
  }
  return "?";
}

inline StackVariant parse_stack_variant(std::string_view name) {
  if (name == "hbgru_lstm") return StackVariant::hbgru_lstm;
  if (name == "lstm_only") return StackVariant::lstm_only;
  if (name == "gru_lstm") return StackVariant::gru_lstm;
  throw ConfigError("stack", "expected hbgru_lstm, lstm_only or gru_lstm, got '" +
                                 std::string(name) + "'");
}

enum class Mode { train, infer };

// ---------------------------------------------------------------------------
// Parameters

struct EmbeddingParams {
  Matrix table;  // vocab_size x d; row 0 (PAD) stays zero

  std::size_t vocab_size() const noexcept { return table.rows(); }
  std::size_t dim() const noexcept { return table.cols(); }
};

struct GruParams {
  Matrix w_update, w_reset, w_candidate;  // k x (k + in)
  Vector b_update, b_reset, b_candidate;  // k

  static GruParams zeros(std::size_t hidden, std::size_t input) {
    const std::size_t cols = hidden + input;
    return {Matrix(hidden, cols), Matrix(hidden, cols), Matrix(hidden, cols),
            Vector(hidden),       Vector(hidden),       Vector(hidden)};
  }

  std::size_t hidden() const noexcept { return w_update.rows(); }
  std::size_t input_dim() const noexcept { return w_update.cols() - w_update.rows(); }
  bool empty() const noexcept { return w_update.size() == 0; }
};

struct LstmParams {
  Matrix w_forget, w_input, w_output, w_cell;  // m x (m + in)
  Vector b_forget, b_input, b_output, b_cell;  // m

  static LstmParams zeros(std::size_t hidden, std::size_t input) {
    const std::size_t cols = hidden + input;
    return {Matrix(hidden, cols), Matrix(hidden, cols), Matrix(hidden, cols), Matrix(hidden, cols),
            Vector(hidden),       Vector(hidden),       Vector(hidden),       Vector(hidden)};
  }

  std::size_t hidden() const noexcept { return w_forget.rows(); }
  std::size_t input_dim() const noexcept { return w_forget.cols() - w_forget.rows(); }
};

struct DenseParams {
  Matrix weights;  // 1 x m
  Vector bias;     // 1
};

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 0;
  std::size_t gru_units = 0;  // per direction
  std::size_t lstm_units = 0;

  bool operator==(const ModelDims&) const = default;
};

// Width of the sequence the LSTM consumes for a given stack.
inline std::size_t lstm_input_dim(StackVariant stack, const ModelDims& dims) noexcept {
  switch (stack) {
    case StackVariant::hbgru_lstm: return 2 * dims.gru_units;
    case StackVariant::gru_lstm: return dims.gru_units;
    case StackVariant::lstm_only: return dims.embedding_dim;
  }
  return 0;
}

// Read-write view of one named parameter tensor. Biases are rows x 1.
struct TensorRef {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<double> values;
};

struct TensorCRef {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::span<const double> values;
};

// All trainable parameters. Gradients and Adam moments reuse this type
// (same shapes). GRU blocks a stack does not use are empty.
struct ModelParams {
  StackVariant stack = StackVariant::hbgru_lstm;
  EmbeddingParams embedding;
  GruParams gru_fwd;
  GruParams gru_bwd;
  LstmParams lstm;
  DenseParams dense;
  // Bumped by every optimizer step; forward caches remember it so a
  // backward pass against updated parameters is rejected.
  std::uint64_t revision = 0;

  static ModelParams zeros(StackVariant stack, const ModelDims& dims) {
    if (dims.vocab_size < 2 || dims.embedding_dim == 0 || dims.lstm_units == 0 ||
        (stack != StackVariant::lstm_only && dims.gru_units == 0)) {
      throw DimensionError("ModelParams: every dimension must be positive");
    }
    ModelParams p;
    p.stack = stack;
    p.embedding.table = Matrix(dims.vocab_size, dims.embedding_dim);
    if (stack != StackVariant::lstm_only) {
      p.gru_fwd = GruParams::zeros(dims.gru_units, dims.embedding_dim);
    }
    if (stack == StackVariant::hbgru_lstm) {
      p.gru_bwd = GruParams::zeros(dims.gru_units, dims.embedding_dim);
    }
    p.lstm = LstmParams::zeros(dims.lstm_units, lstm_input_dim(stack, dims));
    p.dense = {Matrix(1, dims.lstm_units), Vector(1)};
    return p;
  }

  // Weight matrices (embedding included) drawn by seeded_init, each from
  // its own derived seed; biases zero; PAD row zero.
  static ModelParams initialize(StackVariant stack, const ModelDims& dims, std::uint64_t seed) {
    ModelParams p = zeros(stack, dims);
    std::uint64_t stream = 0;
    p.for_each_tensor([&](TensorRef t) {
      ++stream;
      if (t.cols == 1 && t.name.find(".b_") != std::string::npos) return;
      if (t.name == "dense.bias") return;
      Matrix init = seeded_init(t.rows, t.cols, mix_seed(seed, stream));
      std::copy(init.values().begin(), init.values().end(), t.values.begin());
    });
    auto pad = p.embedding.table.row(Vocabulary::kPad);
    std::fill(pad.begin(), pad.end(), 0.0);
    return p;
  }

  ModelDims dims() const noexcept {
    return {embedding.vocab_size(), embedding.dim(), gru_fwd.hidden(), lstm.hidden()};
  }

  // Same stack and every tensor the same shape.
  bool same_shape(const ModelParams& other) const {
    if (stack != other.stack) return false;
    auto a = tensors();
    auto b = other.tensors();
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].rows != b[i].rows || a[i].cols != b[i].cols) return false;
    }
    return true;
  }

  // Visits every tensor the stack uses, always in the same order.
  template <typename F>
  void for_each_tensor(F&& f) {
    auto mat = [&](std::string name, Matrix& m) { f(TensorRef{std::move(name), m.rows(), m.cols(), m.span()}); };
    auto vec = [&](std::string name, Vector& v) { f(TensorRef{std::move(name), v.size(), 1, v.span()}); };
    mat("embedding", embedding.table);
    auto gru = [&](const std::string& prefix, GruParams& g) {
      mat(prefix + ".w_update", g.w_update);
      mat(prefix + ".w_reset", g.w_reset);
      mat(prefix + ".w_candidate", g.w_candidate);
      vec(prefix + ".b_update", g.b_update);
      vec(prefix + ".b_reset", g.b_reset);
      vec(prefix + ".b_candidate", g.b_candidate);
    };
    if (stack != StackVariant::lstm_only) gru("gru_fwd", gru_fwd);
    if (stack == StackVariant::hbgru_lstm) gru("gru_bwd", gru_bwd);
    mat("lstm.w_forget", lstm.w_forget);
    mat("lstm.w_input", lstm.w_input);
    mat("lstm.w_output", lstm.w_output);
    mat("lstm.w_cell", lstm.w_cell);
    vec("lstm.b_forget", lstm.b_forget);
    vec("lstm.b_input", lstm.b_input);
    vec("lstm.b_output", lstm.b_output);
    vec("lstm.b_cell", lstm.b_cell);
    mat("dense.weights", dense.weights);
    vec("dense.bias", dense.bias);
  }

  std::vector<TensorRef> tensors() {
    std::vector<TensorRef> out;
    for_each_tensor([&](TensorRef t) { out.push_back(std::move(t)); });
    return out;
  }

  std::vector<TensorCRef> tensors() const {
    std::vector<TensorCRef> out;
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](TensorRef t) { out.push_back({std::move(t.name), t.rows, t.cols, t.values}); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors()) n += t.values.size();
    return n;
  }

  // Zero tensors of the same shapes (for gradients and optimizer moments).
  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.revision = 0;
    z.for_each_tensor([](TensorRef t) { std::fill(t.values.begin(), t.values.end(), 0.0); });
    return z;
  }

  void set_zero() {
    for_each_tensor([](TensorRef t) { std::fill(t.values.begin(), t.values.end(), 0.0); });
  }

  // this += other (same shapes), tensor by tensor in visiting order.
  void accumulate(const ModelParams& other) {
    auto dst = tensors();
    auto src = other.tensors();
    if (dst.size() != src.size()) throw DimensionError("accumulate: stack mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (dst[i].values.size() != src[i].values.size()) {
        throw DimensionError("accumulate: shape mismatch in " + dst[i].name);
      }
      for (std::size_t j = 0; j < src[i].values.size(); ++j) dst[i].values[j] += src[i].values[j];
    }
  }

  void scale(double factor) {
    for_each_tensor([&](TensorRef t) {
      for (double& v : t.values) v *= factor;
    });
  }

  bool operator==(const ModelParams& other) const {
    if (!same_shape(other)) return false;
    auto a = tensors();
    auto b = other.tensors();
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!std::equal(a[i].values.begin(), a[i].values.end(), b[i].values.begin())) return false;
    }
    return true;
  }
};

using Gradients = ModelParams;

// ---------------------------------------------------------------------------
// Embedding

// One row of the table per position before true_length.
inline std::vector<Vector> embed_lookup(const TokenSequence& seq, const EmbeddingParams& emb) {
  if (seq.true_length > seq.indices.size()) {
    throw DimensionError("embed_lookup: true_length exceeds sequence length");
  }
  std::vector<Vector> out;
  out.reserve(seq.true_length);
  for (std::size_t t = 0; t < seq.true_length; ++t) {
    const std::size_t idx = seq.indices[t];
    if (idx >= emb.vocab_size()) {
      throw DimensionError("embed_lookup: index " + std::to_string(idx) +
                           " outside vocabulary of " + std::to_string(emb.vocab_size()));
    }
    auto row = emb.table.row(idx);
    out.emplace_back(std::vector<double>(row.begin(), row.end()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// GRU

struct GruGates {
  Vector input;        // [h_prev, x]
  Vector update;       // z
  Vector reset;        // r
  Vector gated_input;  // [r ∗ h_prev, x]
  Vector candidate;    // h̃
};

struct GruStep {
  Vector hidden;
  GruGates gates;
};

inline GruStep gru_cell_forward(const GruParams& p, const Vector& h_prev, const Vector& x) {
  const std::size_t k = p.hidden();
  if (h_prev.size() != k || x.size() != p.input_dim()) {
    throw DimensionError("gru_cell_forward: expected h of " + std::to_string(k) + " and x of " +
                         std::to_string(p.input_dim()));
  }
  GruStep s;
  s.gates.input = concat(h_prev, x);
  s.gates.update = activate(affine(p.w_update, s.gates.input, p.b_update), Activation::sigmoid);
  s.gates.reset = activate(affine(p.w_reset, s.gates.input, p.b_reset), Activation::sigmoid);
  s.gates.gated_input = concat(hadamard(s.gates.reset, h_prev), x);
  s.gates.candidate =
      activate(affine(p.w_candidate, s.gates.gated_input, p.b_candidate), Activation::tanh);
  s.hidden = Vector(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double z = s.gates.update[j];
    s.hidden[j] = (1.0 - z) * h_prev[j] + z * s.gates.candidate[j];
  }
  return s;
}

// Backpropagates dL/dh through one cell. Parameter gradients accumulate
// into `grad`; returns (dL/dh_prev, dL/dx).
inline std::pair<Vector, Vector> gru_cell_backward(const GruParams& p, const GruGates& g,
                                                   const Vector& dh, GruParams& grad) {
  const std::size_t k = p.hidden();
  const std::size_t in = p.input_dim();
  Vector d_update_pre(k), d_candidate_pre(k), dh_prev(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double z = g.update[j];
    const double hc = g.candidate[j];
    const double hp = g.input[j];
    d_update_pre[j] = dh[j] * (hc - hp) * z * (1.0 - z);
    d_candidate_pre[j] = dh[j] * z * (1.0 - hc * hc);
    dh_prev[j] = dh[j] * (1.0 - z);
  }
  add_outer(grad.w_candidate, d_candidate_pre, g.gated_input);
  add_into(grad.b_candidate, d_candidate_pre);
  Vector d_gated(k + in);
  add_transpose_times(d_gated, p.w_candidate, d_candidate_pre);

  Vector d_reset_pre(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double r = g.reset[j];
    // d_gated[j] is dL/d(r_j h_prev_j)
    d_reset_pre[j] = d_gated[j] * g.input[j] * r * (1.0 - r);
    dh_prev[j] += d_gated[j] * r;
  }
  add_outer(grad.w_update, d_update_pre, g.input);
  add_into(grad.b_update, d_update_pre);
  add_outer(grad.w_reset, d_reset_pre, g.input);
  add_into(grad.b_reset, d_reset_pre);

  Vector d_input(k + in);
  add_transpose_times(d_input, p.w_update, d_update_pre);
  add_transpose_times(d_input, p.w_reset, d_reset_pre);

  Vector dx(in);
  for (std::size_t j = 0; j < k; ++j) dh_prev[j] += d_input[j];
  for (std::size_t c = 0; c < in; ++c) dx[c] = d_input[k + c] + d_gated[k + c];
  return {std::move(dh_prev), std::move(dx)};
}

// Runs a GRU over xs with zero initial state. reverse = true scans from the
// last element to the first. Result index t always refers to input t.
inline std::vector<GruStep> gru_scan(const GruParams& p, const std::vector<Vector>& xs,
                                     bool reverse) {
  std::vector<GruStep> steps(xs.size());
  Vector h(p.hidden());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const std::size_t t = reverse ? xs.size() - 1 - s : s;
    steps[t] = gru_cell_forward(p, h, xs[t]);
    h = steps[t].hidden;
  }
  return steps;
}

// Output t is [h_t^f ; h_t^b].
inline std::vector<Vector> bgru_forward(const GruParams& fwd, const GruParams& bwd,
                                        const std::vector<Vector>& xs) {
  if (xs.empty()) throw DimensionError("bgru_forward: empty sequence");
  if (fwd.hidden() != bwd.hidden() || fwd.input_dim() != bwd.input_dim()) {
    throw DimensionError("bgru_forward: direction shapes differ");
  }
  auto f = gru_scan(fwd, xs, false);
  auto b = gru_scan(bwd, xs, true);
  std::vector<Vector> out;
  out.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) out.push_back(concat(f[t].hidden, b[t].hidden));
  return out;
}

// ---------------------------------------------------------------------------
// LSTM

struct LstmGates {
  Vector input;  // [h_prev, x]
  Vector forget, input_gate, output, candidate;
  Vector cell_prev;
};

struct LstmStep {
  Vector hidden;
  Vector cell;
  LstmGates gates;
};

inline LstmStep lstm_step(const LstmParams& p, const Vector& h_prev, const Vector& c_prev,
                          const Vector& x) {
  const std::size_t m = p.hidden();
  if (h_prev.size() != m || c_prev.size() != m || x.size() != p.input_dim()) {
    throw DimensionError("lstm_step: expected h, C of " + std::to_string(m) + " and x of " +
                         std::to_string(p.input_dim()));
  }
  LstmStep s;
  s.gates.input = concat(h_prev, x);
  s.gates.forget = activate(affine(p.w_forget, s.gates.input, p.b_forget), Activation::sigmoid);
  s.gates.input_gate = activate(affine(p.w_input, s.gates.input, p.b_input), Activation::sigmoid);
  s.gates.output = activate(affine(p.w_output, s.gates.input, p.b_output), Activation::sigmoid);
  s.gates.candidate = activate(affine(p.w_cell, s.gates.input, p.b_cell), Activation::tanh);
  s.gates.cell_prev = c_prev;
  s.cell = Vector(m);
  s.hidden = Vector(m);
  for (std::size_t j = 0; j < m; ++j) {
    s.cell[j] = s.gates.forget[j] * c_prev[j] + s.gates.input_gate[j] * s.gates.candidate[j];
    s.hidden[j] = s.gates.output[j] * std::tanh(s.cell[j]);
  }
  return s;
}

struct LstmBackward {
  Vector dh_prev;
  Vector dc_prev;
  Vector dx;
};

// dh, dc are the gradients reaching h_t and C_t from above and from t + 1.
inline LstmBackward lstm_step_backward(const LstmParams& p, const LstmStep& s, const Vector& dh,
                                       const Vector& dc, LstmParams& grad) {
  const std::size_t m = p.hidden();
  const std::size_t in = p.input_dim();
  const auto& g = s.gates;
  Vector df(m), di(m), d_o(m), dg(m);
  LstmBackward out{Vector(m), Vector(m), Vector(in)};
  for (std::size_t j = 0; j < m; ++j) {
    const double tc = std::tanh(s.cell[j]);
    const double dcell = dc[j] + dh[j] * g.output[j] * (1.0 - tc * tc);
    const double f = g.forget[j], i = g.input_gate[j], o = g.output[j], c = g.candidate[j];
    d_o[j] = dh[j] * tc * o * (1.0 - o);
    df[j] = dcell * g.cell_prev[j] * f * (1.0 - f);
    di[j] = dcell * c * i * (1.0 - i);
    dg[j] = dcell * i * (1.0 - c * c);
    out.dc_prev[j] = dcell * f;
  }
  add_outer(grad.w_forget, df, g.input);
  add_outer(grad.w_input, di, g.input);
  add_outer(grad.w_output, d_o, g.input);
  add_outer(grad.w_cell, dg, g.input);
  add_into(grad.b_forget, df);
  add_into(grad.b_input, di);
  add_into(grad.b_output, d_o);
  add_into(grad.b_cell, dg);
  Vector d_input(m + in);
  add_transpose_times(d_input, p.w_forget, df);
  add_transpose_times(d_input, p.w_input, di);
  add_transpose_times(d_input, p.w_output, d_o);
  add_transpose_times(d_input, p.w_cell, dg);
  for (std::size_t j = 0; j < m; ++j) out.dh_prev[j] = d_input[j];
  for (std::size_t c = 0; c < in; ++c) out.dx[c] = d_input[m + c];
  return out;
}

inline std::vector<LstmStep> lstm_scan(const LstmParams& p, const std::vector<Vector>& xs) {
  std::vector<LstmStep> steps;
  steps.reserve(xs.size());
  Vector h(p.hidden()), c(p.hidden());
  for (const auto& x : xs) {
    steps.push_back(lstm_step(p, h, c, x));
    h = steps.back().hidden;
    c = steps.back().cell;
  }
  return steps;
}

// Final hidden state h_n from zero initial state.
inline Vector lstm_forward_sequence(const LstmParams& p, const std::vector<Vector>& xs) {
  if (xs.empty()) throw DimensionError("lstm_forward_sequence: empty sequence");
  return lstm_scan(p, xs).back().hidden;
}

// ---------------------------------------------------------------------------
// Head, threshold, dropout

inline double dense_sigmoid(const DenseParams& p, const Vector& h) {
  if (p.weights.rows() != 1 || p.bias.size() != 1) {
    throw DimensionError("dense_sigmoid: head must have exactly one output");
  }
  return sigmoid(affine(p.weights, h, p.bias)[0]);
}

inline int classify(double yhat) noexcept { return yhat >= 0.5 ? 1 : 0; }

// Inverted-dropout mask: each entry 0 with probability `rate`, otherwise
// 1 / (1 - rate).
inline Vector dropout_mask(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout_rate", "must lie in [0, 1)");
  Vector mask(n, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i) mask[i] = rng.uniform01() < rate ? 0.0 : keep;
  return mask;
}

inline Vector dropout_mask(std::size_t n, double rate, std::uint64_t seed) {
  Rng rng(seed);
  return dropout_mask(n, rate, rng);
}

inline Vector dropout_apply(const Vector& v, double rate, const Vector& mask, Mode mode) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout_rate", "must lie in [0, 1)");
  if (mode == Mode::infer || rate == 0.0) return v;
  return hadamard(v, mask);
}

// ---------------------------------------------------------------------------
// Whole model

struct ForwardCache {
  StackVariant stack = StackVariant::hbgru_lstm;
  ModelDims dims;
  std::uint64_t revision = 0;
  Mode mode = Mode::infer;
  double dropout_rate = 0.0;

  std::vector<std::size_t> tokens;      // non-PAD prefix that was run
  std::vector<Vector> embedded;          // x_t
  std::vector<GruStep> gru_fwd;          // by t
  std::vector<GruStep> gru_bwd;          // by t
  std::vector<Vector> recurrent_mask;    // dropout on the LSTM input, by t
  std::vector<Vector> lstm_inputs;       // after dropout
  std::vector<LstmStep> lstm;
  Vector head_mask;
  Vector head_input;  // final LSTM state after dropout

  double yhat = 0.5;
  bool degenerate = false;  // all-PAD input, yhat fixed at 0.5

  std::size_t length() const noexcept { return tokens.size(); }
};

inline ForwardCache model_forward(const ModelParams& params, const TokenSequence& seq, Mode mode,
                                  double dropout_rate, std::uint64_t seed) {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate", "must lie in [0, 1)");
  }
  ForwardCache cache;
  cache.stack = params.stack;
  cache.dims = params.dims();
  cache.revision = params.revision;
  cache.mode = mode;
  cache.dropout_rate = dropout_rate;

  cache.embedded = embed_lookup(seq, params.embedding);
  cache.tokens.assign(seq.indices.begin(),
                      seq.indices.begin() + static_cast<std::ptrdiff_t>(seq.true_length));
  const std::size_t n = cache.embedded.size();
  if (n == 0) {
    cache.degenerate = true;
    cache.yhat = 0.5;
    return cache;
  }

  const bool drop = mode == Mode::train && dropout_rate > 0.0;
  Rng rng(seed);

  if (params.stack == StackVariant::lstm_only) {
    cache.lstm_inputs = cache.embedded;
  } else {
    cache.gru_fwd = gru_scan(params.gru_fwd, cache.embedded, false);
    if (params.stack == StackVariant::hbgru_lstm) {
      cache.gru_bwd = gru_scan(params.gru_bwd, cache.embedded, true);
    }
    const std::size_t width = lstm_input_dim(params.stack, cache.dims);
    cache.lstm_inputs.reserve(n);
    if (drop) cache.recurrent_mask.reserve(n);
    for (std::size_t t = 0; t < n; ++t) {
      Vector out = params.stack == StackVariant::hbgru_lstm
                       ? concat(cache.gru_fwd[t].hidden, cache.gru_bwd[t].hidden)
                       : cache.gru_fwd[t].hidden;
      if (drop) {
        cache.recurrent_mask.push_back(dropout_mask(width, dropout_rate, rng));
        out = hadamard(out, cache.recurrent_mask.back());
      }
      cache.lstm_inputs.push_back(std::move(out));
    }
  }

  cache.lstm = lstm_scan(params.lstm, cache.lstm_inputs);
  cache.head_input = cache.lstm.back().hidden;
  if (drop) {
    cache.head_mask = dropout_mask(params.lstm.hidden(), dropout_rate, rng);
    cache.head_input = hadamard(cache.head_input, cache.head_mask);
  }
  cache.yhat = dense_sigmoid(params.dense, cache.head_input);
  return cache;
}

// Inference-mode probability.
inline double predict_probability(const ModelParams& params, const TokenSequence& seq) {
  return model_forward(params, seq, Mode::infer, 0.0, 0).yhat;
}

// Adds dL/dθ for the cached example into `grad` (which must have the
// shapes of `params`). dL_dyhat is the loss gradient w.r.t. the output
// probability.
inline void model_backward_into(const ModelParams& params, const ForwardCache& cache,
                                double dL_dyhat, Gradients& grad) {
  if (cache.stack != params.stack || !(cache.dims == params.dims()) ||
      cache.revision != params.revision) {
    throw ModelMismatchError("model_backward: cache was produced by different parameters");
  }
  if (!grad.same_shape(params)) throw DimensionError("model_backward: gradient shape mismatch");
  if (cache.degenerate) return;

  const std::size_t n = cache.length();
  const double yhat = cache.yhat;
  const double d_logit = dL_dyhat * yhat * (1.0 - yhat);
  const std::size_t m = params.lstm.hidden();

  Vector d_head(m);
  for (std::size_t j = 0; j < m; ++j) {
    grad.dense.weights(0, j) += d_logit * cache.head_input[j];
    d_head[j] = d_logit * params.dense.weights(0, j);
  }
  grad.dense.bias[0] += d_logit;
  if (!cache.head_mask.empty()) d_head = hadamard(d_head, cache.head_mask);

  // LSTM, t = n..1
  std::vector<Vector> d_lstm_in(n);
  Vector dh = d_head, dc(m);
  for (std::size_t s = n; s-- > 0;) {
    auto b = lstm_step_backward(params.lstm, cache.lstm[s], dh, dc, grad.lstm);
    d_lstm_in[s] = std::move(b.dx);
    dh = std::move(b.dh_prev);
    dc = std::move(b.dc_prev);
  }

  const std::size_t d = params.embedding.dim();
  std::vector<Vector> dx(n, Vector(d));
  if (params.stack == StackVariant::lstm_only) {
    for (std::size_t t = 0; t < n; ++t) dx[t] = std::move(d_lstm_in[t]);
  } else {
    const std::size_t k = params.gru_fwd.hidden();
    if (!cache.recurrent_mask.empty()) {
      for (std::size_t t = 0; t < n; ++t) d_lstm_in[t] = hadamard(d_lstm_in[t], cache.recurrent_mask[t]);
    }
    // forward direction: state flows t -> t+1, so gradients flow n..1
    Vector carry(k);
    for (std::size_t s = n; s-- > 0;) {
      Vector dh_t = slice(d_lstm_in[s], 0, k);
      add_into(dh_t, carry);
      auto [dprev, dxt] = gru_cell_backward(params.gru_fwd, cache.gru_fwd[s].gates, dh_t, grad.gru_fwd);
      carry = std::move(dprev);
      add_into(dx[s], dxt);
    }
    if (params.stack == StackVariant::hbgru_lstm) {
      // backward direction: state flows t+1 -> t, so gradients flow 1..n
      carry = Vector(k);
      for (std::size_t s = 0; s < n; ++s) {
        Vector dh_t = slice(d_lstm_in[s], k, k);
        add_into(dh_t, carry);
        auto [dprev, dxt] = gru_cell_backward(params.gru_bwd, cache.gru_bwd[s].gates, dh_t, grad.gru_bwd);
        carry = std::move(dprev);
        add_into(dx[s], dxt);
      }
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t idx = cache.tokens[t];
    if (idx == Vocabulary::kPad) continue;
    auto row = grad.embedding.table.row(idx);
    for (std::size_t c = 0; c < d; ++c) row[c] += dx[t][c];
  }
}

inline Gradients model_backward(const ModelParams& params, const ForwardCache& cache,
                                double dL_dyhat) {
  Gradients grad = params.zeros_like();
  model_backward_into(params, cache, dL_dyhat, grad);
  return grad;
}

}  // namespace sentiment
