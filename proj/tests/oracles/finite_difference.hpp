// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
//
// Central finite differences of the per-example BCE loss with respect to
// every parameter, for checking model_backward.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sentiment/layers.hpp"
#include "sentiment/training.hpp"

namespace oracle {

struct GradientExample {
  sentiment::TokenSequence sequence;
  int label = 0;
  double dropout_rate = 0.0;
  std::uint64_t seed = 0;  // dropout stream, identical for every evaluation
};

inline double example_loss(const sentiment::ModelParams& p, const GradientExample& ex) {
  const auto cache = sentiment::model_forward(p, ex.sequence, sentiment::Mode::train,
                                              ex.dropout_rate, ex.seed);
  return sentiment::bce_loss(ex.label, cache.yhat);
}

inline sentiment::Gradients finite_difference_gradient(const sentiment::ModelParams& params,
                                                       const GradientExample& ex,
                                                       double eps = 1e-5) {
  sentiment::ModelParams work = params;
  sentiment::Gradients grad = params.zeros_like();
  auto w = work.tensors();
  auto g = grad.tensors();
  for (std::size_t t = 0; t < w.size(); ++t) {
    for (std::size_t j = 0; j < w[t].values.size(); ++j) {
      const double saved = w[t].values[j];
      w[t].values[j] = saved + eps;
      const double up = example_loss(work, ex);
      w[t].values[j] = saved - eps;
      const double down = example_loss(work, ex);
      w[t].values[j] = saved;
      g[t].values[j] = (up - down) / (2.0 * eps);
    }
  }
  // PAD row is frozen, so its gradient is defined as zero.
  auto pad = grad.embedding.table.row(0);
  std::fill(pad.begin(), pad.end(), 0.0);
  return grad;
}

struct BlockError {
  std::string name;
  double relative = 0.0;        // ‖a − fd‖ / max(‖a‖, ‖fd‖, 1e−8)
  double worst_entry = 0.0;     // max_j |a_j − fd_j| / max(|a_j|, |fd_j|, 1e−8)
  double analytic_norm = 0.0;
};

inline std::vector<BlockError> compare_blocks(const sentiment::Gradients& analytic,
                                              const sentiment::Gradients& numeric) {
  std::vector<BlockError> out;
  const auto a = analytic.tensors();
  const auto n = numeric.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    BlockError e{a[t].name};
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t j = 0; j < a[t].values.size(); ++j) {
      const double x = a[t].values[j], y = n[t].values[j];
      diff2 += (x - y) * (x - y);
      a2 += x * x;
      n2 += y * y;
      e.worst_entry = std::max(e.worst_entry,
                               std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-8}));
    }
    e.analytic_norm = std::sqrt(a2);
    e.relative = std::sqrt(diff2) / std::max({std::sqrt(a2), std::sqrt(n2), 1e-8});
    out.push_back(e);
  }
  return out;
}

}  // namespace oracle
