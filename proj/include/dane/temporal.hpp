#pragma once

// Next-timestamp embedding prediction from a lookback window.
//
// For each layer l, with history x_{t-1}, ..., x_{t-K'} and current x_t:
//   beta_k  = sigmoid(x_{t-k}^T W_beta x_{t-1})
//   alpha   = softmax(beta)                      (normalized over k = 1..K')
//   xtilde  = tanh(sum_k alpha_k x_{t-k})
//   g       = sigmoid(W_g [xtilde ; x_t] + b_g)
//   xhat^l  = x_t + g ⊙ (x_t - xtilde)
// and the layers are merged as xhat = (1/L) sum_l (W_y xhat^l + b_y).
//
// The attention weights use the normalized softmax exp(beta_k) / sum_j exp(beta_j).
// The attention query is x_{t-1}, not x_t.

#include <span>
#include <vector>

#include "dane/diffnum.hpp"
#include "dane/graph.hpp"
#include "dane/spatial.hpp"

namespace dane {

struct TemporalParams {
  std::vector<diff::Parameter> attention;     // W_beta[l], d x d; empty when disabled
  std::vector<diff::Parameter> gate_weights;  // W_g[l], d x 2d
  std::vector<diff::Parameter> gate_bias;     // b_g[l], 1 x d
  diff::Parameter merge_weight;               // W_y, d x d
  diff::Parameter merge_bias;                 // b_y, 1 x d

  static TemporalParams init(std::size_t dim, std::size_t layers, bool use_temporal, Rng& rng);

  bool use_temporal() const { return !attention.empty(); }
  std::size_t dim() const { return merge_weight.value.rows(); }
  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
};

struct TemporalVars {
  std::vector<diff::Var> attention;
  std::vector<diff::Var> gate_weights;
  std::vector<diff::Var> gate_bias;
  diff::Var merge_weight;
  diff::Var merge_bias;
};

TemporalVars bind(diff::Tape& tape, TemporalParams& params);
TemporalVars bind_constant(diff::Tape& tape, const TemporalParams& params);

struct HistorySummary {
  diff::Var summary;  // rows x d
  diff::Var alpha;    // rows x K'
};

// `history` is ordered most recent first: x_{t-1}, x_{t-2}, ..., x_{t-K'}.
HistorySummary summarize_history(std::span<const diff::Var> history, diff::Var attention);

diff::Var predict_layer(diff::Var current, diff::Var summary, diff::Var gate_weight,
                        diff::Var gate_bias);

diff::Var merge_layers(std::span<const diff::Var> per_layer, diff::Var merge_weight,
                       diff::Var merge_bias);

// `window[i][l]` is the layer-(l+1) embedding of the i-th timestamp in the
// window, oldest first; the last entry is the current timestamp t. With
// temporal modeling disabled only window.back() is used.
diff::Var predict_next(const std::vector<std::vector<diff::Var>>& window,
                       const TemporalVars& params, bool use_temporal);

// Plain-value versions.
struct HistorySummaryValue {
  Tensor summary;
  Tensor alpha;
};

HistorySummaryValue summarize_history(const std::vector<Tensor>& history,
                                      const Tensor& attention);
Tensor predict_layer(const Tensor& current, const Tensor& summary, const Tensor& gate_weight,
                     const Tensor& gate_bias);
// Prediction for last_timestamp() + 1 for every node.
Tensor predict_next(const EmbeddingHistory& history, const TemporalParams& params);

}  // namespace dane
