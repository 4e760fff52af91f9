#include "dane/temporal.hpp"

#include <cmath>

#include "dane/error.hpp"
#include "dane/random.hpp"

namespace dane {

using diff::Parameter;
using diff::Tape;
using diff::Var;

TemporalParams TemporalParams::init(std::size_t dim, std::size_t layers, bool use_temporal,
                                    Rng& rng) {
  TemporalParams p;
  if (use_temporal) {
    for (std::size_t l = 0; l < layers; ++l) {
      const std::string suffix = "." + std::to_string(l);
      p.attention.emplace_back("W_beta" + suffix, glorot_uniform(dim, dim, rng));
      p.gate_weights.emplace_back("W_g" + suffix, glorot_uniform(dim, 2 * dim, rng));
      p.gate_bias.emplace_back("b_g" + suffix, Tensor(1, dim));
    }
  }
  p.merge_weight = Parameter("W_y", glorot_uniform(dim, dim, rng));
  p.merge_bias = Parameter("b_y", Tensor(1, dim));
  return p;
}

std::vector<Parameter*> TemporalParams::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t l = 0; l < attention.size(); ++l) {
    out.push_back(&attention[l]);
    out.push_back(&gate_weights[l]);
    out.push_back(&gate_bias[l]);
  }
  out.push_back(&merge_weight);
  out.push_back(&merge_bias);
  return out;
}

std::vector<const Parameter*> TemporalParams::parameters() const {
  const auto mutable_view = const_cast<TemporalParams*>(this)->parameters();
  return {mutable_view.begin(), mutable_view.end()};
}

TemporalVars bind(Tape& tape, TemporalParams& params) {
  TemporalVars v;
  for (std::size_t l = 0; l < params.attention.size(); ++l) {
    v.attention.push_back(tape.parameter(params.attention[l]));
    v.gate_weights.push_back(tape.parameter(params.gate_weights[l]));
    v.gate_bias.push_back(tape.parameter(params.gate_bias[l]));
  }
  v.merge_weight = tape.parameter(params.merge_weight);
  v.merge_bias = tape.parameter(params.merge_bias);
  return v;
}

TemporalVars bind_constant(Tape& tape, const TemporalParams& params) {
  TemporalVars v;
  for (std::size_t l = 0; l < params.attention.size(); ++l) {
    v.attention.push_back(tape.constant(params.attention[l].value));
    v.gate_weights.push_back(tape.constant(params.gate_weights[l].value));
    v.gate_bias.push_back(tape.constant(params.gate_bias[l].value));
  }
  v.merge_weight = tape.constant(params.merge_weight.value);
  v.merge_bias = tape.constant(params.merge_bias.value);
  return v;
}

HistorySummary summarize_history(std::span<const Var> history, Var attention) {
  if (history.empty()) throw Error("summarize_history: empty history");
  const Var query = diff::matmul_nt(history.front(), attention);  // rows of (W_beta x_{t-1})^T
  Var scores = diff::sigmoid(diff::dot(history.front(), query));
  for (std::size_t k = 1; k < history.size(); ++k) {
    scores = diff::concat(scores, diff::sigmoid(diff::dot(history[k], query)));
  }
  const Var alpha = diff::softmax(scores);
  Var mix = diff::scale_rows(history.front(), diff::column(alpha, 0));
  for (std::size_t k = 1; k < history.size(); ++k) {
    mix = diff::add(mix, diff::scale_rows(history[k], diff::column(alpha, k)));
  }
  return {diff::tanh(mix), alpha};
}

Var predict_layer(Var current, Var summary, Var gate_weight, Var gate_bias) {
  const Var gate = diff::sigmoid(
      diff::add_row(diff::matmul_nt(diff::concat(summary, current), gate_weight), gate_bias));
  return diff::add(current, diff::mul(gate, diff::sub(current, summary)));
}

Var merge_layers(std::span<const Var> per_layer, Var merge_weight, Var merge_bias) {
  if (per_layer.empty()) throw Error("merge_layers: no layers");
  Var total = diff::add_row(diff::matmul_nt(per_layer[0], merge_weight), merge_bias);
  for (std::size_t l = 1; l < per_layer.size(); ++l) {
    total = diff::add(total, diff::add_row(diff::matmul_nt(per_layer[l], merge_weight), merge_bias));
  }
  return diff::scale(total, 1.0 / static_cast<double>(per_layer.size()));
}

Var predict_next(const std::vector<std::vector<Var>>& window, const TemporalVars& params,
                 bool use_temporal) {
  if (window.empty()) throw Error("predict_next: empty window");
  const std::vector<Var>& current = window.back();
  if (!use_temporal) return merge_layers(current, params.merge_weight, params.merge_bias);

  const std::size_t L = current.size();
  if (params.attention.size() != L) {
    throw ShapeError("predict_next: window has " + std::to_string(L) + " layers, parameters have " +
                     std::to_string(params.attention.size()));
  }
  std::vector<Var> predicted;
  for (std::size_t l = 0; l < L; ++l) {
    std::vector<Var> history;
    for (std::size_t i = window.size() - 1; i-- > 0;) history.push_back(window[i][l]);
    const HistorySummary s = summarize_history(history, params.attention[l]);
    predicted.push_back(
        predict_layer(current[l], s.summary, params.gate_weights[l], params.gate_bias[l]));
  }
  return merge_layers(predicted, params.merge_weight, params.merge_bias);
}

HistorySummaryValue summarize_history(const std::vector<Tensor>& history,
                                      const Tensor& attention) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& h : history) vars.push_back(tape.constant(h));
  const HistorySummary s = summarize_history(vars, tape.constant(attention));
  return {s.summary.value(), s.alpha.value()};
}

Tensor predict_layer(const Tensor& current, const Tensor& summary, const Tensor& gate_weight,
                     const Tensor& gate_bias) {
  Tape tape;
  return predict_layer(tape.constant(current), tape.constant(summary),
                       tape.constant(gate_weight), tape.constant(gate_bias))
      .value();
}

Tensor predict_next(const EmbeddingHistory& history, const TemporalParams& params) {
  Tape tape;
  const TemporalVars vars = bind_constant(tape, params);
  std::vector<std::vector<Var>> window;
  for (const LayerEmbeddings& step : history.steps) {
    std::vector<Var> layers;
    for (std::size_t l = 1; l < step.x.size(); ++l) layers.push_back(tape.constant(step.x[l]));
    window.push_back(std::move(layers));
  }
  return predict_next(window, vars, params.use_temporal()).value();
}

}  // namespace dane
