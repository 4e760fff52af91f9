#include "dane/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "dane/error.hpp"

namespace dane {

using diff::Parameter;
using diff::Tape;
using diff::Var;

Var ns_loss(Var predictions, std::span<const RowPair> positives,
            std::span<const std::uint32_t> negatives, std::size_t per_positive) {
  if (positives.empty()) throw Error("ns_loss: empty batch");
  if (negatives.size() != positives.size() * per_positive) {
    throw Error("ns_loss: expected " + std::to_string(positives.size() * per_positive) +
                " negatives, got " + std::to_string(negatives.size()));
  }
  std::vector<std::uint32_t> us, vs;
  for (const RowPair& p : positives) {
    us.push_back(p.u);
    vs.push_back(p.v);
  }
  const Var ctx = diff::gather_rows(predictions, vs);
  Var total = diff::sum(diff::log_sigmoid(diff::dot(diff::gather_rows(predictions, us), ctx)));
  if (per_positive > 0) {
    std::vector<std::uint32_t> ctx_rep;
    ctx_rep.reserve(negatives.size());
    for (const RowPair& p : positives) ctx_rep.insert(ctx_rep.end(), per_positive, p.v);
    const Var noise_dots = diff::dot(diff::gather_rows(predictions, negatives),
                                     diff::gather_rows(predictions, ctx_rep));
    total = diff::add(total, diff::sum(diff::log_sigmoid(diff::scale(noise_dots, -1.0))));
  }
  return diff::scale(total, -1.0 / static_cast<double>(positives.size()));
}

double ns_loss(const Tensor& pred, std::span<const Edge> positives,
               std::span<const NodeId> negatives, std::size_t per_positive) {
  Tape tape;
  std::vector<RowPair> rows;
  for (const Edge& e : positives) rows.push_back({e.u, e.v});
  return ns_loss(tape.constant(pred), rows, negatives, per_positive).value()[0];
}

double softmax_loss_oracle(const Tensor& pred, std::span<const Edge> edges, bool directed) {
  if (edges.empty()) throw Error("softmax_loss_oracle: no edges");
  // Ordered (center, context) pairs; the denominator for a center runs over
  // all of its contexts.
  std::vector<Edge> oriented;
  for (const Edge& e : edges) {
    if (e.u >= pred.rows() || e.v >= pred.rows()) {
      throw Error("softmax_loss_oracle: edge endpoint outside prediction rows");
    }
    oriented.push_back(e);
    if (!directed) oriented.push_back({e.v, e.u});
  }
  std::sort(oriented.begin(), oriented.end());
  oriented.erase(std::unique(oriented.begin(), oriented.end()), oriented.end());

  auto dot = [&](NodeId a, NodeId b) {
    double s = 0.0;
    for (std::size_t j = 0; j < pred.cols(); ++j) s += pred(a, j) * pred(b, j);
    return s;
  };
  double loss = 0.0;
  for (std::size_t begin = 0; begin < oriented.size();) {
    std::size_t end = begin;
    while (end < oriented.size() && oriented[end].u == oriented[begin].u) ++end;
    const NodeId center = oriented[begin].u;
    std::vector<double> scores;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = begin; i < end; ++i) {
      scores.push_back(dot(oriented[i].v, center));
      peak = std::max(peak, scores.back());
    }
    double z = 0.0;
    for (double s : scores) z += std::exp(s - peak);
    const double log_z = peak + std::log(z);
    for (double s : scores) loss -= s - log_z;
    begin = end;
  }
  return loss;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) {
  if (state.first_moment.empty()) {
    for (const Parameter* p : params) {
      state.first_moment.emplace_back(p->value.rows(), p->value.cols());
      state.second_moment.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                     " parameters, got " + std::to_string(params.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    if (!m.same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw ShapeError("adam_step: shape mismatch for " + p.name);
    }
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
      p.value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + state.epsilon);
    }
  }
}

std::vector<int> training_window_ends(int num_snapshots, bool temporal) {
  std::vector<int> ends;
  // Window ends at t predict t+1; t+1 <= n-1 keeps the final snapshot out.
  for (int t = 2; t + 1 <= num_snapshots - 1; ++t) ends.push_back(t);
  if (ends.empty() && !temporal && num_snapshots >= 3) ends.push_back(1);
  return ends;
}

std::vector<Edge> oriented_positives(std::span<const Edge> edges, bool directed) {
  std::vector<Edge> out;
  out.reserve(edges.size() * (directed ? 1 : 2));
  for (const Edge& e : edges) {
    out.push_back(e);
    if (!directed) out.push_back({e.v, e.u});
  }
  return out;
}

namespace {

std::vector<NodeId> sample_negatives(const NoiseDistribution& noise, std::size_t count, Rng& rng) {
  std::vector<NodeId> out(count);
  for (NodeId& z : out) z = noise.sample(rng);
  return out;
}

// Forward + loss for one batch on a fresh tape; leaves gradients in the
// model's parameters when `trainable`.
double run_batch(const DynamicGraph& g, std::span<const Adjacency> nbrs, Model& model, int t,
                 std::span<const Edge> positives, std::span<const NodeId> negatives,
                 bool trainable) {
  std::vector<NodeId> nodes;
  nodes.reserve(2 * positives.size() + negatives.size());
  for (const Edge& e : positives) {
    nodes.push_back(e.u);
    nodes.push_back(e.v);
  }
  nodes.insert(nodes.end(), negatives.begin(), negatives.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto row_of = [&](NodeId v) {
    return static_cast<std::uint32_t>(std::lower_bound(nodes.begin(), nodes.end(), v) -
                                      nodes.begin());
  };
  std::vector<RowPair> rows;
  rows.reserve(positives.size());
  for (const Edge& e : positives) rows.push_back({row_of(e.u), row_of(e.v)});
  std::vector<std::uint32_t> neg_rows;
  neg_rows.reserve(negatives.size());
  for (NodeId z : negatives) neg_rows.push_back(row_of(z));

  Tape tape;
  const Var pred = forward_prediction(tape, g, nbrs, model, t, nodes, trainable);
  const Var loss = ns_loss(pred, rows, neg_rows, model.config.negatives);
  const double value = loss.value()[0];
  if (trainable) tape.backward(loss);
  return value;
}

}  // namespace

Model train(const DynamicGraph& full, const TrainConfig& config, TrainReport* report) {
  config.validate();
  const int n = full.num_snapshots();
  if (n < 3) throw Error("train: need at least 3 snapshots, got " + std::to_string(n));
  // The final snapshot is held out: training sees only G_1..G_{n-1}.
  const DynamicGraph g = full.prefix(n - 1);
  const bool temporal = !config.no_temporal;
  const std::vector<int> ends = training_window_ends(n, temporal);

  struct Transition {
    int window_end;
    std::vector<Edge> positives;
    NoiseDistribution noise;
  };
  std::vector<Transition> transitions;
  std::size_t total_positives = 0;
  for (int t : ends) {
    const std::vector<Edge> edges = config.edge_scope == EdgeScope::all
                                        ? std::vector<Edge>(g.snapshot(t + 1).edges().begin(),
                                                            g.snapshot(t + 1).edges().end())
                                        : new_edges(g, t + 1);
    if (edges.empty()) continue;
    transitions.push_back({t, oriented_positives(edges, g.directed()), noise_distribution(g, t)});
    total_positives += transitions.back().positives.size();
  }
  if (transitions.empty()) throw Error("train: no trainable edges");

  Model model = Model::init(g.num_nodes(), g.attr_dim(), config);
  const std::vector<Adjacency> nbrs = model_neighborhoods(g, config);
  const std::vector<Parameter*> params = model.parameters();
  AdamState adam;
  Rng rng(derive_seed(config.seed, 2));
  TrainReport local;
  for (const Transition& tr : transitions) {
    local.max_edge_timestamp_read = std::max(local.max_edge_timestamp_read, tr.window_end + 1);
  }

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    double weighted = 0.0;
    for (Transition& tr : transitions) {
      std::shuffle(tr.positives.begin(), tr.positives.end(), rng);
      for (std::size_t b = 0; b < tr.positives.size(); b += config.batch) {
        const std::span<const Edge> batch(
            tr.positives.data() + b, std::min(config.batch, tr.positives.size() - b));
        const std::vector<NodeId> negatives =
            sample_negatives(tr.noise, batch.size() * config.negatives, rng);
        model.zero_grad();
        const double loss = run_batch(g, nbrs, model, tr.window_end, batch, negatives, true);
        adam_step(params, adam, config.lr);
        weighted += loss * static_cast<double>(batch.size());
        ++local.steps;
      }
    }
    const double mean = weighted / static_cast<double>(total_positives);
    model.epoch_losses.push_back(mean);
    local.epoch_losses.push_back(mean);
    local.epoch_wall_ms.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  model.zero_grad();
  if (report != nullptr) *report = std::move(local);
  return model;
}

FineTuneResult fine_tune(const Model& model, const DynamicGraph& g, std::span<const Edge> revealed,
                         std::size_t steps, std::uint64_t seed) {
  FineTuneResult result{model, false, {}, {}};
  if (revealed.empty()) {
    result.skipped_empty = true;
    return result;
  }
  const int n = g.num_snapshots();
  if (n < 2) throw Error("fine_tune: need at least 2 snapshots");
  if (steps == 0) return result;
  const int t = n - 1;
  // Only G_1..G_{n-1} feed the forward pass; snapshot n contributes nothing
  // beyond the revealed edges.
  const DynamicGraph history = g.prefix(n - 1);
  Model& m = result.model;
  const std::vector<Adjacency> nbrs = model_neighborhoods(history, m.config);
  const NoiseDistribution noise = noise_distribution(history, t);
  const std::vector<Edge> positives = oriented_positives(revealed, g.directed());
  const std::vector<Parameter*> params = m.parameters();
  AdamState adam;
  Rng rng(seed);
  for (std::size_t step = 0; step < steps; ++step) {
    const std::vector<NodeId> negatives =
        sample_negatives(noise, positives.size() * m.config.negatives, rng);
    if (step == 0) result.first_negatives = negatives;
    m.zero_grad();
    result.step_losses.push_back(run_batch(history, nbrs, m, t, positives, negatives, true));
    adam_step(params, adam, m.config.fine_tune_lr);
  }
  m.zero_grad();
  return result;
}

double batch_loss(const DynamicGraph& g, const Model& model, int t, std::span<const Edge> positives,
                  std::span<const NodeId> negatives) {
  const DynamicGraph history = g.prefix(t);
  const std::vector<Adjacency> nbrs = model_neighborhoods(history, model.config);
  Model copy = model;
  return run_batch(history, nbrs, copy, t, positives, negatives, false);
}

}  // namespace dane
