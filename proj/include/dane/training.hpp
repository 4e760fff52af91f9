#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dane/diffnum.hpp"
#include "dane/graph.hpp"
#include "dane/model.hpp"

namespace dane {

// Row-index pair into a prediction matrix.
struct RowPair {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
};

// Negative-sampling loss averaged over the batch:
//   mean_i [ -log σ(x_u·x_v) - sum_r log σ(-x_{z_r}·x_v) ]
// `negatives` holds R row indices per positive, flattened positive-major.
diff::Var ns_loss(diff::Var predictions, std::span<const RowPair> positives,
                  std::span<const std::uint32_t> negatives, std::size_t per_positive);

// Same objective on plain values, with node ids indexing rows of `pred`.
double ns_loss(const Tensor& pred, std::span<const Edge> positives,
               std::span<const NodeId> negatives, std::size_t per_positive);

// Exact softmax objective over E_{t+1}:
//   -sum_{(v,u)} log( exp(x_u·x_v) / sum_{(z,v) in E} exp(x_z·x_v) )
// For undirected graphs every edge is scored in both orientations.
double softmax_loss_oracle(const Tensor& pred, std::span<const Edge> edges, bool directed = false);

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update from each parameter's accumulated gradient.
void adam_step(std::span<diff::Parameter* const> params, AdamState& state, double lr);

struct TrainReport {
  std::vector<double> epoch_losses;
  std::vector<double> epoch_wall_ms;
  // Largest snapshot index whose edges the loop read; never the final one.
  int max_edge_timestamp_read = 0;
  std::size_t steps = 0;
};

// Transitions used for training: windows ending at t for the returned t,
// predicting t+1. The last snapshot is never a target.
std::vector<int> training_window_ends(int num_snapshots, bool temporal);

Model train(const DynamicGraph& g, const TrainConfig& config, TrainReport* report = nullptr);

struct FineTuneResult {
  Model model;
  bool skipped_empty = false;
  std::vector<double> step_losses;      // loss before each update
  std::vector<NodeId> first_negatives;  // noise nodes drawn for the first step
};

// Training positives: each undirected edge in both orientations.
std::vector<Edge> oriented_positives(std::span<const Edge> edges, bool directed);

// Continues training on the final transition (window ending at n-1,
// predicting n) with `revealed` edges as the only positives.
FineTuneResult fine_tune(const Model& model, const DynamicGraph& g,
                         std::span<const Edge> revealed, std::size_t steps, std::uint64_t seed);

// Loss of already-oriented `positives` at t+1, predicted from the window
// ending at t, with fixed negatives (R per positive). No parameter changes.
double batch_loss(const DynamicGraph& g, const Model& model, int t,
                  std::span<const Edge> positives, std::span<const NodeId> negatives);

}  // namespace dane
