#pragma once

// Activeness-aware neighborhood embedding of a single snapshot.
//
// Layer 0 projects attributes: x0_v = W_in a_v, and the activeness seed is
// p0_v = P[v]. For l = 0..L-1:
//   xbar_v = mean over u in N(v) of p_u ⊙ x_u      (zero vector if N(v) is empty)
//   x'_v   = tanh(W_x[l] [xbar_v ; x_v])
//   pbar_v = mean over u in N(v) of p_u
//   p'_v   = sigmoid(W_p[l] [pbar_v ; p_v])
// With activeness disabled the message p_u ⊙ x_u becomes x_u.

#include <optional>
#include <vector>

#include "dane/diffnum.hpp"
#include "dane/graph.hpp"

namespace dane {

struct SpatialParams {
  diff::Parameter input_proj;                       // d x d_a
  std::vector<diff::Parameter> aggregate;           // W_x[l], d x 2d
  std::vector<diff::Parameter> activeness_weights;  // W_p[l], d x 2d; empty when disabled
  diff::Parameter activeness;                       // P, |V| x d; empty when disabled

  // Glorot-uniform weights, P ~ N(0, 0.1).
  static SpatialParams init(std::size_t num_nodes, std::size_t attr_dim, std::size_t dim,
                            std::size_t layers, bool use_activeness, Rng& rng);

  std::size_t layers() const { return aggregate.size(); }
  std::size_t dim() const { return input_proj.value.rows(); }
  bool use_activeness() const { return !activeness_weights.empty(); }
  std::vector<diff::Parameter*> parameters();
  std::vector<const diff::Parameter*> parameters() const;
};

// Parameters placed on a tape, either as gradient-tracked leaves or as
// constants.
struct SpatialVars {
  diff::Var input_proj;
  std::vector<diff::Var> aggregate;
  std::vector<diff::Var> activeness_weights;
  std::optional<diff::Var> activeness;
};

SpatialVars bind(diff::Tape& tape, SpatialParams& params);
SpatialVars bind_constant(diff::Tape& tape, const SpatialParams& params);

struct LayerVars {
  std::vector<diff::Var> x;  // layers 0..L
  std::vector<diff::Var> p;  // layers 0..L-1 (0..L with full_activeness); empty when disabled
};

struct SpatialOptions {
  // Also compute p^L, which no x layer consumes.
  bool full_activeness = false;
  // Replace every activeness vector with ones while keeping the gated
  // message path; used to check the w/o-P ablation.
  bool unit_gates = false;
};

// p^0..p^layers.
std::vector<diff::Var> propagate_activeness(const SpatialVars& params,
                                            diff::Neighborhood neighbors, std::size_t layers);

LayerVars embed_snapshot(diff::Tape& tape, const SpatialVars& params,
                         diff::Neighborhood neighbors, diff::Var attributes,
                         const SpatialOptions& options = {});

// Plain-value results for one snapshot.
struct LayerEmbeddings {
  std::vector<Tensor> x;  // layers 0..L, |V| x d each
  std::vector<Tensor> p;  // layers 0..L; empty when activeness is disabled
};

std::vector<Tensor> propagate_activeness(const Snapshot& snapshot, const SpatialParams& params);
LayerEmbeddings embed_snapshot(const Snapshot& snapshot, const SpatialParams& params,
                               const SpatialOptions& options = {});
// Same, with explicit (possibly capped) neighbor lists.
LayerEmbeddings embed_snapshot(const Adjacency& neighbors, const Tensor& attributes,
                               const SpatialParams& params, const SpatialOptions& options = {});

// Layer embeddings for the contiguous timestamps first..last.
struct EmbeddingHistory {
  int first_timestamp = 1;
  std::vector<LayerEmbeddings> steps;

  int last_timestamp() const { return first_timestamp + static_cast<int>(steps.size()) - 1; }
  const LayerEmbeddings& at(int t) const;
};

// Embeds timestamps max(1, t - K) .. t.
EmbeddingHistory embed_window(const DynamicGraph& g, const SpatialParams& params, int t,
                              std::size_t lookback);

}  // namespace dane
