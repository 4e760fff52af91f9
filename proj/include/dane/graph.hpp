#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "dane/diffnum.hpp"
#include "dane/random.hpp"
#include "dane/tensor.hpp"

namespace dane {

using NodeId = std::uint32_t;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected edges are stored with the smaller id first.
Edge canonical(Edge e, bool directed);

// CSR neighbor lists owned by value.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(std::size_t num_nodes, std::span<const Edge> edges, bool directed);

  std::size_t num_nodes() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::span<const NodeId> neighbors(NodeId v) const {
    return {indices_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  diff::Neighborhood view() const { return {offsets_, indices_}; }

  // Keeps at most `max_neighbors` uniformly chosen neighbors per node.
  Adjacency capped(std::size_t max_neighbors, Rng& rng) const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> indices_;
};

// One attributed graph G_t = (V_t, E_t, A_t). Immutable after construction.
class Snapshot {
 public:
  Snapshot(int timestamp, std::size_t num_nodes, std::vector<Edge> edges, Tensor attributes,
           bool directed, std::map<NodeId, int> labels = {});

  int timestamp() const { return timestamp_; }
  std::size_t num_nodes() const { return adjacency_.num_nodes(); }
  std::span<const Edge> edges() const { return edges_; }
  bool has_edge(Edge e) const;
  const Adjacency& adjacency() const { return adjacency_; }
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_.neighbors(v); }
  const Tensor& attributes() const { return attributes_; }
  const std::map<NodeId, int>& labels() const { return labels_; }
  bool directed() const { return directed_; }

 private:
  int timestamp_;
  bool directed_;
  std::vector<Edge> edges_;  // sorted, canonical, unique
  Adjacency adjacency_;
  Tensor attributes_;
  std::map<NodeId, int> labels_;
};

// Ordered sequence of snapshots G_1..G_n over a fixed global node set.
class DynamicGraph {
 public:
  DynamicGraph(std::size_t num_nodes, std::size_t attr_dim, bool directed,
               std::vector<Snapshot> snapshots);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t attr_dim() const { return attr_dim_; }
  bool directed() const { return directed_; }
  int num_snapshots() const { return static_cast<int>(snapshots_.size()); }
  // 1-based timestamp.
  const Snapshot& snapshot(int t) const;
  std::span<const Snapshot> snapshots() const { return snapshots_; }

  // First `n` snapshots only.
  DynamicGraph prefix(int n) const;
  // Each snapshot replaced by the union of itself and all earlier ones.
  DynamicGraph cumulative() const;

 private:
  std::size_t num_nodes_;
  std::size_t attr_dim_;
  bool directed_;
  std::vector<Snapshot> snapshots_;
};

// E_1 ∪ ... ∪ E_t, sorted and canonical.
std::vector<Edge> cumulative_edges(const DynamicGraph& g, int t);

// Edges of snapshot t that appear in no earlier snapshot. Requires 2 <= t <= n.
std::vector<Edge> new_edges(const DynamicGraph& g, int t);

// Degree-based noise distribution D(v) ∝ deg(v)^{3/4} over the cumulative
// graph up to t. Directed graphs use out-degree.
class NoiseDistribution {
 public:
  explicit NoiseDistribution(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  double probability(NodeId v) const { return weights_[v] / cumulative_.back(); }
  NodeId sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

NoiseDistribution noise_distribution(const DynamicGraph& g, int t);

struct LoadOptions {
  // Union every snapshot with all prior ones (also enabled by meta.json).
  bool cumulative = false;
};

// Dataset directory layout:
//   meta.json     {num_nodes, num_timestamps, attr_dim, directed, cumulative}
//   tNNN.edges    "u v" per line
//   tNNN.attrs    CSV, num_nodes rows x attr_dim values (reuses t-1 if absent)
//   tNNN.labels   optional CSV "node,label"
DynamicGraph load_dynamic_graph(const std::filesystem::path& dir, LoadOptions options = {});
void save_dynamic_graph(const DynamicGraph& g, const std::filesystem::path& dir);

std::string snapshot_file_stem(int t);

}  // namespace dane
