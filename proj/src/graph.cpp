#include "dane/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dane/error.hpp"

namespace dane {

Edge canonical(Edge e, bool directed) {
  if (!directed && e.v < e.u) std::swap(e.u, e.v);
  return e;
}

Adjacency::Adjacency(std::size_t num_nodes, std::span<const Edge> edges, bool directed)
    : offsets_(num_nodes + 1, 0) {
  for (const Edge& e : edges) {
    ++offsets_[e.u + 1];
    if (!directed) ++offsets_[e.v + 1];
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
  indices_.resize(offsets_.back());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges) {
    indices_[cursor[e.u]++] = e.v;
    if (!directed) indices_[cursor[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < num_nodes; ++v) {
    std::sort(indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
              indices_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]));
  }
}

Adjacency Adjacency::capped(std::size_t max_neighbors, Rng& rng) const {
  Adjacency out;
  out.offsets_.assign(offsets_.size(), 0);
  for (std::size_t v = 0; v < num_nodes(); ++v) {
    auto nbrs = neighbors(static_cast<NodeId>(v));
    if (nbrs.size() <= max_neighbors) {
      out.indices_.insert(out.indices_.end(), nbrs.begin(), nbrs.end());
    } else {
      std::vector<NodeId> picked;
      std::sample(nbrs.begin(), nbrs.end(), std::back_inserter(picked), max_neighbors, rng);
      out.indices_.insert(out.indices_.end(), picked.begin(), picked.end());
    }
    out.offsets_[v + 1] = out.indices_.size();
  }
  return out;
}

Snapshot::Snapshot(int timestamp, std::size_t num_nodes, std::vector<Edge> edges,
                   Tensor attributes, bool directed, std::map<NodeId, int> labels)
    : timestamp_(timestamp),
      directed_(directed),
      edges_(std::move(edges)),
      attributes_(std::move(attributes)),
      labels_(std::move(labels)) {
  for (Edge& e : edges_) {
    if (e.u >= num_nodes || e.v >= num_nodes) {
      throw Error("snapshot " + std::to_string(timestamp) + ": edge (" + std::to_string(e.u) +
                  "," + std::to_string(e.v) + ") references a node >= " +
                  std::to_string(num_nodes));
    }
    if (e.u == e.v) {
      throw Error("snapshot " + std::to_string(timestamp) + ": self-loop on node " +
                  std::to_string(e.u));
    }
    e = canonical(e, directed);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  if (attributes_.rows() != num_nodes) {
    throw Error("snapshot " + std::to_string(timestamp) + ": attribute matrix has " +
                std::to_string(attributes_.rows()) + " rows, expected " +
                std::to_string(num_nodes));
  }
  for (const auto& [node, label] : labels_) {
    if (node >= num_nodes) {
      throw Error("snapshot " + std::to_string(timestamp) + ": label for unknown node " +
                  std::to_string(node));
    }
  }
  adjacency_ = Adjacency(num_nodes, edges_, directed);
}

bool Snapshot::has_edge(Edge e) const {
  return std::binary_search(edges_.begin(), edges_.end(), canonical(e, directed_));
}

DynamicGraph::DynamicGraph(std::size_t num_nodes, std::size_t attr_dim, bool directed,
                           std::vector<Snapshot> snapshots)
    : num_nodes_(num_nodes), attr_dim_(attr_dim), directed_(directed),
      snapshots_(std::move(snapshots)) {
  for (std::size_t i = 0; i < snapshots_.size(); ++i) {
    const Snapshot& s = snapshots_[i];
    if (s.timestamp() != static_cast<int>(i) + 1) {
      throw Error("snapshot timestamps must run 1..n; found " + std::to_string(s.timestamp()) +
                  " at position " + std::to_string(i + 1));
    }
    if (s.num_nodes() != num_nodes_ || s.attributes().cols() != attr_dim_) {
      throw Error("snapshot " + std::to_string(s.timestamp()) +
                  " disagrees with the graph's node count or attribute dimension");
    }
    if (s.directed() != directed_) {
      throw Error("snapshot " + std::to_string(s.timestamp()) + " has mismatched directedness");
    }
  }
}

const Snapshot& DynamicGraph::snapshot(int t) const {
  if (t < 1 || t > num_snapshots()) {
    throw Error("timestamp " + std::to_string(t) + " outside 1.." +
                std::to_string(num_snapshots()));
  }
  return snapshots_[static_cast<std::size_t>(t - 1)];
}

DynamicGraph DynamicGraph::prefix(int n) const {
  if (n < 1 || n > num_snapshots()) {
    throw Error("prefix length " + std::to_string(n) + " outside 1.." +
                std::to_string(num_snapshots()));
  }
  return DynamicGraph(num_nodes_, attr_dim_, directed_,
                      std::vector<Snapshot>(snapshots_.begin(), snapshots_.begin() + n));
}

DynamicGraph DynamicGraph::cumulative() const {
  std::vector<Snapshot> out;
  out.reserve(snapshots_.size());
  std::vector<Edge> running;
  for (const Snapshot& s : snapshots_) {
    std::vector<Edge> merged;
    std::set_union(running.begin(), running.end(), s.edges().begin(), s.edges().end(),
                   std::back_inserter(merged));
    running = merged;
    out.emplace_back(s.timestamp(), num_nodes_, std::move(merged), s.attributes(), directed_,
                     s.labels());
  }
  return DynamicGraph(num_nodes_, attr_dim_, directed_, std::move(out));
}

std::vector<Edge> cumulative_edges(const DynamicGraph& g, int t) {
  g.snapshot(t);
  std::set<Edge> all;
  for (int i = 1; i <= t; ++i) {
    const auto edges = g.snapshot(i).edges();
    all.insert(edges.begin(), edges.end());
  }
  return {all.begin(), all.end()};
}

std::vector<Edge> new_edges(const DynamicGraph& g, int t) {
  if (t < 2 || t > g.num_snapshots()) {
    throw Error("new_edges: timestamp " + std::to_string(t) + " outside 2.." +
                std::to_string(g.num_snapshots()));
  }
  const std::vector<Edge> seen = cumulative_edges(g, t - 1);
  const auto current = g.snapshot(t).edges();
  std::vector<Edge> out;
  std::set_difference(current.begin(), current.end(), seen.begin(), seen.end(),
                      std::back_inserter(out));
  return out;
}

NoiseDistribution::NoiseDistribution(std::vector<double> weights)
    : weights_(std::move(weights)), cumulative_(weights_.size()) {
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("noise weights must be finite and >= 0");
  }
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
  if (cumulative_.empty() || cumulative_.back() <= 0.0) {
    throw Error("noise distribution has no mass (graph has no edges)");
  }
}

NodeId NoiseDistribution::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
  const double r = unif(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  // upper_bound never lands on a zero-weight entry; only r == total can
  // fall off the end.
  std::size_t idx = static_cast<std::size_t>(it - cumulative_.begin());
  if (idx == cumulative_.size()) {
    idx = cumulative_.size() - 1;
    while (weights_[idx] == 0.0) --idx;
  }
  return static_cast<NodeId>(idx);
}

NoiseDistribution noise_distribution(const DynamicGraph& g, int t) {
  const std::vector<Edge> edges = cumulative_edges(g, t);
  std::vector<double> degree(g.num_nodes(), 0.0);
  for (const Edge& e : edges) {
    degree[e.u] += 1.0;
    if (!g.directed()) degree[e.v] += 1.0;
  }
  for (double& d : degree) d = std::pow(d, 0.75);
  return NoiseDistribution(std::move(degree));
}

}  // namespace dane
