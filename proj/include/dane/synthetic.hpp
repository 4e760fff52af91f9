#pragma once

#include <cstdint>
#include <vector>

#include "dane/graph.hpp"

namespace dane {

// Planted-community dynamic graph generator.
//
// Snapshots are cumulative: each one holds every earlier edge plus the edges
// formed at that timestamp. New edges come from
//   - random pairs inside a community,
//   - triadic closures routed through hub nodes (two neighbors of a hub
//     become direct neighbors),
//   - hub expansion (a hub links to one of its two-hop neighbors),
//   - migrating nodes that gradually move to another community and
//     change label at a planted timestamp.
// Attributes are the (blended) community one-hot scaled by `attr_scale`
// plus Gaussian noise of std `noise_sigma`; labels are community ids.
struct SyntheticParams {
  std::size_t num_nodes = 200;
  std::size_t num_communities = 4;
  int num_snapshots = 10;
  std::size_t attr_dim = 16;
  double hub_fraction = 0.1;
  double noise_sigma = 0.5;

  double attr_scale = 1.0;
  std::size_t initial_degree = 2;
  double hub_bridge_fraction = 0.0;     // share of initial hub edges to other communities
  double intra_edges_per_node = 0.05;   // per snapshot, times num_nodes
  double closures_per_node = 0.3;       // per snapshot, times num_nodes
  std::size_t hub_expansions = 1;       // per hub per snapshot
  double migration_fraction = 0.2;
  int migration_span = 3;               // snapshots between start of drift and label flip
  std::size_t migration_edges = 2;      // per migrating node per snapshot while drifting

  void validate() const;
};

struct SyntheticGraph {
  DynamicGraph graph;
  std::vector<NodeId> hubs;
  std::vector<NodeId> migrants;
  std::vector<int> flip_time;     // per node; 0 when the node never migrates
};

SyntheticGraph generate_synthetic(const SyntheticParams& params, std::uint64_t seed);

}  // namespace dane
