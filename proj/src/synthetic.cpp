#include "dane/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dane/error.hpp"

namespace dane {

void SyntheticParams::validate() const {
  if (num_nodes < 2 || num_communities < 1 || num_snapshots < 1 || attr_dim < 1) {
    throw ConfigError("synthetic: num_nodes >= 2 and positive communities/snapshots/attr_dim required");
  }
  if (attr_dim < num_communities) {
    throw ConfigError("synthetic: attr_dim must be >= num_communities");
  }
  if (num_communities * 2 > num_nodes) {
    throw ConfigError("synthetic: need at least two nodes per community");
  }
  if (!(hub_fraction > 0.0 && hub_fraction < 1.0)) {
    throw ConfigError("synthetic: hub_fraction must lie in (0,1)");
  }
  if (!(hub_bridge_fraction >= 0.0 && hub_bridge_fraction <= 1.0)) {
    throw ConfigError("synthetic: hub_bridge_fraction must lie in [0,1]");
  }
  if (!(noise_sigma >= 0.0) || !(attr_scale > 0.0)) {
    throw ConfigError("synthetic: noise_sigma must be >= 0 and attr_scale > 0");
  }
  if (!(migration_fraction >= 0.0 && migration_fraction < 1.0) || migration_span < 1) {
    throw ConfigError("synthetic: migration_fraction in [0,1) and migration_span >= 1 required");
  }
}

namespace {

class Builder {
 public:
  Builder(std::size_t n, Rng& rng) : nbrs_(n), rng_(rng) {}

  bool connected(NodeId a, NodeId b) const { return nbrs_[a].count(b) > 0; }

  bool add(NodeId a, NodeId b) {
    if (a == b || connected(a, b)) return false;
    nbrs_[a].insert(b);
    nbrs_[b].insert(a);
    edges_.push_back(canonical({a, b}, false));
    return true;
  }

  NodeId random_neighbor(NodeId v) {
    const auto& s = nbrs_[v];
    auto it = s.begin();
    std::advance(it, pick(s.size()));
    return *it;
  }

  std::size_t degree(NodeId v) const { return nbrs_[v].size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  std::size_t pick(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }

 private:
  std::vector<std::set<NodeId>> nbrs_;
  std::vector<Edge> edges_;
  Rng& rng_;
};

}  // namespace

SyntheticGraph generate_synthetic(const SyntheticParams& p, std::uint64_t seed) {
  p.validate();
  Rng rng(seed);
  const std::size_t n = p.num_nodes;
  const std::size_t C = p.num_communities;
  const int T = p.num_snapshots;

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> origin(n);
  std::vector<std::vector<NodeId>> members(C);
  for (std::size_t i = 0; i < n; ++i) {
    origin[order[i]] = static_cast<int>(i % C);
    members[i % C].push_back(order[i]);
  }

  // Hubs round-robin over communities, taken from the front of each
  // community's shuffled member list.
  const std::size_t num_hubs =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(p.hub_fraction * n)));
  std::vector<bool> is_hub(n, false);
  std::vector<std::vector<NodeId>> hubs_of(C);
  std::vector<NodeId> hubs;
  for (std::size_t h = 0; h < num_hubs; ++h) {
    const std::size_t c = h % C;
    const std::size_t slot = h / C;
    if (slot >= members[c].size()) continue;
    const NodeId v = members[c][slot];
    is_hub[v] = true;
    hubs_of[c].push_back(v);
    hubs.push_back(v);
  }

  // Migrants: non-hub nodes that move to another community. Drift starts at
  // a uniform time in 2..T-1 and the label flips migration_span snapshots
  // later, or at T if that comes first.
  std::vector<int> target(n, -1);
  std::vector<int> drift_start(n, 0);
  std::vector<int> flip_time(n, 0);
  std::vector<NodeId> migrants;
  if (C > 1 && T >= 3) {
    std::vector<NodeId> candidates;
    for (NodeId v : order)
      if (!is_hub[v]) candidates.push_back(v);
    const auto count = static_cast<std::size_t>(std::lround(p.migration_fraction * n));
    for (std::size_t i = 0; i < std::min(count, candidates.size()); ++i) {
      const NodeId v = candidates[candidates.size() - 1 - i];
      const int shift = 1 + static_cast<int>(std::uniform_int_distribution<std::size_t>(0, C - 2)(rng));
      target[v] = (origin[v] + shift) % static_cast<int>(C);
      drift_start[v] = std::uniform_int_distribution<int>(2, T - 1)(rng);
      flip_time[v] = std::min(drift_start[v] + p.migration_span, T);
      migrants.push_back(v);
    }
  }
  auto label_at = [&](NodeId v, int t) {
    return (target[v] >= 0 && t >= flip_time[v]) ? target[v] : origin[v];
  };
  auto drifting = [&](NodeId v, int t) {
    return target[v] >= 0 && t >= drift_start[v] && t <= flip_time[v];
  };

  Builder b(n, rng);
  auto random_member = [&](int c) { return members[c][b.pick(members[c].size())]; };

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Snapshot> snapshots;
  for (int t = 1; t <= T; ++t) {
    if (t == 1) {
      for (NodeId v = 0; v < n; ++v) {
        for (std::size_t k = 0; k < p.initial_degree; ++k) b.add(v, random_member(origin[v]));
      }
      // Hubs also reach into other communities.
      for (NodeId h : hubs) {
        for (std::size_t k = 0; k < 3 * p.initial_degree; ++k) {
          int c = origin[h];
          if (C > 1 && std::bernoulli_distribution(p.hub_bridge_fraction)(rng)) {
            c = (c + 1 + static_cast<int>(b.pick(C - 1))) % static_cast<int>(C);
          }
          b.add(h, random_member(c));
        }
      }
    } else {
      const auto intra = static_cast<std::size_t>(std::lround(p.intra_edges_per_node * n));
      for (std::size_t k = 0; k < intra; ++k) {
        const auto v = static_cast<NodeId>(b.pick(n));
        if (drifting(v, t)) continue;
        b.add(v, random_member(label_at(v, t)));
      }
      const auto closures = static_cast<std::size_t>(std::lround(p.closures_per_node * n));
      for (std::size_t k = 0; k < closures && !hubs.empty(); ++k) {
        const NodeId h = hubs[b.pick(hubs.size())];
        if (b.degree(h) < 2) continue;
        const NodeId first = b.random_neighbor(h);
        const NodeId second = b.random_neighbor(h);
        b.add(first, second);
      }
      for (NodeId h : hubs) {
        for (std::size_t k = 0; k < p.hub_expansions; ++k) {
          if (b.degree(h) == 0) continue;
          const NodeId x = b.random_neighbor(h);
          const NodeId y = b.random_neighbor(x);
          b.add(h, y);
        }
      }
      for (NodeId v : migrants) {
        if (!drifting(v, t)) continue;
        const int c = target[v];
        for (std::size_t k = 0; k < p.migration_edges; ++k) {
          if (!hubs_of[c].empty() && b.pick(2) == 0) {
            const NodeId h = hubs_of[c][b.pick(hubs_of[c].size())];
            if (!b.add(v, h) && b.degree(h) > 0) b.add(v, b.random_neighbor(h));
          } else {
            b.add(v, random_member(c));
          }
        }
      }
    }

    Tensor attrs(n, p.attr_dim);
    std::map<NodeId, int> labels;
    for (NodeId v = 0; v < n; ++v) {
      double w = 0.0;
      if (target[v] >= 0) {
        w = std::clamp(static_cast<double>(t - drift_start[v] + 1) / (p.migration_span + 1), 0.0,
                       1.0);
      }
      attrs(v, static_cast<std::size_t>(origin[v])) += p.attr_scale * (1.0 - w);
      if (target[v] >= 0) attrs(v, static_cast<std::size_t>(target[v])) += p.attr_scale * w;
      if (p.noise_sigma > 0.0) {
        for (std::size_t j = 0; j < p.attr_dim; ++j) attrs(v, j) += p.noise_sigma * noise(rng);
      }
      labels[v] = label_at(v, t);
    }
    snapshots.emplace_back(t, n, b.edges(), std::move(attrs), false, std::move(labels));
  }

  return SyntheticGraph{DynamicGraph(n, p.attr_dim, false, std::move(snapshots)),
                        std::move(hubs), std::move(migrants), std::move(flip_time)};
}

}  // namespace dane
