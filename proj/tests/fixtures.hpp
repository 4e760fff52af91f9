#pragma once
// Random instances shared by the unit tests and the acceptance run.
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "dane/graph.hpp"
#include "dane/model.hpp"
#include "dane/random.hpp"
#include "dane/tensor.hpp"
#include "oracles.hpp"

namespace fixtures {

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("dane_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& file, const std::string& body) {
  std::ofstream(file) << body;
}

inline dane::Tensor random_tensor(std::size_t rows, std::size_t cols, dane::Rng& rng,
                                  double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  dane::Tensor t(rows, cols);
  for (double& x : t.data()) x = u(rng);
  return t;
}

// Each snapshot keeps the previous edges with probability `keep` and adds
// each absent pair with probability `p`. Snapshot 1 is guaranteed one edge.
inline dane::DynamicGraph random_graph(std::size_t nodes, int snapshots, std::size_t attr_dim,
                                       double p, std::uint64_t seed, bool directed = false,
                                       double keep = 1.0) {
  dane::Rng rng(seed);
  std::bernoulli_distribution add(p), stay(keep);
  std::vector<dane::Snapshot> out;
  std::vector<dane::Edge> current;
  for (int t = 1; t <= snapshots; ++t) {
    std::vector<dane::Edge> next;
    for (const dane::Edge& e : current)
      if (stay(rng)) next.push_back(e);
    for (dane::NodeId a = 0; a < nodes; ++a) {
      for (dane::NodeId b = directed ? 0 : a + 1; b < nodes; ++b) {
        if (a == b) continue;
        const dane::Edge e{a, b};
        if (std::find(next.begin(), next.end(), e) == next.end() && add(rng)) next.push_back(e);
      }
    }
    if (t == 1 && next.empty() && nodes > 1) next.push_back({0, 1});
    current = next;
    std::map<dane::NodeId, int> labels;
    for (dane::NodeId v = 0; v < nodes; ++v) labels[v] = static_cast<int>((v + t) % 2);
    out.emplace_back(t, nodes, next, random_tensor(nodes, attr_dim, rng), directed,
                     std::move(labels));
  }
  return dane::DynamicGraph(nodes, attr_dim, directed, std::move(out));
}

inline oracle::Lists lists(const dane::Adjacency& adj) {
  oracle::Lists out(adj.num_nodes());
  for (dane::NodeId v = 0; v < adj.num_nodes(); ++v) {
    const auto n = adj.neighbors(v);
    out[v].assign(n.begin(), n.end());
  }
  return out;
}

inline std::vector<oracle::Mat> mats(const std::vector<dane::diff::Parameter>& params) {
  std::vector<oracle::Mat> out;
  for (const auto& p : params) out.push_back(oracle::to_mat(p.value));
  return out;
}

inline oracle::SpatialResult spatial_oracle(const dane::Adjacency& adj, const dane::Tensor& attrs,
                                            const dane::SpatialParams& sp) {
  return oracle::spatial(lists(adj), oracle::to_mat(attrs), oracle::to_mat(sp.input_proj.value),
                         mats(sp.aggregate), mats(sp.activeness_weights),
                         sp.use_activeness() ? oracle::to_mat(sp.activeness.value) : oracle::Mat{});
}

// Scalar recomputation of the prediction for t+1 of every node from the
// window ending at t.
inline oracle::Mat prediction_oracle(const dane::DynamicGraph& g, const dane::Model& m, int t) {
  const std::size_t L = m.config.layers;
  const int first = std::max(1, t - static_cast<int>(m.config.lookback));
  std::vector<oracle::SpatialResult> steps;
  for (int i = first; i <= t; ++i) {
    steps.push_back(spatial_oracle(g.snapshot(i).adjacency(), g.snapshot(i).attributes(), m.spatial));
  }
  const dane::TemporalParams& tp = m.temporal;
  const oracle::Mat w_y = oracle::to_mat(tp.merge_weight.value);
  const oracle::Vec b_y = oracle::to_mat(tp.merge_bias.value)[0];
  oracle::Mat out;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    std::vector<oracle::Vec> per_layer;
    for (std::size_t l = 1; l <= L; ++l) {
      const oracle::Vec& current = steps.back().x[l][v];
      if (!tp.use_temporal() || steps.size() < 2) {
        per_layer.push_back(current);
        continue;
      }
      std::vector<oracle::Vec> history;
      for (std::size_t i = steps.size() - 1; i-- > 0;) history.push_back(steps[i].x[l][v]);
      const oracle::Summary s = oracle::summarize(history, oracle::to_mat(tp.attention[l - 1].value));
      per_layer.push_back(oracle::predict_layer(current, s.xtilde,
                                                oracle::to_mat(tp.gate_weights[l - 1].value),
                                                oracle::to_mat(tp.gate_bias[l - 1].value)[0]));
    }
    out.push_back(oracle::merge(per_layer, w_y, b_y));
  }
  return out;
}

}  // namespace fixtures
