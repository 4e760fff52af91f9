#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dane/graph.hpp"
#include "dane/logreg.hpp"
#include "dane/model.hpp"

namespace dane {

struct MetricSeries {
  std::string name;
  std::vector<double> values;  // one per completed repeat

  double mean() const;
  // Sample standard deviation; 0 for a single value.
  double stddev() const;
};

struct MetricsReport {
  std::vector<MetricSeries> metrics;
  std::size_t repeats = 0;  // requested
  std::vector<std::string> warnings;

  const MetricSeries& metric(const std::string& name) const;
  // "metric,mean,std,repeats" with one row per metric.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct LinkEvalSplit {
  std::vector<Edge> fine_tune_edges;
  std::vector<Edge> test_positives;
  std::vector<Edge> test_negatives;
  std::uint64_t seed = 0;
};

// Shuffles new_edges(g, n) and reveals round(fine_tune_fraction * count) of
// them; the rest are test positives. Negatives are distinct node pairs drawn
// uniformly among pairs with no edge in any snapshot, as many as positives.
LinkEvalSplit draw_link_split(const DynamicGraph& g, std::uint64_t seed,
                              double fine_tune_fraction = 0.2);

// Throws if the split leaks: fine-tune and test positives overlap, or a
// negative is an edge of some snapshot.
void check_split(const DynamicGraph& g, const LinkEvalSplit& split);

struct LinkEvalOptions {
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  std::size_t fine_tune_steps = 20;
};

// Per repeat: split, fine-tune on the revealed edges, predict timestamp n from
// the window ending at n-1, score test pairs with σ(x̂_u·x̂_v). Reports
// roc_auc, pr_auc and f1.
MetricsReport eval_link_prediction(const DynamicGraph& g, const Model& model,
                                   const LinkEvalOptions& options);

struct NodeEvalOptions {
  std::size_t repeats = 10;
  std::uint64_t seed = 1;
  LogRegOptions logreg;
};

// Features are the predicted embeddings for timestamp n. Per repeat: 50/50
// split of labelled nodes, train on one half, score weighted F1 on the
// nodes of the other half whose label changed between n-1 and n.
MetricsReport eval_node_classification(const DynamicGraph& g, const Model& model,
                                       const NodeEvalOptions& options);

}  // namespace dane
