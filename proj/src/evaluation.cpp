#include "dane/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dane/error.hpp"
#include "dane/metrics.hpp"
#include "dane/text_format.hpp"
#include "dane/training.hpp"

namespace dane {

using nlohmann::json;

double MetricSeries::mean() const {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double MetricSeries::stddev() const {
  if (values.size() < 2) return 0.0;
  const double m = mean();
  double s = 0.0;
  for (double v : values) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(values.size() - 1));
}

const MetricSeries& MetricsReport::metric(const std::string& name) const {
  for (const MetricSeries& m : metrics) {
    if (m.name == name) return m;
  }
  throw Error("report has no metric \"" + name + "\"");
}

std::string MetricsReport::to_csv() const {
  std::string out = "metric,mean,std,repeats\n";
  for (const MetricSeries& m : metrics) {
    out += m.name + "," + text::format_double(m.mean()) + "," + text::format_double(m.stddev()) +
           "," + std::to_string(m.values.size()) + "\n";
  }
  return out;
}

json MetricsReport::to_json() const {
  json metrics_json = json::object();
  for (const MetricSeries& m : metrics) {
    metrics_json[m.name] = {{"mean", m.mean()}, {"std", m.stddev()}, {"values", m.values}};
  }
  return json{{"metrics", metrics_json}, {"repeats", repeats}, {"warnings", warnings}};
}

LinkEvalSplit draw_link_split(const DynamicGraph& g, std::uint64_t seed,
                              double fine_tune_fraction) {
  const int n = g.num_snapshots();
  if (n < 2) throw Error("link split: need at least 2 snapshots");
  if (fine_tune_fraction < 0.0 || fine_tune_fraction >= 1.0) {
    throw Error("link split: fine-tune fraction must lie in [0, 1)");
  }
  std::vector<Edge> fresh = new_edges(g, n);
  if (fresh.empty()) throw Error("link split: no new edges at the final timestamp");
  Rng rng(seed);
  std::shuffle(fresh.begin(), fresh.end(), rng);
  const auto reveal = static_cast<std::size_t>(
      std::lround(fine_tune_fraction * static_cast<double>(fresh.size())));
  LinkEvalSplit split;
  split.seed = seed;
  split.fine_tune_edges.assign(fresh.begin(), fresh.begin() + static_cast<std::ptrdiff_t>(reveal));
  split.test_positives.assign(fresh.begin() + static_cast<std::ptrdiff_t>(reveal), fresh.end());
  if (split.test_positives.empty()) throw Error("link split: no edges left for testing");

  const std::vector<Edge> seen = cumulative_edges(g, n);
  const std::set<Edge> known(seen.begin(), seen.end());
  const std::size_t nodes = g.num_nodes();
  const double pairs = g.directed() ? static_cast<double>(nodes) * static_cast<double>(nodes - 1)
                                    : 0.5 * static_cast<double>(nodes) * static_cast<double>(nodes - 1);
  if (pairs - static_cast<double>(known.size()) < static_cast<double>(split.test_positives.size())) {
    throw Error("link split: graph too dense for the requested number of negatives");
  }
  std::uniform_int_distribution<NodeId> pick(0, static_cast<NodeId>(nodes - 1));
  std::set<Edge> chosen;
  while (split.test_negatives.size() < split.test_positives.size()) {
    const NodeId a = pick(rng);
    const NodeId b = pick(rng);
    if (a == b) continue;
    const Edge e = canonical({a, b}, g.directed());
    if (known.contains(e) || !chosen.insert(e).second) continue;
    split.test_negatives.push_back(e);
  }
  check_split(g, split);
  return split;
}

void check_split(const DynamicGraph& g, const LinkEvalSplit& split) {
  const std::set<Edge> revealed(split.fine_tune_edges.begin(), split.fine_tune_edges.end());
  for (const Edge& e : split.test_positives) {
    if (revealed.contains(e)) throw Error("link split leak: test edge also used for fine-tuning");
  }
  const std::vector<Edge> seen = cumulative_edges(g, g.num_snapshots());
  const std::set<Edge> known(seen.begin(), seen.end());
  for (const Edge& e : split.test_negatives) {
    if (known.contains(e)) throw Error("link split leak: negative pair is an observed edge");
  }
}

MetricsReport eval_link_prediction(const DynamicGraph& g, const Model& model,
                                   const LinkEvalOptions& options) {
  if (options.repeats == 0) throw Error("eval-link: repeats must be positive");
  const int n = g.num_snapshots();
  if (n < 3) throw Error("eval-link: need at least 3 snapshots");
  MetricsReport report;
  report.repeats = options.repeats;
  report.metrics = {{"roc_auc", {}}, {"pr_auc", {}}, {"f1", {}}};
  const DynamicGraph observed = g.prefix(n - 1);
  for (std::size_t r = 0; r < options.repeats; ++r) {
    const LinkEvalSplit split = draw_link_split(g, derive_seed(options.seed, 2 * r));
    const FineTuneResult tuned = fine_tune(model, g, split.fine_tune_edges, options.fine_tune_steps,
                                           derive_seed(options.seed, 2 * r + 1));
    if (tuned.skipped_empty) {
      report.warnings.push_back("repeat " + std::to_string(r) +
                                ": no edges revealed for fine-tuning");
    }
    const Tensor pred = predict_embeddings(observed, tuned.model, n - 1);
    std::vector<double> scores;
    std::vector<int> labels;
    for (const Edge& e : split.test_positives) {
      scores.push_back(score_link(pred.row(e.u), pred.row(e.v)));
      labels.push_back(1);
    }
    for (const Edge& e : split.test_negatives) {
      scores.push_back(score_link(pred.row(e.u), pred.row(e.v)));
      labels.push_back(0);
    }
    report.metrics[0].values.push_back(roc_auc(scores, labels));
    report.metrics[1].values.push_back(pr_auc(scores, labels, derive_seed(options.seed, 2 * r)));
    report.metrics[2].values.push_back(f1_binary(scores, labels));
  }
  return report;
}

MetricsReport eval_node_classification(const DynamicGraph& g, const Model& model,
                                       const NodeEvalOptions& options) {
  if (options.repeats == 0) throw Error("eval-node: repeats must be positive");
  const int n = g.num_snapshots();
  if (n < 2) throw Error("eval-node: need at least 2 snapshots");
  const auto& current = g.snapshot(n).labels();
  const auto& previous = g.snapshot(n - 1).labels();
  if (current.empty() || previous.empty()) {
    throw Error("eval-node: labels required at the final two timestamps");
  }
  std::vector<NodeId> labelled;
  for (const auto& [v, label] : current) labelled.push_back(v);
  auto changed = [&](NodeId v) {
    const auto it = previous.find(v);
    return it != previous.end() && it->second != current.at(v);
  };
  if (std::none_of(labelled.begin(), labelled.end(), changed)) {
    throw Error("eval-node: no node changes its label at the final timestamp");
  }

  const Tensor features = predict_embeddings(g.prefix(n - 1), model, n - 1);
  auto rows_of = [&](const std::vector<NodeId>& nodes) {
    Tensor out(nodes.size(), features.cols());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::copy(features.row(nodes[i]).begin(), features.row(nodes[i]).end(), out.row(i).begin());
    }
    return out;
  };

  MetricsReport report;
  report.repeats = options.repeats;
  report.metrics = {{"weighted_f1", {}}};
  for (std::size_t r = 0; r < options.repeats; ++r) {
    std::vector<NodeId> order = labelled;
    Rng rng(derive_seed(options.seed, r));
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t half = order.size() / 2;
    const std::vector<NodeId> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<NodeId> test;
    for (std::size_t i = half; i < order.size(); ++i) {
      if (changed(order[i])) test.push_back(order[i]);
    }
    if (test.empty()) {
      report.warnings.push_back("repeat " + std::to_string(r) +
                                ": no label-changing nodes in the test half");
      continue;
    }
    std::vector<int> train_labels;
    for (NodeId v : train) train_labels.push_back(current.at(v));
    std::vector<int> truth;
    for (NodeId v : test) truth.push_back(current.at(v));
    const LogisticRegression clf = train_logreg(rows_of(train), train_labels, options.logreg);
    report.metrics[0].values.push_back(weighted_f1(truth, clf.predict(rows_of(test))));
  }
  if (report.metrics[0].values.empty()) {
    throw Error("eval-node: every repeat was skipped (no label-changing test nodes)");
  }
  return report;
}

}  // namespace dane
