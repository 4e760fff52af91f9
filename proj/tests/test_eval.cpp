#include <doctest.h>

#include <cmath>
#include <numeric>

#include "dane/error.hpp"
#include "dane/evaluation.hpp"
#include "dane/logreg.hpp"
#include "dane/metrics.hpp"
#include "dane/synthetic.hpp"
#include "dane/training.hpp"
#include "fixtures.hpp"

using namespace dane;

namespace {

struct Instance {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores on a coarse grid so that ties are frequent; both classes present.
Instance random_instance(Rng& rng, std::size_t max_size = 40) {
  std::uniform_int_distribution<std::size_t> size(2, max_size);
  std::uniform_int_distribution<int> grid(0, 9);
  Instance inst;
  const std::size_t n = size(rng);
  for (std::size_t i = 0; i < n; ++i) {
    inst.scores.push_back(grid(rng) / 9.0);
    inst.labels.push_back(static_cast<int>(rng() % 2));
  }
  inst.labels[0] = 1;
  inst.labels[1] = 0;
  return inst;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.dim = 4;
  c.layers = 1;
  c.lookback = 2;
  c.batch = 32;
  c.lr = 1e-2;
  c.epochs = 2;
  return c;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("score_link examples") {
  const std::vector<double> a{1, 0}, b{0, 1};
  CHECK(score_link(a, b) == 0.5);
  const std::vector<double> c{std::sqrt(10.0), 0};
  CHECK(score_link(c, c) == doctest::Approx(0.99995).epsilon(1e-5));
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Tensor x = fixtures::random_tensor(2, 5, rng, 2.0);
    CHECK(score_link(x.row(0), x.row(1)) == score_link(x.row(1), x.row(0)));
  }
}

TEST_CASE("roc_auc examples") {
  CHECK(roc_auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{1, 0, 1, 0}) == 0.5);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), Error);
  CHECK_THROWS_AS(roc_auc(std::vector<double>{0.1}, std::vector<int>{1, 0}), Error);
}

TEST_CASE("pr_auc and f1 examples") {
  CHECK(pr_auc(std::vector<double>{0.9, 0.8, 0.1}, std::vector<int>{1, 1, 0}) == 1.0);
  CHECK(pr_auc(std::vector<double>{0.2, 0.2, 0.7}, std::vector<int>{1, 1, 1}) == 1.0);
  CHECK_THROWS_AS(pr_auc(std::vector<double>{0.2, 0.3}, std::vector<int>{0, 0}), Error);
  CHECK(f1_binary(std::vector<double>{0.9, 0.1, 0.7}, std::vector<int>{1, 0, 1}) == 1.0);
  CHECK(f1_binary(std::vector<double>{0.1, 0.2, 0.3}, std::vector<int>{1, 0, 1}) == 0.0);
}

TEST_CASE("metrics match brute-force oracles") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Instance inst = random_instance(rng);
    CHECK(std::abs(roc_auc(inst.scores, inst.labels) - oracle::roc_auc(inst.scores, inst.labels)) < 1e-9);
    const std::uint64_t tie_seed = trial;
    CHECK(std::abs(pr_auc(inst.scores, inst.labels, tie_seed) -
                   oracle::average_precision(inst.scores, inst.labels,
                                             ranking_order(inst.scores, tie_seed))) < 1e-9);
    // Same confusion counts; the two closed forms differ only in rounding.
    CHECK(std::abs(f1_binary(inst.scores, inst.labels) - oracle::f1(inst.scores, inst.labels, 0.5)) < 1e-12);
  }
}

TEST_CASE("ranking order sorts by score and is reproducible") {
  const std::vector<double> scores{0.1, 0.5, 0.5, 0.9, 0.5};
  const auto order = ranking_order(scores, 3);
  CHECK(order == ranking_order(scores, 3));
  CHECK(order.front() == 3);
  CHECK(order.back() == 0);
}

TEST_CASE("roc_auc is invariant under monotone transforms") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = random_instance(rng);
    std::vector<double> squashed;
    for (double s : inst.scores) squashed.push_back(std::exp(3.0 * s) - 7.0);
    CHECK(roc_auc(squashed, inst.labels) == doctest::Approx(roc_auc(inst.scores, inst.labels)).epsilon(1e-15));
  }
}

TEST_CASE("roc_auc of flipped labels is the complement") {
  Rng rng(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    Instance inst = random_instance(rng);
    for (double& s : inst.scores) s = normal(rng);  // continuous scores are tie-free
    std::vector<int> flipped;
    for (int y : inst.labels) flipped.push_back(1 - y);
    CHECK(roc_auc(inst.scores, inst.labels) + roc_auc(inst.scores, flipped) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const double pr = pr_auc(inst.scores, inst.labels, 1);
    const double f = f1_binary(inst.scores, inst.labels, 0.0);
    CHECK(pr >= 0.0);
    CHECK(pr <= 1.0);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
}

TEST_CASE("weighted F1 matches per-class brute force") {
  CHECK(weighted_f1(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}) == 1.0);
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> truth, predicted;
    const std::size_t n = 1 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      truth.push_back(static_cast<int>(rng() % 4));
      predicted.push_back(static_cast<int>(rng() % 5));
    }
    CHECK(std::abs(weighted_f1(truth, predicted) - oracle::weighted_f1(truth, predicted)) < 1e-12);
  }
  CHECK_THROWS_AS(weighted_f1(std::vector<int>{}, std::vector<int>{}), Error);
}

TEST_CASE("logistic regression fits separable blobs") {
  Rng rng(6);
  std::normal_distribution<double> normal(0.0, 0.3);
  Tensor x(40, 2);
  std::vector<int> y;
  for (std::size_t i = 0; i < 40; ++i) {
    const int label = static_cast<int>(i % 2) * 5;  // classes 0 and 5
    x(i, 0) = (label ? 2.0 : -2.0) + normal(rng);
    x(i, 1) = normal(rng);
    y.push_back(label);
  }
  const LogisticRegression m = train_logreg(x, y);
  CHECK(m.classes == std::vector<int>{0, 5});
  CHECK(m.predict(x) == y);
  const Tensor probs = m.probabilities(x);
  for (std::size_t i = 0; i < 40; ++i) CHECK(probs(i, 0) + probs(i, 1) == doctest::Approx(1.0));
  LogRegOptions heavy;
  heavy.l2 = 1e6;
  const LogisticRegression shrunk = train_logreg(x, y, heavy);
  double norm = 0.0;
  for (double w : shrunk.weights.data()) norm += w * w;
  CHECK(std::sqrt(norm) < 1e-2);
  CHECK_THROWS_AS(train_logreg(x, std::vector<int>(40, 1)), Error);
}

TEST_CASE("logistic regression objective gradient matches finite differences") {
  Rng rng(7);
  LogisticRegression m;
  m.classes = {0, 1, 2};
  m.weights = fixtures::random_tensor(4, 3, rng);
  m.bias = fixtures::random_tensor(1, 3, rng);
  const Tensor x = fixtures::random_tensor(10, 4, rng);
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < 10; ++i) targets.push_back(i % 3);
  const double l2 = 0.3;
  const LogRegObjective obj = logreg_objective(m, x, targets, l2);
  const double eps = 1e-6;
  auto central = [&](Tensor& param, std::size_t i) {
    const double saved = param[i];
    param[i] = saved + eps;
    const double up = logreg_objective(m, x, targets, l2).loss;
    param[i] = saved - eps;
    const double down = logreg_objective(m, x, targets, l2).loss;
    param[i] = saved;
    return (up - down) / (2.0 * eps);
  };
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    CHECK(oracle::rel_diff(central(m.weights, i), obj.weight_grad[i]) < 1e-6);
  }
  for (std::size_t i = 0; i < m.bias.size(); ++i) {
    CHECK(oracle::rel_diff(central(m.bias, i), obj.bias_grad[i]) < 1e-6);
  }
}

TEST_CASE("metric series statistics and report formats") {
  const MetricSeries s{"roc_auc", {0.5, 0.7, 0.9}};
  CHECK(s.mean() == doctest::Approx(0.7));
  CHECK(s.stddev() == doctest::Approx(0.2));
  CHECK(MetricSeries{"x", {0.4}}.stddev() == 0.0);
  MetricsReport r;
  r.metrics = {s};
  r.repeats = 3;
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("metric,mean,std,repeats\n", 0) == 0);
  CHECK(csv.find("roc_auc,") != std::string::npos);
  const auto j = r.to_json();
  CHECK(j["repeats"] == 3);
  CHECK(j["metrics"].dump().find("0.9") != std::string::npos);
  CHECK_THROWS_AS(r.metric("pr_auc"), Error);
}

TEST_CASE("link split is disjoint, sized and reproducible") {
  const DynamicGraph g = fixtures::random_graph(20, 4, 2, 0.15, 8, false, 0.7);
  const std::vector<Edge> fresh = new_edges(g, 4);
  REQUIRE(fresh.size() >= 5);
  const LinkEvalSplit a = draw_link_split(g, 11);
  CHECK(a.fine_tune_edges.size() ==
        static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(fresh.size()))));
  CHECK(a.fine_tune_edges.size() + a.test_positives.size() == fresh.size());
  CHECK(a.test_negatives.size() == a.test_positives.size());
  CHECK_NOTHROW(check_split(g, a));
  const LinkEvalSplit b = draw_link_split(g, 11);
  CHECK(a.fine_tune_edges == b.fine_tune_edges);
  CHECK(a.test_negatives == b.test_negatives);

  LinkEvalSplit leaky = a;
  leaky.fine_tune_edges.push_back(a.test_positives.front());
  CHECK_THROWS_AS(check_split(g, leaky), Error);
  LinkEvalSplit observed = a;
  observed.test_negatives.front() = g.snapshot(1).edges().front();
  CHECK_THROWS_AS(check_split(g, observed), Error);
}

TEST_CASE("link evaluation is deterministic") {
  const DynamicGraph g = fixtures::random_graph(16, 5, 3, 0.2, 9, false, 0.7);
  const Model m = train(g, tiny_config());
  LinkEvalOptions o;
  o.repeats = 3;
  o.fine_tune_steps = 2;
  const MetricsReport a = eval_link_prediction(g, m, o);
  const MetricsReport b = eval_link_prediction(g, m, o);
  CHECK(a.to_json().dump() == b.to_json().dump());
  CHECK(a.to_csv() == b.to_csv());
  for (const char* name : {"roc_auc", "pr_auc", "f1"}) {
    CHECK(a.metric(name).values.size() == 3);
  }
}

TEST_CASE("node classification requires label changes") {
  const DynamicGraph g = fixtures::random_graph(16, 4, 3, 0.2, 10);
  const Model m = train(g, tiny_config());
  NodeEvalOptions o;
  o.repeats = 3;
  const MetricsReport r = eval_node_classification(g, m, o);
  CHECK(r.metric("weighted_f1").values.size() == 3);
  CHECK(r.to_json().dump() == eval_node_classification(g, m, o).to_json().dump());

  std::vector<Snapshot> constant;
  for (const Snapshot& s : g.snapshots()) {
    std::map<NodeId, int> labels;
    for (NodeId v = 0; v < 16; ++v) labels[v] = static_cast<int>(v % 2);
    constant.emplace_back(s.timestamp(), 16, std::vector<Edge>(s.edges().begin(), s.edges().end()),
                          s.attributes(), false, std::move(labels));
  }
  CHECK_THROWS_AS(eval_node_classification(DynamicGraph(16, 3, false, std::move(constant)), m, o), Error);
}

TEST_CASE("node classification finds planted migrations") {
  // Default benchmark graph, except migrants make 8 edges per drifting
  // snapshot so their move shows up before the label flips.
  SyntheticParams p;
  p.migration_edges = 8;
  const SyntheticGraph sg = generate_synthetic(p, 1);
  TrainConfig c;
  c.dim = 32;
  c.layers = 2;
  c.lookback = 3;
  c.batch = 256;
  c.lr = 1e-2;
  c.epochs = 30;
  c.seed = 1;
  const Model m = train(sg.graph, c);
  NodeEvalOptions o;
  o.repeats = 10;
  const MetricSeries w = eval_node_classification(sg.graph, m, o).metric("weighted_f1");
  CHECK(w.values.size() == 10);
  CHECK(w.mean() >= 0.6);
}

}  // TEST_SUITE
