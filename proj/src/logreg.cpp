#include "dane/logreg.hpp"

#include <algorithm>
#include <cmath>

#include "dane/error.hpp"

namespace dane {

Tensor LogisticRegression::probabilities(const Tensor& features) const {
  if (features.cols() != weights.rows()) {
    throw ShapeError("logreg: features " + features.shape_string() + " vs weights " +
                     weights.shape_string());
  }
  const std::size_t k = classes.size();
  Tensor out(features.rows(), k);
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t c = 0; c < k; ++c) row[c] = bias[c];
    for (std::size_t j = 0; j < features.cols(); ++j) {
      const double x = features(i, j);
      for (std::size_t c = 0; c < k; ++c) row[c] += x * weights(j, c);
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double& v : row) {
      v = std::exp(v - peak);
      z += v;
    }
    for (double& v : row) v /= z;
  }
  return out;
}

std::vector<int> LogisticRegression::predict(const Tensor& features) const {
  const Tensor probs = probabilities(features);
  std::vector<int> out;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const auto row = probs.row(i);
    out.push_back(classes[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) -
                                                   row.begin())]);
  }
  return out;
}

LogRegObjective logreg_objective(const LogisticRegression& model, const Tensor& features,
                                 std::span<const std::size_t> targets, double l2) {
  if (targets.size() != features.rows()) throw ShapeError("logreg: one target per row required");
  const Tensor probs = model.probabilities(features);
  const std::size_t n = features.rows();
  const std::size_t k = model.classes.size();
  LogRegObjective out{0.0, Tensor(model.weights.rows(), k), Tensor(1, k)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.loss -= std::log(probs(i, targets[i])) * inv_n;
    for (std::size_t c = 0; c < k; ++c) {
      const double delta = (probs(i, c) - (c == targets[i] ? 1.0 : 0.0)) * inv_n;
      out.bias_grad[c] += delta;
      for (std::size_t j = 0; j < features.cols(); ++j) {
        out.weight_grad(j, c) += features(i, j) * delta;
      }
    }
  }
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    out.loss += 0.5 * l2 * model.weights[i] * model.weights[i];
    out.weight_grad[i] += l2 * model.weights[i];
  }
  return out;
}

LogisticRegression train_logreg(const Tensor& features, std::span<const int> labels,
                                const LogRegOptions& options) {
  if (labels.size() != features.rows()) throw ShapeError("train_logreg: one label per row required");
  if (options.l2 < 0.0 || options.step <= 0.0) throw Error("train_logreg: invalid options");
  LogisticRegression model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  if (model.classes.size() < 2) throw Error("train_logreg: need at least two classes");
  std::vector<std::size_t> targets;
  for (int y : labels) {
    targets.push_back(static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), y) - model.classes.begin()));
  }
  model.weights = Tensor(features.cols(), model.classes.size());
  model.bias = Tensor(1, model.classes.size());
  const double shrink = 1.0 / (1.0 + options.step * options.l2);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    const LogRegObjective obj = logreg_objective(model, features, targets, 0.0);
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      model.weights[i] = (model.weights[i] - options.step * obj.weight_grad[i]) * shrink;
    }
    for (std::size_t c = 0; c < model.bias.size(); ++c) {
      model.bias[c] -= options.step * obj.bias_grad[c];
    }
  }
  return model;
}

}  // namespace dane
