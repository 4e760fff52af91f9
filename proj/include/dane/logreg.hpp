#pragma once

#include <span>
#include <vector>

#include "dane/tensor.hpp"

namespace dane {

struct LogRegOptions {
  double l2 = 0.01;
  std::size_t epochs = 500;
  double step = 0.1;
};

// Multinomial logistic regression over the distinct labels seen in training.
struct LogisticRegression {
  std::vector<int> classes;  // sorted; column c of the weights scores classes[c]
  Tensor weights;            // features x classes
  Tensor bias;               // 1 x classes

  // Class probabilities, one row per sample.
  Tensor probabilities(const Tensor& features) const;
  std::vector<int> predict(const Tensor& features) const;
};

struct LogRegObjective {
  double loss = 0.0;
  Tensor weight_grad;
  Tensor bias_grad;
};

// Mean cross-entropy + (l2 / 2) ||W||^2 (bias unregularized) and its gradient.
// `targets` are class indices into model.classes.
LogRegObjective logreg_objective(const LogisticRegression& model, const Tensor& features,
                                 std::span<const std::size_t> targets, double l2);

// Full-batch gradient descent from zero weights. The L2 term is applied as an
// exact proximal shrink after each cross-entropy step, which keeps the update
// stable for any l2.
LogisticRegression train_logreg(const Tensor& features, std::span<const int> labels,
                                const LogRegOptions& options = {});

}  // namespace dane
