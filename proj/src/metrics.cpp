#include "dane/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dane/error.hpp"
#include "dane/random.hpp"

namespace dane {

namespace {

void check_inputs(const char* what, std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(std::string(what) + ": " + std::to_string(scores.size()) + " scores but " +
                std::to_string(labels.size()) + " labels");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw Error(std::string(what) + ": labels must be 0 or 1");
  }
}

}  // namespace

double score_link(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("score_link: vectors differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs("roc_auc", scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of average ranks (1-based) of the positives.
  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw Error("roc_auc: both classes must be present");
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

std::vector<std::size_t> ranking_order(std::span<const double> scores, std::uint64_t tie_seed) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(tie_seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double pr_auc(std::span<const double> scores, std::span<const int> labels, std::uint64_t tie_seed) {
  check_inputs("pr_auc", scores, labels);
  const std::vector<std::size_t> order = ranking_order(scores, tie_seed);
  double total = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]] != 1) continue;
    ++hits;
    total += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  if (hits == 0) throw Error("pr_auc: no positive labels");
  return total / static_cast<double>(hits);
}

double f1_binary(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_inputs("f1_binary", scores, labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++tp;
    if (predicted && labels[i] == 0) ++fp;
    if (!predicted && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double weighted_f1(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw Error("weighted_f1: length mismatch");
  if (truth.empty()) throw Error("weighted_f1: no samples");
  struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
  };
  std::map<int, Counts> per_class;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++per_class[truth[i]].support;
    if (truth[i] == predicted[i]) {
      ++per_class[truth[i]].tp;
    } else {
      ++per_class[truth[i]].fn;
      ++per_class[predicted[i]].fp;
    }
  }
  double total = 0.0;
  for (const auto& [label, c] : per_class) {
    if (c.support == 0 || c.tp == 0) continue;
    const double f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    total += static_cast<double>(c.support) * f1;
  }
  return total / static_cast<double>(truth.size());
}

}  // namespace dane
