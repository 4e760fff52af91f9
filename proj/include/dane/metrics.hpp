#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dane {

// σ(a·b).
double score_link(std::span<const double> a, std::span<const double> b);

// Mann-Whitney statistic P(s_pos > s_neg) + P(tie)/2 from average ranks.
// Labels are 0/1; both classes must be present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Order used to rank items for average precision: descending score, ties
// kept in the order of a seeded shuffle of the input positions.
std::vector<std::size_t> ranking_order(std::span<const double> scores, std::uint64_t tie_seed);

// Average precision: mean over positives of precision at that positive's rank.
double pr_auc(std::span<const double> scores, std::span<const int> labels,
              std::uint64_t tie_seed = 0);

// Binary F1 predicting positive when score >= threshold; 0 when nothing is
// predicted positive.
double f1_binary(std::span<const double> scores, std::span<const int> labels,
                 double threshold = 0.5);

// Per-class F1 averaged with weights support_c / N over the true classes.
double weighted_f1(std::span<const int> truth, std::span<const int> predicted);

}  // namespace dane
