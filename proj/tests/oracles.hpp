#pragma once
// Straightforward scalar recomputations used as independent test oracles.
// Everything here works on nested std::vector values with explicit loops and
// shares no code with the library beyond the Tensor type used for input.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "dane/tensor.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;
using Lists = std::vector<std::vector<std::uint32_t>>;

inline Mat to_mat(const dane::Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Vec matvec(const Mat& w, const Vec& x) {
  Vec y(w.size(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += w[i][j] * x[j];
  return y;
}

inline Vec stack(const Vec& a, const Vec& b) {
  Vec out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Relative difference with an absolute floor of 1.
inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

inline double max_rel_diff(const Mat& a, const dane::Tensor& b) {
  double worst = 0.0;
  if (a.size() != b.rows()) return INFINITY;
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r].size() != b.cols()) return INFINITY;
    for (std::size_t c = 0; c < a[r].size(); ++c) worst = std::max(worst, rel_diff(a[r][c], b(r, c)));
  }
  return worst;
}

// Activeness and embeddings of one snapshot, layer by layer.
struct SpatialResult {
  std::vector<Mat> x;  // layers 0..L
  std::vector<Mat> p;  // layers 0..L, empty without activeness
};

inline SpatialResult spatial(const Lists& nbrs, const Mat& attrs, const Mat& w_in,
                             const std::vector<Mat>& w_x, const std::vector<Mat>& w_p,
                             const Mat& act) {
  const std::size_t n = nbrs.size();
  const bool gated = !w_p.empty();
  SpatialResult r;
  Mat x0(n);
  for (std::size_t v = 0; v < n; ++v) x0[v] = matvec(w_in, attrs[v]);
  r.x.push_back(x0);
  if (gated) r.p.push_back(act);
  for (std::size_t l = 0; l < w_x.size(); ++l) {
    const Mat& x = r.x[l];
    const std::size_t d = x0[0].size();
    Mat nx(n), np(n);
    for (std::size_t v = 0; v < n; ++v) {
      Vec xbar(d, 0.0), pbar(d, 0.0);
      for (std::uint32_t u : nbrs[v]) {
        for (std::size_t j = 0; j < d; ++j) {
          const double gate = gated ? r.p[l][u][j] : 1.0;
          xbar[j] += gate * x[u][j];
          if (gated) pbar[j] += r.p[l][u][j];
        }
      }
      if (!nbrs[v].empty()) {
        for (std::size_t j = 0; j < d; ++j) {
          xbar[j] /= static_cast<double>(nbrs[v].size());
          pbar[j] /= static_cast<double>(nbrs[v].size());
        }
      }
      nx[v] = matvec(w_x[l], stack(xbar, x[v]));
      for (double& e : nx[v]) e = std::tanh(e);
      if (gated) {
        np[v] = matvec(w_p[l], stack(pbar, r.p[l][v]));
        for (double& e : np[v]) e = sigmoid(e);
      }
    }
    r.x.push_back(nx);
    if (gated) r.p.push_back(np);
  }
  return r;
}

struct Summary {
  Vec alpha;
  Vec xtilde;
};

// `history` most recent first: x_{t-1}, x_{t-2}, ...
inline Summary summarize(const std::vector<Vec>& history, const Mat& w_beta) {
  const Vec& query = history.front();
  const Vec wq = matvec(w_beta, query);
  Vec beta;
  for (const Vec& h : history) beta.push_back(sigmoid(dot(h, wq)));
  double denom = 0.0;
  for (double b : beta) denom += std::exp(b);
  Summary s;
  for (double b : beta) s.alpha.push_back(std::exp(b) / denom);
  s.xtilde.assign(query.size(), 0.0);
  for (std::size_t k = 0; k < history.size(); ++k)
    for (std::size_t j = 0; j < query.size(); ++j) s.xtilde[j] += s.alpha[k] * history[k][j];
  for (double& e : s.xtilde) e = std::tanh(e);
  return s;
}

inline Vec predict_layer(const Vec& current, const Vec& xtilde, const Mat& w_g, const Vec& b_g) {
  Vec g = matvec(w_g, stack(xtilde, current));
  Vec out(current.size());
  for (std::size_t j = 0; j < current.size(); ++j) {
    g[j] = sigmoid(g[j] + b_g[j]);
    out[j] = current[j] + g[j] * (current[j] - xtilde[j]);
  }
  return out;
}

inline Vec merge(const std::vector<Vec>& per_layer, const Mat& w_y, const Vec& b_y) {
  Vec out(b_y.size(), 0.0);
  for (const Vec& xh : per_layer) {
    const Vec y = matvec(w_y, xh);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += (y[j] + b_y[j]) / per_layer.size();
  }
  return out;
}

// Negative-sampling objective, batch mean.
inline double ns_loss(const Mat& pred, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& pos,
                      const std::vector<std::uint32_t>& neg, std::size_t per_positive) {
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const auto [u, v] = pos[i];
    total -= std::log(sigmoid(dot(pred[u], pred[v])));
    for (std::size_t r = 0; r < per_positive; ++r) {
      total -= std::log(sigmoid(-dot(pred[neg[i * per_positive + r]], pred[v])));
    }
  }
  return total / static_cast<double>(pos.size());
}

// Exact softmax objective by enumerating, for every center v, the nodes z
// with an edge {z, v}.
inline double softmax_loss(const Mat& pred, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges) {
  std::set<std::pair<std::uint32_t, std::uint32_t>> oriented;
  for (auto [a, b] : edges) {
    oriented.insert({a, b});
    oriented.insert({b, a});
  }
  double total = 0.0;
  for (auto [v, u] : oriented) {
    double denom = 0.0;
    for (auto [c, z] : oriented)
      if (c == v) denom += std::exp(dot(pred[z], pred[v]));
    total -= std::log(std::exp(dot(pred[u], pred[v])) / denom);
  }
  return total;
}

// Mann-Whitney statistic by counting every (positive, negative) pair.
inline double roc_auc(const Vec& scores, const std::vector<int>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Average precision where item j ranks ahead of item i when its score is
// higher, or equal with an earlier position in `tie_order`.
inline double average_precision(const Vec& scores, const std::vector<int>& labels,
                                const std::vector<std::size_t>& tie_order) {
  std::vector<std::size_t> position(scores.size());
  for (std::size_t k = 0; k < tie_order.size(); ++k) position[tie_order[k]] = k;
  double sum = 0.0;
  int positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    ++positives;
    int ahead = 0, ahead_pos = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      const bool before =
          scores[j] > scores[i] || (scores[j] == scores[i] && position[j] <= position[i]);
      if (!before) continue;
      ++ahead;
      ahead_pos += labels[j] == 1;
    }
    sum += static_cast<double>(ahead_pos) / ahead;
  }
  return sum / positives;
}

inline double f1(const Vec& scores, const std::vector<int>& labels, double threshold) {
  int tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (predicted && labels[i] == 1) ++tp;
    if (predicted && labels[i] == 0) ++fp;
    if (!predicted && labels[i] == 1) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

inline double weighted_f1(const std::vector<int>& truth, const std::vector<int>& predicted) {
  std::set<int> classes(truth.begin(), truth.end());
  double total = 0.0;
  for (int c : classes) {
    int tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      support += truth[i] == c;
      if (predicted[i] == c && truth[i] == c) ++tp;
      if (predicted[i] == c && truth[i] != c) ++fp;
      if (predicted[i] != c && truth[i] == c) ++fn;
    }
    double score = 0.0;
    if (tp > 0) {
      const double precision = static_cast<double>(tp) / (tp + fp);
      const double recall = static_cast<double>(tp) / (tp + fn);
      score = 2.0 * precision * recall / (precision + recall);
    }
    total += support * score;
  }
  return total / static_cast<double>(truth.size());
}

}  // namespace oracle
