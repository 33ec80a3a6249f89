#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "recbench/errors.hpp"

namespace recbench {

struct PredictionPair {
  double predicted;
  double actual;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  double tpr() const noexcept { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  double fpr() const noexcept { return fp + tn ? static_cast<double>(fp) / static_cast<double>(fp + tn) : 0.0; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// A recommendation list with graded relevance, evaluated to depth N.
template <typename Item>
struct RankedList {
  std::vector<std::pair<Item, double>> entries;
  std::size_t depth = 0;
};

inline double mae(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw ArgumentError("mae of an empty prediction list");
  double sum = 0.0;
  for (const auto& p : pairs) sum += std::abs(p.actual - p.predicted);
  return sum / static_cast<double>(pairs.size());
}

inline double rmse(std::span<const PredictionPair> pairs) {
  if (pairs.empty()) throw ArgumentError("rmse of an empty prediction list");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double d = p.predicted - p.actual;
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(pairs.size()));
}

namespace detail {

template <typename Item>
std::size_t hits_at_k(std::span<const Item> recommended, const std::unordered_set<Item>& relevant,
                      std::size_t k) {
  const std::size_t depth = std::min(k, recommended.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += relevant.count(recommended[r]);
  return hits;
}

}  // namespace detail

// |top-k ∩ relevant| / min(k, |recommended|); 0 for an empty list.
template <typename Item>
double precision_at_k(std::span<const Item> recommended, const std::unordered_set<Item>& relevant,
                      std::size_t k) {
  if (k == 0) throw ArgumentError("precision@k needs k >= 1");
  const std::size_t depth = std::min(k, recommended.size());
  if (depth == 0) return 0.0;
  return static_cast<double>(detail::hits_at_k(recommended, relevant, k)) / static_cast<double>(depth);
}

template <typename Item>
double recall_at_k(std::span<const Item> recommended, const std::unordered_set<Item>& relevant,
                   std::size_t k) {
  if (k == 0) throw ArgumentError("recall@k needs k >= 1");
  if (relevant.empty()) throw ArgumentError("recall@k is undefined for an empty relevant set");
  return static_cast<double>(detail::hits_at_k(recommended, relevant, k)) /
         static_cast<double>(relevant.size());
}

inline double dcg(std::span<const double> relevance, std::size_t depth) {
  double sum = 0.0;
  const std::size_t n = std::min(depth, relevance.size());
  for (std::size_t k = 0; k < n; ++k) {
    sum += (std::exp2(relevance[k]) - 1.0) / std::log2(static_cast<double>(k) + 2.0);
  }
  return sum;
}

// DCG of the list normalised by the DCG of the same grades sorted descending.
// Lists with no positive grade score 0.
inline double ndcg(std::span<const double> relevance, std::size_t depth) {
  for (const double r : relevance) {
    if (r < 0.0 || !std::isfinite(r)) throw ArgumentError("ndcg relevance grades must be finite and >= 0");
  }
  std::vector<double> ideal(relevance.begin(), relevance.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double best = dcg(ideal, depth);
  if (best <= 0.0) return 0.0;
  return dcg(relevance, depth) / best;
}

inline double ndcg(std::span<const double> relevance) { return ndcg(relevance, relevance.size()); }

template <typename Item>
double ndcg(const RankedList<Item>& list) {
  std::vector<double> grades;
  grades.reserve(list.entries.size());
  for (const auto& e : list.entries) grades.push_back(e.second);
  return ndcg(grades, list.depth ? list.depth : grades.size());
}

// Probability a random positive outscores a random negative, ties counted as
// one half. Computed from mid-ranks in O(n log n).
inline double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ArgumentError("roc_auc: scores and labels differ in length");
  std::size_t positives = 0;
  for (const int l : labels) {
    if (l != 0 && l != 1) throw ArgumentError("roc_auc: labels must be 0 or 1");
    positives += static_cast<std::size_t>(l);
  }
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) throw ArgumentError("roc_auc needs both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks (1-based, ties get the mean rank), doubled to stay integral.
  double twice_rank_sum = 0.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    std::size_t pos_in_group = 0;
    while (hi < order.size() && scores[order[hi]] == scores[order[lo]]) {
      pos_in_group += static_cast<std::size_t>(labels[order[hi]]);
      ++hi;
    }
    twice_rank_sum += static_cast<double>(pos_in_group) * static_cast<double>(lo + 1 + hi);
    lo = hi;
  }
  const double p = static_cast<double>(positives);
  const double u_stat = twice_rank_sum / 2.0 - p * (p + 1.0) / 2.0;
  return u_stat / (p * static_cast<double>(negatives));
}

inline ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw ArgumentError("confusion: length mismatch");
  if (predicted.empty()) throw ArgumentError("confusion of empty label lists");
  ConfusionCounts c;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    const bool p = predicted[k] != 0;
    const bool a = actual[k] != 0;
    if (p && a) ++c.tp;
    else if (p) ++c.fp;
    else if (a) ++c.fn;
    else ++c.tn;
  }
  return c;
}

}  // namespace recbench
