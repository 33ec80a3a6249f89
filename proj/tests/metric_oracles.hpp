#pragma once

// Brute-force reference implementations of the metrics, written without
// sharing code or shortcuts with the library, plus a random-instance driver
// used by both the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "recbench/metrics.hpp"

namespace oracle {

inline double mae(const std::vector<recbench::PredictionPair>& pairs) {
  double total = 0.0;
  for (std::size_t k = pairs.size(); k-- > 0;) total += std::fabs(pairs[k].predicted - pairs[k].actual);
  return total / static_cast<double>(pairs.size());
}

inline double rmse(const std::vector<recbench::PredictionPair>& pairs) {
  double total = 0.0;
  for (std::size_t k = pairs.size(); k-- > 0;) {
    const double d = pairs[k].predicted - pairs[k].actual;
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(pairs.size()));
}

inline double precision(const std::vector<int>& recommended, const std::vector<int>& relevant, std::size_t k) {
  std::size_t shown = 0, hits = 0;
  for (const int item : recommended) {
    if (shown == k) break;
    ++shown;
    if (std::find(relevant.begin(), relevant.end(), item) != relevant.end()) ++hits;
  }
  return shown == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(shown);
}

inline double recall(const std::vector<int>& recommended, const std::vector<int>& relevant, std::size_t k) {
  std::size_t hits = 0;
  for (const int item : relevant) {
    const auto end = recommended.begin() + static_cast<std::ptrdiff_t>(std::min(k, recommended.size()));
    if (std::find(recommended.begin(), end, item) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

inline double dcg(const std::vector<double>& grades) {
  double total = 0.0;
  for (std::size_t pos = 1; pos <= grades.size(); ++pos) {
    total += (std::pow(2.0, grades[pos - 1]) - 1.0) / (std::log(pos + 1.0) / std::log(2.0));
  }
  return total;
}

// Ideal gain by trying every ordering.
inline double ndcg(const std::vector<double>& grades) {
  std::vector<double> perm = grades;
  std::sort(perm.begin(), perm.end());
  double best = 0.0;
  do {
    best = std::max(best, dcg(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best == 0.0 ? 0.0 : dcg(grades) / best;
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (labels[p] != 1) continue;
    for (std::size_t n = 0; n < scores.size(); ++n) {
      if (labels[n] != 0) continue;
      pairs += 1.0;
      if (scores[p] > scores[n]) wins += 1.0;
      else if (scores[p] == scores[n]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline recbench::ConfusionCounts confusion(const std::vector<int>& predicted, const std::vector<int>& actual) {
  recbench::ConfusionCounts c;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    switch (predicted[k] * 2 + actual[k]) {
      case 3: ++c.tp; break;
      case 2: ++c.fp; break;
      case 1: ++c.fn; break;
      default: ++c.tn; break;
    }
  }
  return c;
}

struct SuiteResult {
  std::size_t instances = 0;
  double worst_error = 0.0;
  std::vector<std::string> failures;
};

// Runs each metric against its oracle on `instances` random inputs of at
// most 10 elements (6 for nDCG). Any deviation above tol is recorded.
inline SuiteResult run_metric_suite(std::size_t instances, std::uint32_t seed, double tol = 1e-12) {
  std::mt19937 gen(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); };
  SuiteResult out;
  auto check = [&](const char* name, std::size_t trial, double got, double want) {
    const double err = std::fabs(got - want);
    out.worst_error = std::max(out.worst_error, err);
    if (!(err <= tol)) {
      out.failures.push_back(std::string(name) + " instance " + std::to_string(trial) + ": " + std::to_string(got) +
                             " vs " + std::to_string(want));
    }
  };

  for (std::size_t t = 0; t < instances; ++t) {
    ++out.instances;
    const auto n = static_cast<std::size_t>(uniform_int(1, 10));

    std::vector<recbench::PredictionPair> pairs;
    for (std::size_t k = 0; k < n; ++k) {
      pairs.push_back({std::uniform_real_distribution<double>(0.5, 5.0)(gen), 0.5 * uniform_int(1, 10)});
    }
    check("mae", t, recbench::mae(pairs), mae(pairs));
    check("rmse", t, recbench::rmse(pairs), rmse(pairs));

    std::vector<int> catalog(12);
    for (int k = 0; k < 12; ++k) catalog[k] = k;
    std::shuffle(catalog.begin(), catalog.end(), gen);
    const std::vector<int> recommended(catalog.begin(), catalog.begin() + static_cast<std::ptrdiff_t>(n));
    std::shuffle(catalog.begin(), catalog.end(), gen);
    const std::vector<int> relevant(catalog.begin(), catalog.begin() + uniform_int(1, 10));
    const std::unordered_set<int> relevant_set(relevant.begin(), relevant.end());
    const auto k = static_cast<std::size_t>(uniform_int(1, 12));
    check("precision", t, recbench::precision_at_k<int>(recommended, relevant_set, k),
          precision(recommended, relevant, k));
    check("recall", t, recbench::recall_at_k<int>(recommended, relevant_set, k), recall(recommended, relevant, k));

    std::vector<double> grades(std::min<std::size_t>(n, 6));
    for (auto& g : grades) g = uniform_int(0, 4);
    check("ndcg", t, recbench::ndcg(grades), ndcg(grades));

    std::vector<double> scores(std::max<std::size_t>(n, 2));
    std::vector<int> labels(scores.size());
    for (std::size_t j = 0; j < scores.size(); ++j) {
      scores[j] = uniform_int(0, 5) * 0.25;  // coarse grid so ties occur
      labels[j] = uniform_int(0, 1);
    }
    labels[0] = 1;
    labels[1] = 0;
    std::shuffle(labels.begin(), labels.end(), gen);
    check("auc", t, recbench::roc_auc(scores, labels), auc(scores, labels));

    std::vector<int> predicted(n), actual(n);
    for (std::size_t j = 0; j < n; ++j) {
      predicted[j] = uniform_int(0, 1);
      actual[j] = uniform_int(0, 1);
    }
    const auto got = recbench::confusion(predicted, actual);
    const auto want = confusion(predicted, actual);
    if (!(got == want)) out.failures.push_back("confusion instance " + std::to_string(t));
  }
  return out;
}

}  // namespace oracle
