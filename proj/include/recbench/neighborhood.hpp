#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "recbench/baseline.hpp"
#include "recbench/dataset.hpp"

namespace recbench {

enum class Similarity { Cosine, Msd, Pearson, PearsonBaseline };

struct SimilarityKind {
  Similarity variant = Similarity::Cosine;
  double shrinkage = 100.0;  // PearsonBaseline only
};

inline Similarity parse_similarity(std::string_view name) {
  if (name == "cosine") return Similarity::Cosine;
  if (name == "msd" || name == "MSD") return Similarity::Msd;
  if (name == "pearson") return Similarity::Pearson;
  if (name == "pearson_baseline" || name == "pearson-baseline") return Similarity::PearsonBaseline;
  throw ArgumentError("unknown similarity '" + std::string(name) +
                      "' (expected cosine, msd, pearson or pearson_baseline)");
}

inline std::string to_string(Similarity s) {
  switch (s) {
    case Similarity::Cosine: return "cosine";
    case Similarity::Msd: return "msd";
    case Similarity::Pearson: return "pearson";
    case Similarity::PearsonBaseline: return "pearson_baseline";
  }
  return "?";
}

struct KnnConfig {
  std::size_t k_neighbors = 40;
  std::size_t top_n = 10;
  double min_similarity = 0.0;
  std::size_t min_support = 1;
  double pt_threshold = 4.0;  // MFIN positive-rating cutoff
  SimilarityKind similarity;
  double damping = 5.0;  // baseline used for fallback and PearsonBaseline
  bool mean_center = true;

  void validate() const {
    if (k_neighbors < 1) throw ArgumentError("k_neighbors must be >= 1");
    if (top_n < 1) throw ArgumentError("top_n must be >= 1");
    if (min_support < 1) throw ArgumentError("min_support must be >= 1");
    if (!(similarity.shrinkage >= 0.0)) throw ArgumentError("shrinkage must be >= 0");
    if (!(damping >= 0.0)) throw ArgumentError("damping must be >= 0");
  }
};

struct Neighbor {
  std::uint32_t user;
  double similarity;
};

struct NeighborSet {
  std::uint32_t target = 0;
  std::vector<Neighbor> neighbors;  // descending similarity, ties by lower ordinal
};

// Sufficient statistics over the items two users both rated.
struct CoRatingStats {
  std::size_t n = 0;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, sdd = 0;

  void add(double x, double y) noexcept {
    ++n;
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    sdd += (x - y) * (x - y);
  }
};

// Turns co-rating statistics into a similarity. For PearsonBaseline the
// statistics must have been accumulated over baseline residuals.
inline double finish_similarity(const CoRatingStats& s, const SimilarityKind& kind, std::size_t min_support) {
  if (s.n == 0 || s.n < min_support) return 0.0;
  const double n = static_cast<double>(s.n);
  switch (kind.variant) {
    case Similarity::Cosine: {
      const double denom = std::sqrt(s.sxx * s.syy);
      return denom > 0.0 ? s.sxy / denom : 0.0;
    }
    case Similarity::Msd:
      return 1.0 / (s.sdd / n + 1.0);
    case Similarity::Pearson: {
      const double cov = s.sxy - s.sx * s.sy / n;
      const double vx = s.sxx - s.sx * s.sx / n;
      const double vy = s.syy - s.sy * s.sy / n;
      // Constant overlap vectors have no defined correlation.
      if (vx <= 1e-12 * std::max(1.0, s.sxx) || vy <= 1e-12 * std::max(1.0, s.syy)) return 0.0;
      return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
    }
    case Similarity::PearsonBaseline: {
      const double denom = std::sqrt(s.sxx * s.syy);
      if (!(denom > 0.0)) return 0.0;
      return std::clamp(s.sxy / denom, -1.0, 1.0) * n / (n + kind.shrinkage);
    }
  }
  return 0.0;
}

// A user's ratings as sparse cells sorted by item ordinal. `user` is needed
// only for PearsonBaseline residuals.
struct UserProfile {
  std::optional<std::uint32_t> user;
  std::span<const Cell> ratings;
};

// Similarity over co-rated items only; no overlap or too little support gives 0.
inline double similarity(const UserProfile& u, const UserProfile& v, const SimilarityKind& kind,
                         const BaselineModel* baseline, const KnnConfig& config) {
  if (kind.variant == Similarity::PearsonBaseline && baseline == nullptr) {
    throw ArgumentError("pearson_baseline similarity needs a fitted baseline");
  }
  CoRatingStats stats;
  auto a = u.ratings.begin();
  auto b = v.ratings.begin();
  while (a != u.ratings.end() && b != v.ratings.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      double x = a->value, y = b->value;
      if (kind.variant == Similarity::PearsonBaseline) {
        x -= baseline->raw(u.user, a->index);
        y -= baseline->raw(v.user, b->index);
      }
      stats.add(x, y);
      ++a;
      ++b;
    }
  }
  return finish_similarity(stats, kind, config.min_support);
}

// User-user neighbourhood model over one training set. Read-only after
// construction; all queries are safe to run concurrently.
class UserKnn {
 public:
  struct SimilarityRow {
    std::vector<double> sim;
    std::vector<std::uint32_t> support;  // co-rated item count per user
  };

  UserKnn(std::shared_ptr<const RatingsDataset> train, KnnConfig config)
      : train_(std::move(train)), config_(config) {
    config_.validate();
    if (!train_ || train_->empty()) throw ArgumentError("knn needs a non-empty training set");
    baseline_ = fit_baseline(*train_, config_.damping);
    means_.resize(train_->n_users());
    for (std::uint32_t u = 0; u < train_->n_users(); ++u) {
      const auto row = train_->user_row(u);
      double sum = 0.0;
      for (const auto& c : row) sum += c.value;
      means_[u] = row.empty() ? baseline_.mu : sum / static_cast<double>(row.size());
    }
  }

  const RatingsDataset& train() const noexcept { return *train_; }
  const KnnConfig& config() const noexcept { return config_; }
  const BaselineModel& baseline() const noexcept { return baseline_; }
  double user_mean(std::uint32_t u) const { return means_.at(u); }

  UserProfile profile(std::uint32_t u) const { return {u, train_->user_row(u)}; }

  double similarity(std::uint32_t u, std::uint32_t v) const {
    return recbench::similarity(profile(u), profile(v), config_.similarity, &baseline_, config_);
  }

  // Similarity of `target` to every user, via the item->users inverted index.
  SimilarityRow similarity_row(std::uint32_t target) const {
    std::vector<CoRatingStats> stats(train_->n_users());
    const bool residual = config_.similarity.variant == Similarity::PearsonBaseline;
    for (const auto& mine : train_->user_row(target)) {
      const double x = residual ? mine.value - baseline_.raw(target, mine.index) : mine.value;
      for (const auto& other : train_->item_column(mine.index)) {
        const double y = residual ? other.value - baseline_.raw(other.index, mine.index) : other.value;
        stats[other.index].add(x, y);
      }
    }
    SimilarityRow row;
    row.sim.resize(stats.size());
    row.support.resize(stats.size());
    for (std::size_t v = 0; v < stats.size(); ++v) {
      row.sim[v] = finish_similarity(stats[v], config_.similarity, config_.min_support);
      row.support[v] = static_cast<std::uint32_t>(stats[v].n);
    }
    return row;
  }

  // Users sharing at least one rated item with `target` and having rated at
  // least one candidate item, filtered by min_similarity and cut to k.
  NeighborSet find_neighbors(std::uint32_t target, std::span<const std::uint32_t> candidate_items) const {
    if (target >= train_->n_users()) throw NotFoundError("user ordinal not in training set");
    return select_neighbors(target, similarity_row(target), candidate_items);
  }

  NeighborSet find_neighbors_by_id(RawId user, std::span<const RawId> candidate_items) const {
    const auto u = train_->users().find(user);
    if (!u) throw NotFoundError("user " + std::to_string(user) + " not in training set");
    std::vector<std::uint32_t> items;
    for (const auto id : candidate_items) {
      if (const auto i = train_->items().find(id)) items.push_back(*i);
    }
    return find_neighbors(*u, items);
  }

  NeighborSet select_neighbors(std::uint32_t target, const SimilarityRow& row,
                               std::span<const std::uint32_t> candidate_items) const {
    std::vector<char> eligible(train_->n_users(), 0);
    for (const auto i : candidate_items) {
      for (const auto& c : train_->item_column(i)) eligible[c.index] = 1;
    }
    NeighborSet out;
    out.target = target;
    for (std::uint32_t v = 0; v < eligible.size(); ++v) {
      if (!eligible[v] || v == target || row.support[v] == 0) continue;
      if (row.sim[v] < config_.min_similarity) continue;
      out.neighbors.push_back({v, row.sim[v]});
    }
    truncate(out.neighbors);
    return out;
  }

  // Mean-centred weighted average of the neighbours' ratings of `item`,
  // shifted back by the target's mean. Falls back to the baseline when no
  // neighbour rated the item or all weights are zero.
  double score(std::uint32_t target, std::uint32_t item, const NeighborSet& neighbors) const {
    double num = 0.0, den = 0.0;
    for (const auto& nb : neighbors.neighbors) {
      const auto r = rating_of(nb.user, item);
      if (!r) continue;
      num += nb.similarity * (config_.mean_center ? *r - means_[nb.user] : *r);
      den += std::abs(nb.similarity);
    }
    const auto& scale = train_->scale();
    if (den == 0.0) return scale.clamp(baseline_.raw(target, item));
    return scale.clamp(config_.mean_center ? means_[target] + num / den : num / den);
  }

  // Most Frequent Item in the Neighbourhood: items ranked by how many
  // neighbours rated them at or above pt_threshold, unrated by the target.
  std::vector<std::uint32_t> top_n_mfin(std::uint32_t target, const NeighborSet& neighbors) const {
    std::vector<std::uint32_t> count(train_->n_items(), 0);
    for (const auto& nb : neighbors.neighbors) {
      for (const auto& c : train_->user_row(nb.user)) {
        if (c.value >= config_.pt_threshold) ++count[c.index];
      }
    }
    for (const auto& c : train_->user_row(target)) count[c.index] = 0;
    std::vector<std::uint32_t> items;
    for (std::uint32_t i = 0; i < count.size(); ++i) {
      if (count[i] > 0) items.push_back(i);
    }
    std::sort(items.begin(), items.end(), [&](std::uint32_t a, std::uint32_t b) {
      return count[a] != count[b] ? count[a] > count[b] : a < b;
    });
    if (items.size() > config_.top_n) items.resize(config_.top_n);
    return items;
  }

  // Predictions for one user over several items, sharing one similarity row.
  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const {
    std::vector<double> out;
    out.reserve(items.size());
    const auto u = train_->users().find(user);
    if (!u) {
      for (const auto id : items) out.push_back(predict_baseline(baseline_, user, id, train_->scale()));
      return out;
    }
    const auto row = similarity_row(*u);
    for (const auto id : items) {
      const auto i = train_->items().find(id);
      if (!i) {
        out.push_back(predict_baseline(baseline_, user, id, train_->scale()));
        continue;
      }
      const std::uint32_t candidate[] = {*i};
      out.push_back(score(*u, *i, select_neighbors(*u, row, candidate)));
    }
    return out;
  }

  double predict(RawId user, RawId item) const {
    const RawId items[] = {item};
    return predict_user(user, items).front();
  }

 private:
  void truncate(std::vector<Neighbor>& list) const {
    const auto better = [](const Neighbor& a, const Neighbor& b) {
      return a.similarity != b.similarity ? a.similarity > b.similarity : a.user < b.user;
    };
    if (list.size() > config_.k_neighbors) {
      std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(config_.k_neighbors),
                        list.end(), better);
      list.resize(config_.k_neighbors);
    } else {
      std::sort(list.begin(), list.end(), better);
    }
  }

  std::optional<double> rating_of(std::uint32_t user, std::uint32_t item) const {
    const auto row = train_->user_row(user);
    const auto it = std::lower_bound(row.begin(), row.end(), item,
                                     [](const Cell& c, std::uint32_t i) { return c.index < i; });
    if (it == row.end() || it->index != item) return std::nullopt;
    return it->value;
  }

  std::shared_ptr<const RatingsDataset> train_;
  KnnConfig config_;
  BaselineModel baseline_;
  std::vector<double> means_;
};

}  // namespace recbench
