#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "recbench/dataset.hpp"

namespace recbench {

// Global mean plus damped per-user and per-item offsets. Biases are indexed by
// the ordinals of the training set the model was fitted on.
struct BaselineModel {
  double mu = 0.0;
  std::vector<double> b_user;
  std::vector<double> b_item;
  double damping = 5.0;
  std::shared_ptr<const IdIndex> users;
  std::shared_ptr<const IdIndex> items;

  double user_bias(std::optional<std::uint32_t> u) const { return u ? b_user[*u] : 0.0; }
  double item_bias(std::optional<std::uint32_t> i) const { return i ? b_item[*i] : 0.0; }

  // Unclamped mu + b_u + b_i over training ordinals.
  double raw(std::optional<std::uint32_t> u, std::optional<std::uint32_t> i) const {
    return mu + user_bias(u) + item_bias(i);
  }
};

// Item biases from the global mean, then user biases from the residuals:
//   b_i = sum_u (r_ui - mu) / (damping + |R(i)|)
//   b_u = sum_i (r_ui - mu - b_i) / (damping + |R(u)|)
// The two-argument form takes mu as the training mean.
inline BaselineModel fit_baseline(const RatingsDataset& train, double damping, double mu) {
  if (train.empty()) throw ArgumentError("cannot fit a baseline on an empty dataset");
  if (!(damping >= 0.0)) throw ArgumentError("baseline damping must be non-negative");
  BaselineModel m;
  m.damping = damping;
  m.mu = mu;
  m.users = train.shared_users();
  m.items = train.shared_items();
  m.b_item.assign(train.n_items(), 0.0);
  m.b_user.assign(train.n_users(), 0.0);

  for (std::uint32_t i = 0; i < train.n_items(); ++i) {
    const auto col = train.item_column(i);
    double sum = 0.0;
    for (const auto& c : col) sum += c.value - m.mu;
    const double denom = damping + static_cast<double>(col.size());
    m.b_item[i] = denom > 0.0 ? sum / denom : 0.0;
  }
  for (std::uint32_t u = 0; u < train.n_users(); ++u) {
    const auto row = train.user_row(u);
    double sum = 0.0;
    for (const auto& c : row) sum += c.value - m.mu - m.b_item[c.index];
    const double denom = damping + static_cast<double>(row.size());
    m.b_user[u] = denom > 0.0 ? sum / denom : 0.0;
  }
  return m;
}

inline BaselineModel fit_baseline(const RatingsDataset& train, double damping = 5.0) {
  return fit_baseline(train, damping, train.global_mean());
}

// clamp(mu + b_u + b_i); entities unseen in training contribute no bias.
inline double predict_baseline(const BaselineModel& model, RawId user, RawId item, const RatingScale& scale) {
  const auto u = model.users ? model.users->find(user) : std::nullopt;
  const auto i = model.items ? model.items->find(item) : std::nullopt;
  return scale.clamp(model.raw(u, i));
}

}  // namespace recbench
