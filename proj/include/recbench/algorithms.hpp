#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "recbench/baseline.hpp"
#include "recbench/dataset.hpp"
#include "recbench/errors.hpp"
#include "recbench/factorization.hpp"
#include "recbench/neighborhood.hpp"
#include "recbench/neural.hpp"

namespace recbench {

enum class AlgorithmKind { KnnUser, MfAls, Svd, Svdpp, Rbm, Autoencoder };

inline AlgorithmKind parse_algorithm_kind(std::string_view name) {
  if (name == "knn_user") return AlgorithmKind::KnnUser;
  if (name == "mf_als") return AlgorithmKind::MfAls;
  if (name == "svd") return AlgorithmKind::Svd;
  if (name == "svdpp") return AlgorithmKind::Svdpp;
  if (name == "rbm") return AlgorithmKind::Rbm;
  if (name == "autoencoder") return AlgorithmKind::Autoencoder;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected knn_user, mf_als, svd, svdpp, rbm or autoencoder)");
}

inline std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::KnnUser: return "knn_user";
    case AlgorithmKind::MfAls: return "mf_als";
    case AlgorithmKind::Svd: return "svd";
    case AlgorithmKind::Svdpp: return "svdpp";
    case AlgorithmKind::Rbm: return "rbm";
    case AlgorithmKind::Autoencoder: return "autoencoder";
  }
  return "?";
}

// Hyperparameters in the order they were given.
using ParamList = std::vector<std::pair<std::string, std::string>>;

inline void set_param(ParamList& params, const std::string& key, const std::string& value) {
  for (auto& [k, v] : params) {
    if (k == key) {
      v = value;
      return;
    }
  }
  params.emplace_back(key, value);
}

struct AlgorithmSpec {
  AlgorithmKind kind = AlgorithmKind::KnnUser;
  ParamList params;

  std::optional<std::string> get(std::string_view key) const {
    for (const auto& [k, v] : params) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

namespace detail {

inline double param_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("parameter '" + key + "': '" + value + "' is not a number");
  return out;
}

inline std::size_t param_count(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("parameter '" + key + "': '" + value + "' is not a non-negative integer");
  }
  return out;
}

inline bool param_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("parameter '" + key + "': '" + value + "' is not a boolean");
}

[[noreturn]] inline void unknown_param(AlgorithmKind kind, const std::string& key) {
  throw ConfigError("unknown parameter '" + key + "' for " + to_string(kind));
}

// Runs a module's own validation, reporting failures as config errors.
template <typename Config>
Config validated(Config c) {
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace detail

inline KnnConfig knn_config(const AlgorithmSpec& spec) {
  KnnConfig c;
  for (const auto& [key, value] : spec.params) {
    if (key == "k") c.k_neighbors = detail::param_count(key, value);
    else if (key == "top_n") c.top_n = detail::param_count(key, value);
    else if (key == "similarity") {
      try {
        c.similarity.variant = parse_similarity(value);
      } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "shrinkage") c.similarity.shrinkage = detail::param_double(key, value);
    else if (key == "min_similarity") c.min_similarity = detail::param_double(key, value);
    else if (key == "min_support") c.min_support = detail::param_count(key, value);
    else if (key == "pt_threshold") c.pt_threshold = detail::param_double(key, value);
    else if (key == "damping") c.damping = detail::param_double(key, value);
    else if (key == "normalization") {
      if (value == "mean_center") c.mean_center = true;
      else if (value == "none") c.mean_center = false;
      else throw ConfigError("parameter 'normalization': expected mean_center or none, got '" + value + "'");
    } else detail::unknown_param(spec.kind, key);
  }
  return detail::validated(c);
}

// "similarity" is accepted and ignored: it has no meaning for factorization.
inline AlsConfig als_config(const AlgorithmSpec& spec, std::uint64_t seed) {
  AlsConfig c;
  c.seed = seed;
  for (const auto& [key, value] : spec.params) {
    if (key == "factors") c.features = detail::param_count(key, value);
    else if (key == "iterations") c.max_iterations = detail::param_count(key, value);
    else if (key == "lambda") c.lambda = detail::param_double(key, value);
    else if (key == "damping") c.damping = detail::param_double(key, value);
    else if (key == "bias") c.bias_enabled = detail::param_bool(key, value);
    else if (key == "stop_epsilon") c.stop_epsilon = detail::param_double(key, value);
    else if (key == "probe_fraction") c.probe_fraction = detail::param_double(key, value);
    else if (key == "similarity") continue;
    else detail::unknown_param(spec.kind, key);
  }
  return detail::validated(c);
}

inline SgdConfig sgd_config(const AlgorithmSpec& spec, std::uint64_t seed) {
  SgdConfig c;
  c.seed = seed;
  for (const auto& [key, value] : spec.params) {
    if (key == "factors") c.factors = detail::param_count(key, value);
    else if (key == "epochs") c.epochs = detail::param_count(key, value);
    else if (key == "lr") c.lr = detail::param_double(key, value);
    else if (key == "reg") c.reg = detail::param_double(key, value);
    else if (key == "init_mean") c.init_mean = detail::param_double(key, value);
    else if (key == "init_std") c.init_std = detail::param_double(key, value);
    else detail::unknown_param(spec.kind, key);
  }
  return detail::validated(c);
}

inline RbmConfig rbm_config(const AlgorithmSpec& spec, std::uint64_t seed) {
  RbmConfig c;
  c.seed = seed;
  for (const auto& [key, value] : spec.params) {
    if (key == "hidden") c.hidden = detail::param_count(key, value);
    else if (key == "epochs") c.epochs = detail::param_count(key, value);
    else if (key == "lr") c.lr = detail::param_double(key, value);
    else if (key == "batch_size") c.batch_size = detail::param_count(key, value);
    else if (key == "early_stop_patience") c.early_stop_patience = detail::param_count(key, value);
    else if (key == "probe_fraction") c.probe_fraction = detail::param_double(key, value);
    else detail::unknown_param(spec.kind, key);
  }
  return detail::validated(c);
}

inline AeConfig ae_config(const AlgorithmSpec& spec, std::uint64_t seed) {
  AeConfig c;
  c.seed = seed;
  for (const auto& [key, value] : spec.params) {
    if (key == "hidden") c.hidden = detail::param_count(key, value);
    else if (key == "epochs") c.epochs = detail::param_count(key, value);
    else if (key == "lr") c.lr = detail::param_double(key, value);
    else if (key == "batch_size") c.batch_size = detail::param_count(key, value);
    else if (key == "l2") c.l2 = detail::param_double(key, value);
    else if (key == "early_stop_patience") c.early_stop_patience = detail::param_count(key, value);
    else if (key == "probe_fraction") c.probe_fraction = detail::param_double(key, value);
    else detail::unknown_param(spec.kind, key);
  }
  return detail::validated(c);
}

// Throws ConfigError when the parameters do not fit the algorithm.
inline void validate(const AlgorithmSpec& spec) {
  switch (spec.kind) {
    case AlgorithmKind::KnnUser: knn_config(spec); break;
    case AlgorithmKind::MfAls: als_config(spec, 0); break;
    case AlgorithmKind::Svd:
    case AlgorithmKind::Svdpp: sgd_config(spec, 0); break;
    case AlgorithmKind::Rbm: rbm_config(spec, 0); break;
    case AlgorithmKind::Autoencoder: ae_config(spec, 0); break;
  }
}

// ---------------------------------------------------------------------------

// A fitted model behind a uniform prediction interface. Users and items absent
// from the training set take the model's cold-start path.
class Recommender {
 public:
  virtual ~Recommender() = default;

  void fit(std::shared_ptr<const RatingsDataset> train) {
    if (!train || train->empty()) throw ArgumentError("cannot fit on an empty training set");
    train_ = std::move(train);
    do_fit();
  }

  virtual std::vector<double> predict_user(RawId user, std::span<const RawId> items) const = 0;

  // The n highest-scored training items the user has not rated; ties go to
  // the lower raw id.
  virtual std::vector<RawId> recommend(RawId user, std::size_t n) const {
    std::vector<RawId> candidates;
    const auto u = train_->users().find(user);
    std::vector<char> seen(train_->n_items(), 0);
    if (u) {
      for (const auto& c : train_->user_row(*u)) seen[c.index] = 1;
    }
    for (std::uint32_t i = 0; i < train_->n_items(); ++i) {
      if (!seen[i]) candidates.push_back(train_->items().id(i));
    }
    const auto scores = predict_user(user, candidates);
    std::vector<std::size_t> order(candidates.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    const std::size_t depth = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(depth), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return scores[a] != scores[b] ? scores[a] > scores[b] : candidates[a] < candidates[b];
                      });
    std::vector<RawId> out;
    for (std::size_t k = 0; k < depth; ++k) out.push_back(candidates[order[k]]);
    return out;
  }

 protected:
  virtual void do_fit() = 0;
  const RatingsDataset& train() const { return *train_; }
  std::shared_ptr<const RatingsDataset> train_;
};

class KnnRecommender final : public Recommender {
 public:
  explicit KnnRecommender(KnnConfig config) : config_(config) {}

  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    return knn_->predict_user(user, items);
  }

  // Most frequent positively rated items among the user's k neighbours.
  std::vector<RawId> recommend(RawId user, std::size_t n) const override {
    const auto u = train().users().find(user);
    if (!u) return {};
    std::vector<std::uint32_t> all(train().n_items());
    for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
    auto items = knn_->top_n_mfin(*u, knn_->find_neighbors(*u, all));
    if (items.size() > n) items.resize(n);
    std::vector<RawId> out;
    for (const auto i : items) out.push_back(train().items().id(i));
    return out;
  }

 private:
  void do_fit() override { knn_ = std::make_unique<UserKnn>(train_, config_); }

  KnnConfig config_;
  std::unique_ptr<UserKnn> knn_;
};

class AlsRecommender final : public Recommender {
 public:
  explicit AlsRecommender(AlsConfig config) : config_(config) {}

  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    std::vector<double> out;
    for (const auto i : items) out.push_back(mf_predict(model_, user, i));
    return out;
  }

  const MfModel& model() const { return model_; }

 private:
  void do_fit() override { model_ = als_fit(train(), config_); }

  AlsConfig config_;
  MfModel model_;
};

class SvdRecommender final : public Recommender {
 public:
  explicit SvdRecommender(SgdConfig config) : config_(config) {}

  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    std::vector<double> out;
    for (const auto i : items) out.push_back(mf_predict(model_, user, i));
    return out;
  }

 private:
  void do_fit() override { model_ = sgd_fit(train(), config_); }

  SgdConfig config_;
  MfModel model_;
};

class SvdppRecommender final : public Recommender {
 public:
  explicit SvdppRecommender(SgdConfig config) : config_(config) {}

  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    const auto& base = model_.base;
    const auto u = base.users->find(user);
    std::vector<double> z(base.factors(), 0.0);
    if (u) model_.implicit_term(*u, z);
    std::vector<double> out;
    for (const auto id : items) {
      const auto i = base.items->find(id);
      double r = base.mu;
      if (u) r += base.b_user[*u];
      if (i) r += base.b_item[*i];
      if (u && i) {
        const auto p = base.P.row(*u);
        const auto q = base.Q.row(*i);
        for (std::size_t f = 0; f < z.size(); ++f) r += q[f] * (p[f] + z[f]);
      }
      out.push_back(base.scale.clamp(r));
    }
    return out;
  }

 private:
  void do_fit() override { model_ = svdpp_fit(train(), config_); }

  SgdConfig config_;
  SvdppModel model_;
};

class RbmRecommender final : public Recommender {
 public:
  explicit RbmRecommender(RbmConfig config) : config_(config) {}

  // Same computation as rbm_predict with the hidden layer shared across items.
  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    const auto h = model_.hidden_probs(user_vector(user));
    std::vector<double> out;
    for (const auto id : items) {
      const auto i = train().items().find(id);
      out.push_back(i ? model_.scale.clamp(detail::expected_level(model_.visible_probs(*i, h), model_.scale))
                      : model_.scale.clamp(model_.fallback));
    }
    return out;
  }

 private:
  void do_fit() override {
    model_ = rbm_fit(train(), config_);
    users_ = one_hot_users(train());
  }

  const OneHotUserVector& user_vector(RawId user) const {
    static const OneHotUserVector empty;
    const auto u = train().users().find(user);
    return u ? users_[*u] : empty;
  }

  RbmConfig config_;
  RbmModel model_;
  std::vector<OneHotUserVector> users_;
};

class AutoencoderRecommender final : public Recommender {
 public:
  explicit AutoencoderRecommender(AeConfig config) : config_(config) {}

  std::vector<double> predict_user(RawId user, std::span<const RawId> items) const override {
    static const OneHotUserVector empty;
    const auto u = train().users().find(user);
    const auto h = model_.encode(u ? users_[*u] : empty);
    std::vector<double> out;
    for (const auto id : items) {
      const auto i = train().items().find(id);
      if (!i) {
        out.push_back(model_.scale.clamp(model_.fallback));
        continue;
      }
      auto block = model_.decode(*i, h);
      detail::softmax(block);
      out.push_back(model_.scale.clamp(detail::expected_level(block, model_.scale)));
    }
    return out;
  }

 private:
  void do_fit() override {
    model_ = ae_fit(train(), config_);
    users_ = one_hot_users(train());
  }

  AeConfig config_;
  AutoRecModel model_;
  std::vector<OneHotUserVector> users_;
};

// Builds an unfitted recommender; `seed` drives every random choice it makes.
inline std::unique_ptr<Recommender> make_recommender(const AlgorithmSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case AlgorithmKind::KnnUser: return std::make_unique<KnnRecommender>(knn_config(spec));
    case AlgorithmKind::MfAls: return std::make_unique<AlsRecommender>(als_config(spec, seed));
    case AlgorithmKind::Svd: return std::make_unique<SvdRecommender>(sgd_config(spec, seed));
    case AlgorithmKind::Svdpp: return std::make_unique<SvdppRecommender>(sgd_config(spec, seed));
    case AlgorithmKind::Rbm: return std::make_unique<RbmRecommender>(rbm_config(spec, seed));
    case AlgorithmKind::Autoencoder: return std::make_unique<AutoencoderRecommender>(ae_config(spec, seed));
  }
  throw ConfigError("unsupported algorithm");
}

}  // namespace recbench
