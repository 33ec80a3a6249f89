#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "recbench/dataset.hpp"
#include "recbench/linalg.hpp"
#include "recbench/random.hpp"

namespace recbench {

// A user's ratings as K-level one-hot blocks. Each observed item carries the
// index of its single hot level; unrated items have no block.
struct OneHotUserVector {
  std::optional<std::uint32_t> user;
  std::vector<std::pair<std::uint32_t, int>> blocks;  // (item ordinal, level)
};

inline OneHotUserVector one_hot_user(const RatingsDataset& data, std::uint32_t user) {
  OneHotUserVector v;
  v.user = user;
  for (const auto& c : data.user_row(user)) v.blocks.emplace_back(c.index, *data.scale().level_of(c.value));
  return v;
}

inline std::vector<OneHotUserVector> one_hot_users(const RatingsDataset& data) {
  std::vector<OneHotUserVector> out;
  out.reserve(data.n_users());
  for (std::uint32_t u = 0; u < data.n_users(); ++u) out.push_back(one_hot_user(data, u));
  return out;
}

namespace detail {

inline double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

// In-place softmax over a block of logits.
inline void softmax(std::span<double> v) noexcept {
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - top);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

inline double expected_level(std::span<const double> probs, const RatingScale& scale) noexcept {
  double e = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) e += probs[k] * scale.value_of(static_cast<int>(k));
  return e;
}

inline bool finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

// Held-out slice of each user's ratings used for the optional early stop.
struct ProbeSplit {
  std::vector<OneHotUserVector> inputs;
  std::vector<OneHotUserVector> probe;
};

inline ProbeSplit split_probe(const std::vector<OneHotUserVector>& users, double fraction, std::uint64_t seed) {
  ProbeSplit s;
  Rng rng(seed);
  for (const auto& u : users) {
    OneHotUserVector in{u.user, {}}, pr{u.user, {}};
    for (const auto& b : u.blocks) (rng.uniform() < fraction ? pr : in).blocks.push_back(b);
    s.inputs.push_back(std::move(in));
    s.probe.push_back(std::move(pr));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Restricted Boltzmann machine with softmax visible units

struct RbmConfig {
  std::size_t hidden = 50;
  std::size_t epochs = 20;
  double lr = 0.001;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 0;  // 0 disables the probe-based stop
  double probe_fraction = 0.05;

  void validate() const {
    if (hidden < 1 || epochs < 1 || batch_size < 1) throw ArgumentError("rbm: hidden, epochs and batch_size must be positive");
    if (!(lr > 0.0)) throw ArgumentError("rbm: learning rate must be positive");
    if (!(probe_fraction > 0.0 && probe_fraction < 1.0)) throw ArgumentError("rbm: probe_fraction must be in (0,1)");
  }
};

// Weights are shared by every user's RBM: W[(item, level), hidden].
struct RbmModel {
  std::size_t n_items = 0;
  int levels = 0;            // K
  std::size_t hidden = 0;    // F
  std::vector<double> W;     // n_items * K * F
  std::vector<double> vb;    // n_items * K
  std::vector<double> hb;    // F
  RatingScale scale;
  double fallback = 0.0;     // answer for items unseen in training
  std::shared_ptr<const IdIndex> users;
  std::shared_ptr<const IdIndex> items;

  std::size_t unit(std::uint32_t item, int level) const noexcept {
    return static_cast<std::size_t>(item) * static_cast<std::size_t>(levels) + static_cast<std::size_t>(level);
  }
  std::span<const double> weights(std::uint32_t item, int level) const noexcept {
    return {W.data() + unit(item, level) * hidden, hidden};
  }
  std::span<double> weights(std::uint32_t item, int level) noexcept {
    return {W.data() + unit(item, level) * hidden, hidden};
  }

  // P(h_j = 1 | observed blocks).
  std::vector<double> hidden_probs(const OneHotUserVector& v) const {
    std::vector<double> h(hb);
    for (const auto& [item, level] : v.blocks) {
      const auto w = weights(item, level);
      for (std::size_t j = 0; j < hidden; ++j) h[j] += w[j];
    }
    for (auto& x : h) x = detail::sigmoid(x);
    return h;
  }

  // Softmax over the item's K levels given hidden activations.
  std::vector<double> visible_probs(std::uint32_t item, std::span<const double> h) const {
    std::vector<double> p(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) p[static_cast<std::size_t>(k)] = vb[unit(item, k)] + dot(weights(item, k), h);
    detail::softmax(p);
    return p;
  }

  bool all_finite() const { return detail::finite(W) && detail::finite(vb) && detail::finite(hb); }
};

// Expected rating under the reconstructed softmax, using probabilities rather
// than samples throughout.
inline double rbm_predict(const RbmModel& model, const OneHotUserVector& user, std::optional<std::uint32_t> item) {
  if (!item) return model.scale.clamp(model.fallback);
  const auto h = model.hidden_probs(user);
  return model.scale.clamp(detail::expected_level(model.visible_probs(*item, h), model.scale));
}

// RMSE of deterministic reconstructions of each user's own observed ratings.
inline double rbm_reconstruction_rmse(const RbmModel& model, std::span<const OneHotUserVector> users) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : users) {
    if (u.blocks.empty()) continue;
    const auto h = model.hidden_probs(u);
    for (const auto& [item, level] : u.blocks) {
      const double e = detail::expected_level(model.visible_probs(item, h), model.scale) - model.scale.value_of(level);
      sum += e * e;
      ++n;
    }
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

// Held-out RMSE: probe blocks predicted from the input blocks of the same user.
template <typename Predict>
double probe_rmse(std::span<const OneHotUserVector> inputs, std::span<const OneHotUserVector> probe,
                  const RatingScale& scale, Predict predict) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < probe.size(); ++u) {
    for (const auto& [item, level] : probe[u].blocks) {
      const double e = predict(inputs[u], item) - scale.value_of(level);
      sum += e * e;
      ++n;
    }
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

struct TrainingReport {
  std::size_t epochs_run = 0;
  std::vector<double> reconstruction_rmse;  // per epoch, on training inputs
  std::vector<double> probe_rmse;           // per epoch when early stopping is on
};

namespace detail {

// Per-parameter gradient accumulator that remembers which visible units it
// touched, so applying and clearing costs O(touched).
class RbmGradient {
 public:
  explicit RbmGradient(const RbmModel& m)
      : dW(m.W.size(), 0.0), dvb(m.vb.size(), 0.0), dhb(m.hb.size(), 0.0), seen(m.vb.size(), 0) {}

  void touch(std::size_t unit) {
    if (!seen[unit]) {
      seen[unit] = 1;
      touched.push_back(unit);
    }
  }

  void apply(RbmModel& m, double scale) {
    const std::size_t F = m.hidden;
    for (const auto unit : touched) {
      for (std::size_t j = 0; j < F; ++j) {
        m.W[unit * F + j] += scale * dW[unit * F + j];
        dW[unit * F + j] = 0.0;
      }
      m.vb[unit] += scale * dvb[unit];
      dvb[unit] = 0.0;
      seen[unit] = 0;
    }
    touched.clear();
    for (std::size_t j = 0; j < F; ++j) {
      m.hb[j] += scale * dhb[j];
      dhb[j] = 0.0;
    }
  }

  std::vector<double> dW, dvb, dhb;

 private:
  std::vector<char> seen;
  std::vector<std::size_t> touched;
};

// CD-1 statistics for one user added into `g`.
inline void rbm_accumulate(const RbmModel& m, const OneHotUserVector& v, Rng& rng, RbmGradient& g) {
  const std::size_t F = m.hidden;
  const auto K = static_cast<std::size_t>(m.levels);
  const auto h0 = m.hidden_probs(v);
  std::vector<double> hs(F);
  for (std::size_t j = 0; j < F; ++j) hs[j] = rng.uniform() < h0[j] ? 1.0 : 0.0;

  // Negative phase: softmax reconstructions of the observed items only.
  std::vector<double> recon(v.blocks.size() * K);
  std::vector<double> h1(m.hb);
  for (std::size_t b = 0; b < v.blocks.size(); ++b) {
    const auto item = v.blocks[b].first;
    const auto p = m.visible_probs(item, hs);
    std::copy(p.begin(), p.end(), recon.begin() + static_cast<std::ptrdiff_t>(b * K));
    for (std::size_t k = 0; k < K; ++k) {
      const auto w = m.weights(item, static_cast<int>(k));
      for (std::size_t j = 0; j < F; ++j) h1[j] += p[k] * w[j];
    }
  }
  for (auto& x : h1) x = sigmoid(x);

  for (std::size_t b = 0; b < v.blocks.size(); ++b) {
    const auto [item, level] = v.blocks[b];
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t unit = m.unit(item, static_cast<int>(k));
      const double pos = static_cast<int>(k) == level ? 1.0 : 0.0;
      const double neg = recon[b * K + k];
      g.touch(unit);
      double* dw = g.dW.data() + unit * F;
      for (std::size_t j = 0; j < F; ++j) dw[j] += pos * h0[j] - neg * h1[j];
      g.dvb[unit] += pos - neg;
    }
  }
  for (std::size_t j = 0; j < F; ++j) g.dhb[j] += h0[j] - h1[j];
}

}  // namespace detail

inline RbmModel rbm_init(const RatingsDataset& train, const RbmConfig& config) {
  RbmModel m;
  m.n_items = train.n_items();
  m.levels = train.scale().levels();
  m.hidden = config.hidden;
  m.scale = train.scale();
  m.fallback = train.global_mean();
  m.users = train.shared_users();
  m.items = train.shared_items();
  m.W.resize(m.n_items * static_cast<std::size_t>(m.levels) * m.hidden);
  Rng rng(config.seed);
  for (auto& w : m.W) w = rng.normal(0.0, 0.01);
  m.vb.assign(m.n_items * static_cast<std::size_t>(m.levels), 0.0);
  m.hb.assign(m.hidden, 0.0);
  return m;
}

// Contrastive divergence (one Gibbs step) over minibatches of users. Only
// parameters attached to items observed in a minibatch change in its update.
inline RbmModel rbm_fit(const RatingsDataset& train, const RbmConfig& config, TrainingReport* report = nullptr) {
  config.validate();
  if (train.empty()) throw ArgumentError("rbm: empty training set");
  RbmModel m = rbm_init(train, config);
  const auto all_users = one_hot_users(train);
  const bool early = config.early_stop_patience > 0;
  ProbeSplit split;
  if (early) split = split_probe(all_users, config.probe_fraction, mix_seed(config.seed, 0x9e0b));
  const auto& inputs = early ? split.inputs : all_users;

  detail::RbmGradient grad(m);
  Rng sampler(mix_seed(config.seed, 0x5a3b));
  TrainingReport local;
  RbmModel best;
  double best_probe = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(inputs.size(), mix_seed(config.seed, epoch + 1));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      for (std::size_t k = start; k < stop; ++k) detail::rbm_accumulate(m, inputs[order[k]], sampler, grad);
      grad.apply(m, config.lr / static_cast<double>(stop - start));
    }
    if (!m.all_finite()) throw TrainingDiverged(static_cast<int>(epoch + 1));
    local.epochs_run = epoch + 1;
    local.reconstruction_rmse.push_back(rbm_reconstruction_rmse(m, inputs));
    if (early) {
      const double p = probe_rmse(split.inputs, split.probe, m.scale, [&](const OneHotUserVector& u, std::uint32_t i) {
        return rbm_predict(m, u, i);
      });
      local.probe_rmse.push_back(p);
      if (p < best_probe) {
        best_probe = p;
        best = m;
        stale = 0;
      } else if (++stale >= config.early_stop_patience) {
        m = best;
        break;
      }
    }
  }
  if (report) *report = std::move(local);
  return m;
}

// ---------------------------------------------------------------------------
// One-hot autoencoder  h(r) = f(W g(V r + mu_h) + b_v),  g = sigmoid, f = identity

struct AeConfig {
  std::size_t hidden = 100;
  std::size_t epochs = 200;
  double lr = 0.1;
  std::size_t batch_size = 200;
  double l2 = 0.0;
  std::uint64_t seed = 0;
  std::size_t early_stop_patience = 0;
  double probe_fraction = 0.05;

  void validate() const {
    if (hidden < 1 || epochs < 1 || batch_size < 1) throw ArgumentError("autoencoder: hidden, epochs and batch_size must be positive");
    if (!(lr >= 0.0)) throw ArgumentError("autoencoder: learning rate must be >= 0");
    if (!(l2 >= 0.0)) throw ArgumentError("autoencoder: l2 must be >= 0");
    if (!(probe_fraction > 0.0 && probe_fraction < 1.0)) throw ArgumentError("autoencoder: probe_fraction must be in (0,1)");
  }
};

// Visible dimension D = n_items * K. V is stored transposed (D x F) so the
// encoder column of a visible unit is a contiguous row.
struct AutoRecModel {
  std::size_t n_items = 0;
  int levels = 0;
  std::size_t hidden = 0;
  Matrix V;                  // D x F (encoder, transposed)
  Matrix W;                  // D x F (decoder)
  std::vector<double> mu_h;  // F
  std::vector<double> b_v;   // D
  RatingScale scale;
  double fallback = 0.0;
  std::shared_ptr<const IdIndex> users;
  std::shared_ptr<const IdIndex> items;

  std::size_t visible() const noexcept { return n_items * static_cast<std::size_t>(levels); }
  std::size_t unit(std::uint32_t item, int level) const noexcept {
    return static_cast<std::size_t>(item) * static_cast<std::size_t>(levels) + static_cast<std::size_t>(level);
  }

  std::vector<double> encode(const OneHotUserVector& v) const {
    std::vector<double> h(mu_h);
    for (const auto& [item, level] : v.blocks) {
      const auto col = V.row(unit(item, level));
      for (std::size_t j = 0; j < hidden; ++j) h[j] += col[j];
    }
    for (auto& x : h) x = detail::sigmoid(x);
    return h;
  }

  // Raw decoder outputs for one item's K visible units.
  std::vector<double> decode(std::uint32_t item, std::span<const double> h) const {
    std::vector<double> out(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) {
      const std::size_t u = unit(item, k);
      out[static_cast<std::size_t>(k)] = b_v[u] + dot(W.row(u), h);
    }
    return out;
  }

  bool all_finite() const { return V.all_finite() && W.all_finite() && detail::finite(mu_h) && detail::finite(b_v); }
};

struct AeGradient {
  Matrix V, W;
  std::vector<double> mu_h, b_v;
};

inline AutoRecModel ae_init(std::size_t n_items, int levels, std::size_t hidden, std::uint64_t seed) {
  AutoRecModel m;
  m.n_items = n_items;
  m.levels = levels;
  m.hidden = hidden;
  m.V = Matrix(m.visible(), hidden);
  m.W = Matrix(m.visible(), hidden);
  Rng rng(seed);
  for (auto& x : m.V.data()) x = rng.normal(0.0, 0.01);
  for (auto& x : m.W.data()) x = rng.normal(0.0, 0.01);
  m.mu_h.assign(hidden, 0.0);
  m.b_v.assign(m.visible(), 0.0);
  return m;
}

// Mean over users of the squared reconstruction error on observed blocks,
// plus (l2/2)(|W|^2 + |V|^2).
inline double ae_loss(const AutoRecModel& m, std::span<const OneHotUserVector> batch, double l2) {
  double loss = 0.0;
  for (const auto& u : batch) {
    const auto h = m.encode(u);
    for (const auto& [item, level] : u.blocks) {
      const auto out = m.decode(item, h);
      for (int k = 0; k < m.levels; ++k) {
        const double e = out[static_cast<std::size_t>(k)] - (k == level ? 1.0 : 0.0);
        loss += e * e;
      }
    }
  }
  loss /= static_cast<double>(std::max<std::size_t>(1, batch.size()));
  if (l2 > 0.0) loss += 0.5 * l2 * (m.W.squared_norm() + m.V.squared_norm());
  return loss;
}

namespace detail {

// Backpropagates one user's loss into `g` (unscaled by batch size).
inline void ae_backprop(const AutoRecModel& m, const OneHotUserVector& u, AeGradient& g) {
  const std::size_t F = m.hidden;
  const auto h = m.encode(u);
  std::vector<double> dh(F, 0.0);
  for (const auto& [item, level] : u.blocks) {
    for (int k = 0; k < m.levels; ++k) {
      const std::size_t vis = m.unit(item, k);
      const auto w = m.W.row(vis);
      const double out = m.b_v[vis] + dot(w, h);
      const double d = 2.0 * (out - (k == level ? 1.0 : 0.0));
      g.b_v[vis] += d;
      auto gw = g.W.row(vis);
      for (std::size_t j = 0; j < F; ++j) {
        gw[j] += d * h[j];
        dh[j] += d * w[j];
      }
    }
  }
  for (std::size_t j = 0; j < F; ++j) dh[j] *= h[j] * (1.0 - h[j]);
  for (std::size_t j = 0; j < F; ++j) g.mu_h[j] += dh[j];
  for (const auto& [item, level] : u.blocks) {
    auto gv = g.V.row(m.unit(item, level));
    for (std::size_t j = 0; j < F; ++j) gv[j] += dh[j];
  }
}

}  // namespace detail

// Exact gradient of ae_loss.
inline AeGradient ae_gradient(const AutoRecModel& m, std::span<const OneHotUserVector> batch, double l2) {
  AeGradient g{Matrix(m.visible(), m.hidden), Matrix(m.visible(), m.hidden), std::vector<double>(m.hidden, 0.0),
               std::vector<double>(m.visible(), 0.0)};
  for (const auto& u : batch) detail::ae_backprop(m, u, g);
  const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, batch.size()));
  for (auto& x : g.V.data()) x *= inv;
  for (auto& x : g.W.data()) x *= inv;
  for (auto& x : g.mu_h) x *= inv;
  for (auto& x : g.b_v) x *= inv;
  if (l2 > 0.0) {
    for (std::size_t k = 0; k < g.W.data().size(); ++k) g.W.data()[k] += l2 * m.W.data()[k];
    for (std::size_t k = 0; k < g.V.data().size(); ++k) g.V.data()[k] += l2 * m.V.data()[k];
  }
  return g;
}

// Softmax of the item's reconstructed block, then the expected level.
inline double ae_predict(const AutoRecModel& model, const OneHotUserVector& user, std::optional<std::uint32_t> item) {
  if (!item) return model.scale.clamp(model.fallback);
  const auto h = model.encode(user);
  auto out = model.decode(*item, h);
  detail::softmax(out);
  return model.scale.clamp(detail::expected_level(out, model.scale));
}

inline double ae_reconstruction_rmse(const AutoRecModel& m, std::span<const OneHotUserVector> users) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& u : users) {
    for (const auto& [item, level] : u.blocks) {
      const double e = ae_predict(m, u, item) - m.scale.value_of(level);
      sum += e * e;
      ++n;
    }
  }
  return n ? std::sqrt(sum / static_cast<double>(n)) : 0.0;
}

// Minibatch gradient descent on ae_loss with exact backpropagation.
inline AutoRecModel ae_fit(const RatingsDataset& train, const AeConfig& config, TrainingReport* report = nullptr) {
  config.validate();
  if (train.empty()) throw ArgumentError("autoencoder: empty training set");
  AutoRecModel m = ae_init(train.n_items(), train.scale().levels(), config.hidden, config.seed);
  m.scale = train.scale();
  m.fallback = train.global_mean();
  m.users = train.shared_users();
  m.items = train.shared_items();
  if (config.lr == 0.0) return m;

  const auto all_users = one_hot_users(train);
  const bool early = config.early_stop_patience > 0;
  ProbeSplit split;
  if (early) split = split_probe(all_users, config.probe_fraction, mix_seed(config.seed, 0x9e0b));
  const auto& inputs = early ? split.inputs : all_users;

  const std::size_t F = m.hidden;
  AeGradient g{Matrix(m.visible(), F), Matrix(m.visible(), F), std::vector<double>(F, 0.0),
               std::vector<double>(m.visible(), 0.0)};
  std::vector<char> seen(m.visible(), 0);
  std::vector<std::size_t> touched_out, touched_in;
  TrainingReport local;
  AutoRecModel best;
  double best_probe = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(inputs.size(), mix_seed(config.seed, epoch + 1));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      touched_out.clear();
      touched_in.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const auto& u = inputs[order[k]];
        for (const auto& [item, level] : u.blocks) {
          for (int lv = 0; lv < m.levels; ++lv) {
            const std::size_t vis = m.unit(item, lv);
            if (!(seen[vis] & 1)) {
              seen[vis] |= 1;
              touched_out.push_back(vis);
            }
          }
          const std::size_t vin = m.unit(item, level);
          if (!(seen[vin] & 2)) {
            seen[vin] |= 2;
            touched_in.push_back(vin);
          }
        }
        detail::ae_backprop(m, u, g);
      }
      const double step = config.lr / static_cast<double>(stop - start);
      for (const auto vis : touched_out) {
        auto w = m.W.row(vis);
        auto gw = g.W.row(vis);
        for (std::size_t j = 0; j < F; ++j) {
          w[j] -= step * gw[j];
          gw[j] = 0.0;
        }
        m.b_v[vis] -= step * g.b_v[vis];
        g.b_v[vis] = 0.0;
        seen[vis] &= ~1;
      }
      for (const auto vin : touched_in) {
        auto v = m.V.row(vin);
        auto gv = g.V.row(vin);
        for (std::size_t j = 0; j < F; ++j) {
          v[j] -= step * gv[j];
          gv[j] = 0.0;
        }
        seen[vin] &= ~2;
      }
      for (std::size_t j = 0; j < F; ++j) {
        m.mu_h[j] -= step * g.mu_h[j];
        g.mu_h[j] = 0.0;
      }
      if (config.l2 > 0.0) {
        const double decay = 1.0 - config.lr * config.l2;
        for (auto& x : m.W.data()) x *= decay;
        for (auto& x : m.V.data()) x *= decay;
      }
    }
    if (!m.all_finite()) throw TrainingDiverged(static_cast<int>(epoch + 1));
    local.epochs_run = epoch + 1;
    if (early) {
      const double p = probe_rmse(split.inputs, split.probe, m.scale, [&](const OneHotUserVector& u, std::uint32_t i) {
        return ae_predict(m, u, i);
      });
      local.probe_rmse.push_back(p);
      if (p < best_probe) {
        best_probe = p;
        best = m;
        stale = 0;
      } else if (++stale >= config.early_stop_patience) {
        m = best;
        break;
      }
    }
  }
  if (report) *report = std::move(local);
  return m;
}

}  // namespace recbench
