#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "recbench/baseline.hpp"
#include "recbench/dataset.hpp"
#include "recbench/linalg.hpp"
#include "recbench/random.hpp"

namespace recbench {

struct AlsConfig {
  std::size_t features = 15;
  std::size_t max_iterations = 100;
  double lambda = 0.065;
  double damping = 5.0;
  bool bias_enabled = true;
  double stop_epsilon = 1e-4;
  double probe_fraction = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (features < 1) throw ArgumentError("als: features must be >= 1");
    if (max_iterations < 1) throw ArgumentError("als: max_iterations must be >= 1");
    if (!(lambda >= 0.0)) throw ArgumentError("als: lambda must be >= 0");
    if (!(damping >= 0.0)) throw ArgumentError("als: damping must be >= 0");
    if (!(stop_epsilon > 0.0)) throw ArgumentError("als: stop_epsilon must be > 0");
    if (!(probe_fraction > 0.0 && probe_fraction < 1.0)) throw ArgumentError("als: probe_fraction must be in (0,1)");
  }
};

struct SgdConfig {
  std::size_t factors = 100;
  std::size_t epochs = 20;
  double lr = 0.005;
  double reg = 0.02;
  double init_mean = 0.0;
  double init_std = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (factors < 1) throw ArgumentError("sgd: factors must be >= 1");
    if (epochs < 1) throw ArgumentError("sgd: epochs must be >= 1");
    if (!(lr >= 0.0)) throw ArgumentError("sgd: learning rate must be >= 0");
    if (!(reg >= 0.0)) throw ArgumentError("sgd: regularisation must be >= 0");
    if (!(init_std >= 0.0)) throw ArgumentError("sgd: init_std must be >= 0");
  }
};

// Latent factor model r = mu + b_u + b_i + q_i . p_u (biases optional).
// Rows of P and Q follow the ordinals of the training index.
struct MfModel {
  double mu = 0.0;
  bool biased = true;
  std::vector<double> b_user;
  std::vector<double> b_item;
  Matrix P;  // users x f
  Matrix Q;  // items x f
  RatingScale scale;
  std::shared_ptr<const IdIndex> users;
  std::shared_ptr<const IdIndex> items;

  std::size_t factors() const noexcept { return P.cols(); }

  // Unclamped estimate over training ordinals. Unknown entities have zero
  // bias and zero factors; an unbiased model answers mu for them.
  double estimate(std::optional<std::uint32_t> u, std::optional<std::uint32_t> i) const {
    if (!biased && (!u || !i)) return mu;
    double r = 0.0;
    if (biased) {
      r = mu;
      if (u) r += b_user[*u];
      if (i) r += b_item[*i];
    }
    if (u && i) r += dot(P.row(*u), Q.row(*i));
    return r;
  }

  bool all_finite() const {
    const auto finite = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return std::isfinite(mu) && finite(b_user) && finite(b_item) && P.all_finite() && Q.all_finite();
  }
};

// SVD++: the user side adds |R(u)|^-1/2 * sum of implicit item factors y_j
// over the items the user rated in training.
struct SvdppModel {
  MfModel base;
  Matrix Y;  // items x f
  std::vector<std::size_t> implicit_offsets{0};
  std::vector<std::uint32_t> implicit_items;

  std::span<const std::uint32_t> implicit_set(std::uint32_t u) const {
    return {implicit_items.data() + implicit_offsets[u], implicit_items.data() + implicit_offsets[u + 1]};
  }

  // |R(u)|^-1/2 * sum_{j in R(u)} y_j, written into `out` (size f).
  void implicit_term(std::uint32_t u, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const auto set = implicit_set(u);
    if (set.empty()) return;
    for (const auto j : set) {
      const auto y = Y.row(j);
      for (std::size_t f = 0; f < out.size(); ++f) out[f] += y[f];
    }
    const double norm = 1.0 / std::sqrt(static_cast<double>(set.size()));
    for (auto& v : out) v *= norm;
  }

  double estimate(std::optional<std::uint32_t> u, std::optional<std::uint32_t> i) const {
    double r = base.mu;
    if (u) r += base.b_user[*u];
    if (i) r += base.b_item[*i];
    if (u && i) {
      std::vector<double> z(base.factors());
      implicit_term(*u, z);
      const auto p = base.P.row(*u);
      const auto q = base.Q.row(*i);
      for (std::size_t f = 0; f < z.size(); ++f) r += q[f] * (p[f] + z[f]);
    }
    return r;
  }
};

inline double mf_predict(const MfModel& model, RawId user, RawId item) {
  return model.scale.clamp(model.estimate(model.users->find(user), model.items->find(item)));
}

inline double mf_predict(const SvdppModel& model, RawId user, RawId item) {
  return model.base.scale.clamp(model.estimate(model.base.users->find(user), model.base.items->find(item)));
}

// ---------------------------------------------------------------------------
// Alternating least squares with weighted-lambda regularisation
//
//   f(U, M) = sum_(u,i) (t_ui - u_u . m_i)^2 + lambda (sum_u n_u |u_u|^2 + sum_i n_i |m_i|^2)
//
// where t is the rating, or its residual against a damped baseline when
// biases are enabled. Each half-step solves every row's normal equations
// exactly, so f never increases.
class AlsTrainer {
 public:
  AlsTrainer(std::shared_ptr<const RatingsDataset> fit_set, const AlsConfig& config)
      : data_(std::move(fit_set)), config_(config) {
    config_.validate();
    if (!data_ || data_->empty()) throw ArgumentError("als: empty training set");
    const auto& d = *data_;
    const std::size_t f = config_.features;

    if (config_.bias_enabled) baseline_ = fit_baseline(d, config_.damping);
    mu_ = d.global_mean();

    user_targets_.resize(d.n_ratings());
    item_targets_.resize(d.n_ratings());
    std::size_t k = 0;
    for (std::uint32_t u = 0; u < d.n_users(); ++u) {
      for (const auto& c : d.user_row(u)) user_targets_[k++] = target(u, c.index, c.value);
    }
    k = 0;
    for (std::uint32_t i = 0; i < d.n_items(); ++i) {
      for (const auto& c : d.item_column(i)) item_targets_[k++] = target(c.index, i, c.value);
    }

    U_ = Matrix(d.n_users(), f);
    M_ = Matrix(d.n_items(), f);
    Rng rng(config_.seed);
    k = 0;
    for (std::uint32_t i = 0; i < d.n_items(); ++i) {
      const auto col = d.item_column(i);
      double sum = 0.0;
      for (std::size_t c = 0; c < col.size(); ++c) sum += item_targets_[k + c];
      k += col.size();
      M_(i, 0) = sum / static_cast<double>(col.size());
      for (std::size_t j = 1; j < f; ++j) M_(i, j) = rng.normal(0.0, 0.01);
    }
  }

  // Holding M fixed, solve each user row.
  void solve_users() {
    std::size_t k = 0;
    for (std::uint32_t u = 0; u < data_->n_users(); ++u) {
      const auto row = data_->user_row(u);
      solve_row(u, row, std::span<const double>(user_targets_).subspan(k, row.size()), M_, U_);
      k += row.size();
    }
  }

  // Holding U fixed, solve each item row.
  void solve_items() {
    std::size_t k = 0;
    for (std::uint32_t i = 0; i < data_->n_items(); ++i) {
      const auto col = data_->item_column(i);
      solve_row(i, col, std::span<const double>(item_targets_).subspan(k, col.size()), U_, M_);
      k += col.size();
    }
  }

  double objective() const {
    double loss = 0.0;
    std::size_t k = 0;
    for (std::uint32_t u = 0; u < data_->n_users(); ++u) {
      for (const auto& c : data_->user_row(u)) {
        const double e = user_targets_[k++] - dot(U_.row(u), M_.row(c.index));
        loss += e * e;
      }
    }
    double penalty = 0.0;
    for (std::uint32_t u = 0; u < data_->n_users(); ++u) {
      penalty += static_cast<double>(data_->user_row(u).size()) * dot(U_.row(u), U_.row(u));
    }
    for (std::uint32_t i = 0; i < data_->n_items(); ++i) {
      penalty += static_cast<double>(data_->item_column(i).size()) * dot(M_.row(i), M_.row(i));
    }
    return loss + config_.lambda * penalty;
  }

  const Matrix& user_factors() const noexcept { return U_; }
  const Matrix& item_factors() const noexcept { return M_; }

  MfModel model() const {
    MfModel m;
    m.biased = config_.bias_enabled;
    m.mu = config_.bias_enabled ? baseline_.mu : mu_;
    if (config_.bias_enabled) {
      m.b_user = baseline_.b_user;
      m.b_item = baseline_.b_item;
    }
    m.P = U_;
    m.Q = M_;
    m.scale = data_->scale();
    m.users = data_->shared_users();
    m.items = data_->shared_items();
    return m;
  }

 private:
  double target(std::uint32_t u, std::uint32_t i, double r) const {
    return config_.bias_enabled ? r - baseline_.raw(u, i) : r;
  }

  void solve_row(std::uint32_t index, std::span<const Cell> cells, std::span<const double> targets,
                 const Matrix& fixed, Matrix& out) const {
    const std::size_t f = config_.features;
    std::vector<double> a(f * f, 0.0), b(f, 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = fixed.row(cells[c].index);
      for (std::size_t p = 0; p < f; ++p) {
        b[p] += targets[c] * v[p];
        for (std::size_t q = 0; q <= p; ++q) a[p * f + q] += v[p] * v[q];
      }
    }
    const double ridge = config_.lambda * static_cast<double>(cells.size());
    for (std::size_t p = 0; p < f; ++p) {
      a[p * f + p] += ridge;
      for (std::size_t q = 0; q < p; ++q) a[q * f + p] = a[p * f + q];
    }
    auto x = cholesky_solve(std::move(a), std::move(b), f);
    if (!x) throw SolverError(index, "system is singular (try lambda > 0)");
    std::copy(x->begin(), x->end(), out.row(index).begin());
  }

  std::shared_ptr<const RatingsDataset> data_;
  AlsConfig config_;
  BaselineModel baseline_;
  double mu_ = 0.0;
  std::vector<double> user_targets_;  // in user_row order
  std::vector<double> item_targets_;  // in item_column order
  Matrix U_;
  Matrix M_;
};

struct AlsReport {
  std::size_t iterations = 0;
  std::vector<double> probe_rmse;
};

inline double model_rmse(const MfModel& model, std::span<const Rating> ratings) {
  if (ratings.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : ratings) {
    const double e = mf_predict(model, r.user, r.item) - r.value;
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(ratings.size()));
}

// Holds out a seeded probe slice for the stopping rule, fits on the rest, and
// alternates user/item solves until the probe RMSE improves by less than
// stop_epsilon. With no probe ratings the fit-set RMSE drives the rule.
inline MfModel als_fit(const RatingsDataset& train, const AlsConfig& config, AlsReport* report = nullptr) {
  config.validate();
  if (train.empty()) throw ArgumentError("als: empty training set");
  const auto n_probe = static_cast<std::size_t>(std::floor(static_cast<double>(train.n_ratings()) * config.probe_fraction));
  auto order = shuffled_indices(train.n_ratings(), mix_seed(config.seed, 0x9e0b));
  std::vector<char> in_probe(train.n_ratings(), 0);
  for (std::size_t k = 0; k < n_probe; ++k) in_probe[order[k]] = 1;
  std::vector<Rating> fit_rows, probe_rows;
  for (std::size_t k = 0; k < train.n_ratings(); ++k) {
    (in_probe[k] ? probe_rows : fit_rows).push_back(train.ratings()[k]);
  }
  auto fit_set = std::make_shared<const RatingsDataset>(RatingsDataset::build(fit_rows, train.scale()));
  const std::span<const Rating> check = probe_rows.empty() ? std::span<const Rating>(fit_set->ratings())
                                                           : std::span<const Rating>(probe_rows);

  AlsTrainer trainer(fit_set, config);
  AlsReport local;
  double previous = 0.0;
  MfModel model;
  for (std::size_t it = 1; it <= config.max_iterations; ++it) {
    trainer.solve_users();
    trainer.solve_items();
    model = trainer.model();
    const double current = model_rmse(model, check);
    local.iterations = it;
    local.probe_rmse.push_back(current);
    if (it > 1 && previous - current < config.stop_epsilon) break;
    previous = current;
  }
  if (report) *report = std::move(local);
  return model;
}

// ---------------------------------------------------------------------------
// Funk SVD and SVD++ by stochastic gradient descent

// One SGD step on rating r for (u, i). Uses pre-update values of p_u and q_i
// in each other's updates.
inline void sgd_step(MfModel& m, std::uint32_t u, std::uint32_t i, double r, double lr, double reg) {
  auto p = m.P.row(u);
  auto q = m.Q.row(i);
  const double err = r - (m.mu + m.b_user[u] + m.b_item[i] + dot(p, q));
  m.b_user[u] += lr * (err - reg * m.b_user[u]);
  m.b_item[i] += lr * (err - reg * m.b_item[i]);
  for (std::size_t f = 0; f < p.size(); ++f) {
    const double pf = p[f];
    const double qf = q[f];
    p[f] += lr * (err * qf - reg * pf);
    q[f] += lr * (err * pf - reg * qf);
  }
}

namespace detail {

inline MfModel init_sgd_model(const RatingsDataset& train, const SgdConfig& config, Rng& rng) {
  MfModel m;
  m.biased = true;
  m.mu = train.global_mean();
  m.b_user.assign(train.n_users(), 0.0);
  m.b_item.assign(train.n_items(), 0.0);
  m.P = Matrix(train.n_users(), config.factors);
  m.Q = Matrix(train.n_items(), config.factors);
  for (auto& v : m.P.data()) v = rng.normal(config.init_mean, config.init_std);
  for (auto& v : m.Q.data()) v = rng.normal(config.init_mean, config.init_std);
  m.scale = train.scale();
  m.users = train.shared_users();
  m.items = train.shared_items();
  return m;
}

}  // namespace detail

inline MfModel sgd_fit(const RatingsDataset& train, const SgdConfig& config) {
  config.validate();
  if (train.empty()) throw ArgumentError("sgd: empty training set");
  Rng rng(config.seed);
  MfModel m = detail::init_sgd_model(train, config, rng);
  const auto entries = train.entries();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(entries.size(), mix_seed(config.seed, epoch + 1));
    for (const auto k : order) sgd_step(m, entries[k].user, entries[k].item, entries[k].value, config.lr, config.reg);
    if (!m.all_finite()) throw TrainingDiverged(static_cast<int>(epoch + 1));
  }
  return m;
}

inline SvdppModel svdpp_fit(const RatingsDataset& train, const SgdConfig& config) {
  config.validate();
  if (train.empty()) throw ArgumentError("svd++: empty training set");
  Rng rng(config.seed);
  SvdppModel s;
  s.base = detail::init_sgd_model(train, config, rng);
  s.Y = Matrix(train.n_items(), config.factors);
  for (auto& v : s.Y.data()) v = rng.normal(config.init_mean, config.init_std);
  s.implicit_offsets.assign(train.n_users() + 1, 0);
  for (std::uint32_t u = 0; u < train.n_users(); ++u) {
    for (const auto& c : train.user_row(u)) s.implicit_items.push_back(c.index);
    s.implicit_offsets[u + 1] = s.implicit_items.size();
  }

  MfModel& m = s.base;
  const std::size_t nf = config.factors;
  const double lr = config.lr, reg = config.reg;
  std::vector<double> z(nf), step(nf);
  const auto entries = train.entries();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(entries.size(), mix_seed(config.seed, epoch + 1));
    for (const auto k : order) {
      const auto [u, i, r] = entries[k];
      const auto set = s.implicit_set(u);
      const double norm = set.empty() ? 0.0 : 1.0 / std::sqrt(static_cast<double>(set.size()));
      s.implicit_term(u, z);
      auto p = m.P.row(u);
      auto q = m.Q.row(i);
      double est = m.mu + m.b_user[u] + m.b_item[i];
      for (std::size_t f = 0; f < nf; ++f) est += q[f] * (p[f] + z[f]);
      const double err = r - est;
      m.b_user[u] += lr * (err - reg * m.b_user[u]);
      m.b_item[i] += lr * (err - reg * m.b_item[i]);
      for (std::size_t f = 0; f < nf; ++f) {
        const double pf = p[f];
        const double qf = q[f];
        step[f] = err * qf * norm;
        p[f] += lr * (err * qf - reg * pf);
        q[f] += lr * (err * (pf + z[f]) - reg * qf);
      }
      for (const auto j : set) {
        auto y = s.Y.row(j);
        for (std::size_t f = 0; f < nf; ++f) y[f] += lr * (step[f] - reg * y[f]);
      }
    }
    if (!m.all_finite() || !s.Y.all_finite()) throw TrainingDiverged(static_cast<int>(epoch + 1));
  }
  return s;
}

}  // namespace recbench
