#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "recbench/algorithms.hpp"
#include "recbench/dataset.hpp"
#include "recbench/errors.hpp"
#include "recbench/metrics.hpp"
#include "recbench/random.hpp"

namespace recbench {

enum class ResultFormat { Csv, Json };

inline ResultFormat parse_result_format(std::string_view name) {
  if (name == "csv") return ResultFormat::Csv;
  if (name == "json") return ResultFormat::Json;
  throw ConfigError("unknown result format '" + std::string(name) + "' (expected csv or json)");
}

// Format inferred from a path's extension; csv unless it ends in ".json".
inline ResultFormat result_format_for(std::string_view path) {
  return path.ends_with(".json") ? ResultFormat::Json : ResultFormat::Csv;
}

inline const std::set<std::string, std::less<>>& known_metrics() {
  static const std::set<std::string, std::less<>> names{"rmse", "mae", "precision", "recall", "ndcg", "auc"};
  return names;
}

struct DatasetSpec {
  std::string path;
  FileFormat format = FileFormat::Ml100kTab;
  std::optional<RatingScale> scale;  // default depends on the format
  std::optional<std::size_t> subsample;
  std::uint64_t subsample_seed = 0;

  RatingScale resolved_scale() const {
    if (scale) return *scale;
    return format == FileFormat::MlCsv ? RatingScale{} : RatingScale::whole_stars();
  }
};

struct FoldSpec {
  std::size_t k = 5;
  FoldMode mode = FoldMode::RowBased;
  std::uint64_t seed = 42;
};

struct EvaluationSpec {
  std::vector<std::string> metrics{"rmse", "mae"};
  double relevance_threshold = 4.0;
  std::size_t top_n = 10;

  bool wants(std::string_view metric) const {
    return std::find(metrics.begin(), metrics.end(), metric) != metrics.end();
  }
  bool wants_ranking() const { return wants("precision") || wants("recall") || wants("ndcg"); }
};

struct OutputSpec {
  std::string path;
  std::optional<ResultFormat> format;  // inferred from the path when unset
  bool include_timing = true;
};

struct GridSpec {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  std::string objective = "rmse";

  std::size_t combinations() const {
    std::size_t n = axes.empty() ? 0 : 1;
    for (const auto& axis : axes) n *= axis.second.size();
    return n;
  }

  // Odometer order: the last axis varies fastest.
  ParamList combination(std::size_t index) const {
    ParamList out(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& values = axes[a].second;
      out[a] = {axes[a].first, values[index % values.size()]};
      index /= values.size();
    }
    return out;
  }

  void validate() const {
    if (axes.empty()) throw ConfigError("grid has no axes");
    for (const auto& [name, values] : axes) {
      if (values.empty()) throw ConfigError("grid axis '" + name + "' has no values");
    }
    if (objective != "rmse" && objective != "mae") throw ConfigError("grid objective must be rmse or mae");
  }
};

struct ExperimentConfig {
  AlgorithmSpec algorithm;
  DatasetSpec dataset;
  FoldSpec folds;
  EvaluationSpec evaluation;
  OutputSpec output;
  std::optional<GridSpec> grid;
  std::size_t threads = 0;  // 0: RECBENCH_THREADS, else serial
  std::string run_id = "run-1";

  void validate() const {
    if (folds.k < 2) throw ConfigError("folds.k must be >= 2");
    if (evaluation.metrics.empty()) throw ConfigError("at least one metric is required");
    for (const auto& m : evaluation.metrics) {
      if (!known_metrics().contains(m)) throw ConfigError("unknown metric '" + m + "'");
    }
    if (evaluation.top_n < 1) throw ConfigError("evaluation.top_n must be >= 1");
    recbench::validate(algorithm);
    if (grid) grid->validate();
  }
};

struct FoldResult {
  std::size_t fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t cold_start = 0;  // test ratings whose user or item is unseen in train
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> precision, recall, ndcg, auc;

  friend bool operator==(const FoldResult&, const FoldResult&) = default;
};

struct RunResult {
  std::string run_id;
  std::string algo;
  ParamList params;
  std::size_t data_size = 0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> precision, recall, ndcg, auc;
  double wall_clock_seconds = 0.0;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

using RecommenderFactory = std::function<std::unique_ptr<Recommender>(const AlgorithmSpec&, std::uint64_t seed)>;

// ---------------------------------------------------------------------------
// Config files: INI with [algorithm] [dataset] [folds] [evaluation] [output]
// and an optional [grid]; see README for the keys.

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (const auto piece : split(text, ",")) {
    const auto t = trim(piece);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

template <typename T>
T ini_number(const std::string& section, const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("[" + section + "] " + key + ": invalid value '" + value + "'");
  }
  return out;
}

inline bool ini_bool(const std::string& section, const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("[" + section + "] " + key + ": expected true or false, got '" + value + "'");
}

[[noreturn]] inline void unknown_key(const std::string& section, const std::string& key) {
  throw ConfigError("[" + section + "] unknown key '" + key + "'");
}

inline GridSpec grid_from_section(const boost::property_tree::ptree& section) {
  GridSpec g;
  for (const auto& [key, node] : section) {
    const auto value = node.get_value<std::string>();
    if (key == "objective") {
      g.objective = value;
    } else {
      auto values = split_list(value);
      if (values.empty()) throw ConfigError("[grid] axis '" + key + "' has no values");
      g.axes.emplace_back(key, std::move(values));
    }
  }
  return g;
}

inline boost::property_tree::ptree read_ini_stream(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.line(), e.message());
  }
  return tree;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(std::istream& in) {
  const auto tree = detail::read_ini_stream(in);
  ExperimentConfig c;
  bool have_kind = false;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) throw ConfigError("key '" + name + "' is outside any section");
    for (const auto& [key, node] : section) {
      const auto value = node.get_value<std::string>();
      if (name == "algorithm") {
        if (key == "kind") {
          c.algorithm.kind = parse_algorithm_kind(value);
          have_kind = true;
        } else {
          set_param(c.algorithm.params, key, value);
        }
      } else if (name == "dataset") {
        if (key == "path") c.dataset.path = value;
        else if (key == "format") {
          try {
            c.dataset.format = parse_file_format(value);
          } catch (const ValidationError& e) {
            throw ConfigError(std::string("[dataset] format: ") + e.what());
          }
        } else if (key == "scale") {
          const auto parts = detail::split_list(value);
          if (parts.size() != 3) throw ConfigError("[dataset] scale: expected 'min,max,step'");
          try {
            c.dataset.scale = RatingScale(detail::ini_number<double>(name, key, parts[0]),
                                          detail::ini_number<double>(name, key, parts[1]),
                                          detail::ini_number<double>(name, key, parts[2]));
          } catch (const ArgumentError& e) {
            throw ConfigError(std::string("[dataset] scale: ") + e.what());
          }
        } else if (key == "subsample") c.dataset.subsample = detail::ini_number<std::size_t>(name, key, value);
        else if (key == "subsample_seed") c.dataset.subsample_seed = detail::ini_number<std::uint64_t>(name, key, value);
        else detail::unknown_key(name, key);
      } else if (name == "folds") {
        if (key == "k") c.folds.k = detail::ini_number<std::size_t>(name, key, value);
        else if (key == "mode") {
          try {
            c.folds.mode = parse_fold_mode(value);
          } catch (const ValidationError& e) {
            throw ConfigError(std::string("[folds] mode: ") + e.what());
          }
        } else if (key == "seed") c.folds.seed = detail::ini_number<std::uint64_t>(name, key, value);
        else detail::unknown_key(name, key);
      } else if (name == "evaluation") {
        if (key == "metrics") c.evaluation.metrics = detail::split_list(value);
        else if (key == "relevance_threshold") c.evaluation.relevance_threshold = detail::ini_number<double>(name, key, value);
        else if (key == "top_n") c.evaluation.top_n = detail::ini_number<std::size_t>(name, key, value);
        else if (key == "threads") c.threads = detail::ini_number<std::size_t>(name, key, value);
        else detail::unknown_key(name, key);
      } else if (name == "output") {
        if (key == "path") c.output.path = value;
        else if (key == "format") c.output.format = parse_result_format(value);
        else if (key == "timing") c.output.include_timing = detail::ini_bool(name, key, value);
        else detail::unknown_key(name, key);
      } else if (name != "grid") {
        throw ConfigError("unknown section [" + name + "]");
      }
    }
    if (name == "grid") c.grid = detail::grid_from_section(section);
  }
  if (!have_kind) throw ConfigError("[algorithm] kind is required");
  return c;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  return parse_experiment_config(in);
}

// A grid file holds a [grid] section; any other sections are ignored so a
// full experiment config can double as its own grid file.
inline GridSpec parse_grid(std::istream& in) {
  const auto tree = detail::read_ini_stream(in);
  const auto section = tree.get_child_optional("grid");
  if (!section) throw ConfigError("grid file has no [grid] section");
  return detail::grid_from_section(*section);
}

inline GridSpec load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path);
  return parse_grid(in);
}

inline RatingsDataset load_dataset(const DatasetSpec& spec) {
  if (spec.path.empty()) throw ConfigError("dataset path is required");
  auto data = load_movielens(spec.path, spec.format, spec.resolved_scale());
  if (spec.subsample && *spec.subsample != data.n_ratings()) return subsample(data, *spec.subsample, spec.subsample_seed);
  return data;
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t resolve_threads(std::size_t requested, std::size_t folds) {
  std::size_t n = requested;
  if (n == 0) {
    n = 1;
    if (const char* env = std::getenv("RECBENCH_THREADS")) {
      const std::string_view text(env);
      std::size_t parsed = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
      if (ec == std::errc() && ptr == text.data() + text.size() && parsed > 0) n = parsed;
    }
  }
  return std::clamp<std::size_t>(n, 1, folds);
}

inline std::optional<double> mean_of(const std::vector<FoldResult>& folds, std::optional<double> FoldResult::*field) {
  double sum = 0.0;
  for (const auto& f : folds) {
    if (!(f.*field)) return std::nullopt;
    sum += *(f.*field);
  }
  return sum / static_cast<double>(folds.size());
}

struct FoldOutcome {
  FoldResult result;
  double seconds = 0.0;
};

inline void ranking_metrics(const Recommender& model, const RatingsDataset& test, const EvaluationSpec& eval,
                            FoldResult& out) {
  std::map<RawId, std::vector<const Rating*>> by_user;
  for (const auto& r : test.ratings()) by_user[r.user].push_back(&r);
  double p = 0.0, rc = 0.0, nd = 0.0;
  std::size_t users = 0;
  for (const auto& [user, rated] : by_user) {
    std::unordered_set<RawId> relevant;
    std::map<RawId, double> grade;
    for (const auto* r : rated) {
      grade[r->item] = r->value;
      if (r->value >= eval.relevance_threshold) relevant.insert(r->item);
    }
    if (relevant.empty()) continue;
    const auto list = model.recommend(user, eval.top_n);
    const std::span<const RawId> view(list);
    p += precision_at_k(view, relevant, eval.top_n);
    rc += recall_at_k(view, relevant, eval.top_n);
    std::vector<double> grades;
    for (const auto item : list) {
      const auto it = grade.find(item);
      grades.push_back(it == grade.end() ? 0.0 : it->second);
    }
    nd += ndcg(grades, eval.top_n);
    ++users;
  }
  if (users == 0) return;
  const double n = static_cast<double>(users);
  if (eval.wants("precision")) out.precision = p / n;
  if (eval.wants("recall")) out.recall = rc / n;
  if (eval.wants("ndcg")) out.ndcg = nd / n;
}

inline FoldOutcome run_fold(const TrainTestSplit& split, const ExperimentConfig& config,
                            const RecommenderFactory& factory) {
  FoldOutcome outcome;
  auto& res = outcome.result;
  res.fold = split.fold_id;
  res.n_train = split.train.n_ratings();
  res.n_test = split.test.n_ratings();

  auto train = std::make_shared<const RatingsDataset>(split.train);
  const auto& tests = split.test.ratings();
  std::map<RawId, std::vector<std::size_t>> by_user;
  for (std::size_t k = 0; k < tests.size(); ++k) {
    by_user[tests[k].user].push_back(k);
    if (!train->users().find(tests[k].user) || !train->items().find(tests[k].item)) ++res.cold_start;
  }

  const auto start = std::chrono::steady_clock::now();
  auto model = factory(config.algorithm, mix_seed(config.folds.seed, split.fold_id + 1));
  model->fit(train);
  std::vector<PredictionPair> pairs(tests.size());
  for (const auto& [user, rows] : by_user) {
    std::vector<RawId> items;
    for (const auto k : rows) items.push_back(tests[k].item);
    const auto predicted = model->predict_user(user, items);
    for (std::size_t j = 0; j < rows.size(); ++j) pairs[rows[j]] = {predicted[j], tests[rows[j]].value};
  }
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  res.rmse = rmse(pairs);
  res.mae = mae(pairs);
  if (config.evaluation.wants("auc")) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& pr : pairs) {
      scores.push_back(pr.predicted);
      labels.push_back(pr.actual >= config.evaluation.relevance_threshold ? 1 : 0);
    }
    const bool mixed = std::find(labels.begin(), labels.end(), 1) != labels.end() &&
                       std::find(labels.begin(), labels.end(), 0) != labels.end();
    if (mixed) res.auc = roc_auc(scores, labels);
  }
  if (config.evaluation.wants_ranking()) ranking_metrics(*model, split.test, config.evaluation, res);
  return outcome;
}

// Rethrows with the fold index in the message, keeping the error family.
template <typename F>
auto with_fold(std::size_t fold, F&& f) {
  const auto tag = [fold](const std::exception& e) { return "fold " + std::to_string(fold) + ": " + e.what(); };
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ConfigError(tag(e));
  } catch (const RuntimeError& e) {
    throw RuntimeError(tag(e));
  }
}

}  // namespace detail

// Cross-validated run over an already loaded dataset. Folds may run on
// several threads; results are collected in fold order either way.
inline RunResult run_experiment(const RatingsDataset& data, const ExperimentConfig& config,
                                const RecommenderFactory& factory = make_recommender) {
  config.validate();
  const auto splits = crossfold(data, config.folds.k, config.folds.mode, config.folds.seed);
  std::vector<detail::FoldOutcome> outcomes(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  const auto work = [&](std::size_t f) {
    try {
      outcomes[f] = detail::with_fold(f, [&] { return detail::run_fold(splits[f], config, factory); });
    } catch (...) {
      errors[f] = std::current_exception();
    }
  };

  const std::size_t threads = detail::resolve_threads(config.threads, splits.size());
  const auto start = std::chrono::steady_clock::now();
  if (threads <= 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) work(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) work(f);
      });
    }
    for (auto& th : pool) th.join();
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RunResult out;
  out.run_id = config.run_id;
  out.algo = to_string(config.algorithm.kind);
  out.params = config.algorithm.params;
  out.data_size = data.n_ratings();
  out.seed = config.folds.seed;
  double fit_seconds = 0.0;
  for (auto& o : outcomes) {
    out.folds.push_back(o.result);
    fit_seconds += o.seconds;
  }
  double sr = 0.0, sm = 0.0;
  for (const auto& f : out.folds) {
    sr += f.rmse;
    sm += f.mae;
  }
  out.rmse = sr / static_cast<double>(out.folds.size());
  out.mae = sm / static_cast<double>(out.folds.size());
  out.precision = detail::mean_of(out.folds, &FoldResult::precision);
  out.recall = detail::mean_of(out.folds, &FoldResult::recall);
  out.ndcg = detail::mean_of(out.folds, &FoldResult::ndcg);
  out.auc = detail::mean_of(out.folds, &FoldResult::auc);
  // Serial runs report summed fit+predict time; parallel runs the elapsed
  // wall time of the fold phase.
  out.wall_clock_seconds = std::max(threads <= 1 ? fit_seconds : elapsed, 1e-9);
  return out;
}

inline RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(load_dataset(config.dataset), config);
}

struct GridResult {
  std::size_t best = 0;
  ParamList best_params;
  std::vector<RunResult> results;  // one per combination, odometer order
};

// Every combination runs on identical folds and seeds. The grid values
// override the config's base parameters. Ties go to the earliest combination.
inline GridResult grid_search(const RatingsDataset& data, const GridSpec& grid, const ExperimentConfig& config,
                              const RecommenderFactory& factory = make_recommender) {
  grid.validate();
  GridResult out;
  double best_score = 0.0;
  for (std::size_t c = 0; c < grid.combinations(); ++c) {
    ExperimentConfig run = config;
    for (const auto& [key, value] : grid.combination(c)) set_param(run.algorithm.params, key, value);
    run.run_id = "grid-" + std::to_string(c + 1);
    auto result = run_experiment(data, run, factory);
    const double score = grid.objective == "mae" ? result.mae : result.rmse;
    if (c == 0 || score < best_score) {
      best_score = score;
      out.best = c;
      out.best_params = result.params;
    }
    out.results.push_back(std::move(result));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Results files

struct ExportOptions {
  bool include_timing = true;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline std::optional<double> opt_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace detail

// Columns: run_id, algo, data_size, <hyperparameters>, rmse, mae,
// [precision, recall, ndcg, auc when any run has them], clock_seconds.
inline std::string results_to_csv(const std::vector<RunResult>& results, const ExportOptions& options = {}) {
  std::vector<std::string> keys;
  for (const auto& r : results) {
    for (const auto& [k, v] : r.params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  const auto any = [&](std::optional<double> RunResult::*field) {
    return std::any_of(results.begin(), results.end(), [&](const RunResult& r) { return (r.*field).has_value(); });
  };
  const std::vector<std::pair<const char*, std::optional<double> RunResult::*>> extra_all{
      {"precision", &RunResult::precision}, {"recall", &RunResult::recall}, {"ndcg", &RunResult::ndcg},
      {"auc", &RunResult::auc}};
  std::vector<std::pair<const char*, std::optional<double> RunResult::*>> extra;
  for (const auto& e : extra_all) {
    if (any(e.second)) extra.push_back(e);
  }

  std::ostringstream out;
  out << "run_id,algo,data_size";
  for (const auto& k : keys) out << ',' << detail::csv_field(k);
  out << ",rmse,mae";
  for (const auto& e : extra) out << ',' << e.first;
  if (options.include_timing) out << ",clock_seconds";
  out << '\n';
  for (const auto& r : results) {
    out << detail::csv_field(r.run_id) << ',' << r.algo << ',' << r.data_size;
    for (const auto& k : keys) {
      out << ',';
      for (const auto& [pk, pv] : r.params) {
        if (pk == k) out << detail::csv_field(pv);
      }
    }
    out << ',' << detail::format_double(r.rmse) << ',' << detail::format_double(r.mae);
    for (const auto& e : extra) {
      out << ',';
      if (r.*(e.second)) out << detail::format_double(*(r.*(e.second)));
    }
    if (options.include_timing) out << ',' << detail::format_double(r.wall_clock_seconds);
    out << '\n';
  }
  return out.str();
}

inline nlohmann::json to_json(const RunResult& r, const ExportOptions& options = {}) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [k, v] : r.params) params.push_back({k, v});
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"cold_start", f.cold_start},
                     {"rmse", f.rmse},
                     {"mae", f.mae},
                     {"precision", detail::opt_json(f.precision)},
                     {"recall", detail::opt_json(f.recall)},
                     {"ndcg", detail::opt_json(f.ndcg)},
                     {"auc", detail::opt_json(f.auc)}});
  }
  nlohmann::json j{{"run_id", r.run_id},
                   {"algo", r.algo},
                   {"params", params},
                   {"data_size", r.data_size},
                   {"seed", r.seed},
                   {"folds", folds},
                   {"rmse", r.rmse},
                   {"mae", r.mae},
                   {"precision", detail::opt_json(r.precision)},
                   {"recall", detail::opt_json(r.recall)},
                   {"ndcg", detail::opt_json(r.ndcg)},
                   {"auc", detail::opt_json(r.auc)}};
  if (options.include_timing) j["clock_seconds"] = r.wall_clock_seconds;
  return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  r.run_id = j.at("run_id").get<std::string>();
  r.algo = j.at("algo").get<std::string>();
  for (const auto& p : j.at("params")) r.params.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  r.data_size = j.at("data_size").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& f : j.at("folds")) {
    FoldResult fr;
    fr.fold = f.at("fold").get<std::size_t>();
    fr.n_train = f.at("n_train").get<std::size_t>();
    fr.n_test = f.at("n_test").get<std::size_t>();
    fr.cold_start = f.at("cold_start").get<std::size_t>();
    fr.rmse = f.at("rmse").get<double>();
    fr.mae = f.at("mae").get<double>();
    fr.precision = detail::opt_double(f, "precision");
    fr.recall = detail::opt_double(f, "recall");
    fr.ndcg = detail::opt_double(f, "ndcg");
    fr.auc = detail::opt_double(f, "auc");
    r.folds.push_back(fr);
  }
  r.rmse = j.at("rmse").get<double>();
  r.mae = j.at("mae").get<double>();
  r.precision = detail::opt_double(j, "precision");
  r.recall = detail::opt_double(j, "recall");
  r.ndcg = detail::opt_double(j, "ndcg");
  r.auc = detail::opt_double(j, "auc");
  r.wall_clock_seconds = j.value("clock_seconds", 0.0);
  return r;
}

inline std::string results_to_json(const std::vector<RunResult>& results, const ExportOptions& options = {}) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : results) runs.push_back(to_json(r, options));
  return nlohmann::json{{"results", runs}}.dump(2) + "\n";
}

inline std::vector<RunResult> results_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    std::vector<RunResult> out;
    for (const auto& r : j.at("results")) out.push_back(run_result_from_json(r));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, e.what());
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out.flush()) throw IoError("failed writing " + path);
}

inline void export_results(const std::vector<RunResult>& results, ResultFormat format, const std::string& path,
                           const ExportOptions& options = {}) {
  if (results.empty()) throw ArgumentError("no results to export");
  write_text(path, format == ResultFormat::Csv ? results_to_csv(results, options) : results_to_json(results, options));
}

inline std::vector<RunResult> import_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return results_from_json(text.str());
}

}  // namespace recbench
