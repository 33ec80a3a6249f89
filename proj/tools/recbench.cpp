// recbench: command-line driver for cross-validated recommender experiments.
//
//   recbench run --algo svd --data u.data --format ml100k-tab --folds 5 --seed 42 --out r.csv
//   recbench grid --grid grid.ini --algo svd --data u.data
//   recbench subsample --data ratings.dat --format ml-1m-colons --size 250000 --out sub.dat
//   recbench replicate --table 6 --data u.data --size 100000
//
// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recbench/harness.hpp"
#include "recbench/replicate.hpp"

namespace {

using namespace recbench;

// Flags shared by run, grid and replicate.
struct RunFlags {
  std::string config;
  std::string algo;
  std::string data;
  std::string format = "ml100k-tab";
  std::string scale;
  std::size_t folds = 5;
  std::string fold_mode = "row";
  std::uint64_t seed = 42;
  std::size_t subsample = 0;
  std::string out;
  std::string out_format;
  std::string similarity;
  std::vector<std::string> params;
  std::string metrics;
  double relevance = 4.0;
  std::size_t threads = 0;
  bool no_timing = false;
};

void add_data_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--data", f.data, "Ratings file");
  cmd.add_option("--format", f.format, "Ratings format: ml100k-tab, ml-csv or ml-1m-colons")->capture_default_str();
  cmd.add_option("--scale", f.scale, "Rating scale as min,max,step (default: by format)");
  cmd.add_option("--folds", f.folds, "Number of cross-validation folds")->capture_default_str();
  cmd.add_option("--fold-mode", f.fold_mode, "Fold assignment: row or user")->capture_default_str();
  cmd.add_option("--seed", f.seed, "Seed for folds, subsampling and model initialisation")->capture_default_str();
  cmd.add_option("--threads", f.threads, "Folds run concurrently (0: RECBENCH_THREADS or 1)")->capture_default_str();
  cmd.add_flag("--no-timing", f.no_timing, "Leave clock_seconds out of result files");
  cmd.add_option("--out", f.out, "Results file");
  cmd.add_option("--out-format", f.out_format, "csv or json (default: from the --out extension)");
}

void add_algo_flags(CLI::App& cmd, RunFlags& f) {
  cmd.add_option("--config", f.config, "Experiment config file (INI); other flags override it");
  cmd.add_option("--algo", f.algo, "knn_user, mf_als, svd, svdpp, rbm or autoencoder");
  cmd.add_option("--similarity", f.similarity, "KNN similarity: cosine, msd, pearson or pearson_baseline");
  cmd.add_option("--param", f.params, "Hyperparameter as key=value (repeatable)");
  cmd.add_option("--subsample", f.subsample, "Use a uniform subsample of this many ratings (0: all)")
      ->capture_default_str();
  cmd.add_option("--metrics", f.metrics, "Comma list from rmse,mae,precision,recall,ndcg,auc (default rmse,mae)");
  cmd.add_option("--relevance", f.relevance, "Rating at or above which a test item counts as relevant")
      ->capture_default_str();
}

std::optional<RatingScale> parse_scale_flag(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto parts = detail::split_list(text);
  if (parts.size() != 3) throw ConfigError("--scale expects min,max,step");
  return RatingScale(detail::ini_number<double>("scale", "--scale", parts[0]),
                     detail::ini_number<double>("scale", "--scale", parts[1]),
                     detail::ini_number<double>("scale", "--scale", parts[2]));
}

ExperimentConfig build_config(const CLI::App& cmd, const RunFlags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) c = load_experiment_config(f.config);
  const auto given = [&](const char* flag) { return cmd.count(flag) > 0; };
  if (given("--algo")) c.algorithm.kind = parse_algorithm_kind(f.algo);
  else if (f.config.empty()) throw ConfigError("--algo or --config is required");
  if (given("--similarity")) set_param(c.algorithm.params, "similarity", f.similarity);
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + kv + "'");
    set_param(c.algorithm.params, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (given("--data")) c.dataset.path = f.data;
  if (c.dataset.path.empty()) throw ConfigError("--data is required");
  if (given("--format") || f.config.empty()) c.dataset.format = parse_file_format(f.format);
  if (const auto s = parse_scale_flag(f.scale)) c.dataset.scale = s;
  if (given("--subsample") && f.subsample > 0) c.dataset.subsample = f.subsample;
  if (given("--folds") || f.config.empty()) c.folds.k = f.folds;
  if (given("--fold-mode") || f.config.empty()) c.folds.mode = parse_fold_mode(f.fold_mode);
  if (given("--seed") || f.config.empty()) {
    c.folds.seed = f.seed;
    c.dataset.subsample_seed = f.seed;
  }
  if (given("--metrics")) c.evaluation.metrics = detail::split_list(f.metrics);
  if (given("--relevance")) c.evaluation.relevance_threshold = f.relevance;
  if (given("--threads")) c.threads = f.threads;
  if (given("--out")) c.output.path = f.out;
  if (!f.out_format.empty()) c.output.format = parse_result_format(f.out_format);
  if (f.no_timing) c.output.include_timing = false;
  c.validate();
  return c;
}

void print_summary(const RunResult& r) {
  std::printf("algo=%s n=%zu rmse=%.6f mae=%.6f secs=%.3f\n", r.algo.c_str(), r.data_size, r.rmse, r.mae,
              r.wall_clock_seconds);
  std::fflush(stdout);
}

void write_results(const ExperimentConfig& c, const std::vector<RunResult>& results) {
  if (c.output.path.empty()) return;
  const auto format = c.output.format.value_or(result_format_for(c.output.path));
  export_results(results, format, c.output.path, {c.output.include_timing});
}

std::string describe(const ParamList& params) {
  std::string s;
  for (const auto& [k, v] : params) s += (s.empty() ? "" : " ") + k + "=" + v;
  return s;
}

int cmd_run(const CLI::App& cmd, const RunFlags& f) {
  const auto c = build_config(cmd, f);
  const auto result = run_experiment(c);
  print_summary(result);
  write_results(c, {result});
  return 0;
}

int cmd_grid(const CLI::App& cmd, const RunFlags& f, const std::string& grid_path) {
  auto c = build_config(cmd, f);
  GridSpec grid;
  if (!grid_path.empty()) grid = load_grid(grid_path);
  else if (c.grid) grid = *c.grid;
  else throw ConfigError("--grid is required (or a [grid] section in --config)");
  const auto data = load_dataset(c.dataset);
  const auto result = grid_search(data, grid, c);
  for (const auto& r : result.results) print_summary(r);
  const auto& best = result.results[result.best];
  std::printf("best: %s rmse=%.6f mae=%.6f\n", describe(result.best_params).c_str(), best.rmse, best.mae);
  write_results(c, result.results);
  return 0;
}

int cmd_subsample(const std::string& data, const std::string& format, const std::string& scale, std::size_t size,
                  std::uint64_t seed, const std::string& out) {
  const auto fmt = parse_file_format(format);
  DatasetSpec spec{data, fmt, parse_scale_flag(scale), std::nullopt, 0};
  const auto source = load_dataset(spec);
  const auto picked = subsample(source, size, seed);
  std::ofstream file(out, std::ios::binary);
  if (!file) throw IoError("cannot write " + out);
  write_movielens(file, picked, fmt);
  if (!file.flush()) throw IoError("failed writing " + out);
  std::printf("n=%zu users=%zu items=%zu out=%s\n", picked.n_ratings(), picked.n_users(), picked.n_items(),
              out.c_str());
  return 0;
}

int cmd_replicate(const CLI::App& cmd, RunFlags f, int table, std::size_t size) {
  const auto& preset = table_preset(table);
  if (f.data.empty()) throw ConfigError("--data is required");
  ExperimentConfig c;
  c.dataset = {f.data, parse_file_format(f.format), parse_scale_flag(f.scale), std::nullopt, f.seed};
  if (size > 0) c.dataset.subsample = size;
  c.folds = {f.folds, parse_fold_mode(f.fold_mode), f.seed};
  if (cmd.count("--threads")) c.threads = f.threads;
  const auto data = load_dataset(c.dataset);
  const auto rows = replicate_table(data, preset, c);
  for (const auto& r : rows) {
    std::printf("table=%d run=%d model=%s ", table, r.published.run, r.published.label.c_str());
    print_summary(r.result);
  }
  const ExportOptions options{!f.no_timing};
  const std::string out = f.out.empty() ? "table" + std::to_string(table) + ".csv" : f.out;
  write_text(out, replicated_to_csv(table, rows, options));
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-validated collaborative filtering experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Cross-validate one algorithm configuration");
  add_algo_flags(*run, run_flags);
  add_data_flags(*run, run_flags);

  RunFlags grid_flags;
  std::string grid_path;
  auto* grid = app.add_subcommand("grid", "Cross-validate every combination of a parameter grid");
  grid->add_option("--grid", grid_path, "Grid file with a [grid] section of key = v1,v2,... lines");
  add_algo_flags(*grid, grid_flags);
  add_data_flags(*grid, grid_flags);

  std::string sub_data, sub_format = "ml100k-tab", sub_scale, sub_out;
  std::size_t sub_size = 0;
  std::uint64_t sub_seed = 42;
  auto* sub = app.add_subcommand("subsample", "Write a uniform random subset of a ratings file");
  sub->add_option("--data", sub_data, "Ratings file")->required();
  sub->add_option("--format", sub_format, "Ratings format: ml100k-tab, ml-csv or ml-1m-colons")->capture_default_str();
  sub->add_option("--scale", sub_scale, "Rating scale as min,max,step (default: by format)");
  sub->add_option("--size", sub_size, "Number of ratings to keep")->required();
  sub->add_option("--seed", sub_seed, "Sampling seed")->capture_default_str();
  sub->add_option("--out", sub_out, "Output file, same format as the input")->required();

  RunFlags rep_flags;
  int table = 0;
  std::size_t rep_size = 0;
  auto* rep = app.add_subcommand("replicate", "Run the configurations of a published results table");
  rep->add_option("--table", table, "Table id: 6, 7, 8, 9, 10 or 12")->required();
  rep->add_option("--size", rep_size, "Subsample to this many ratings first (0: use all)")->capture_default_str();
  add_data_flags(*rep, rep_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return cmd_run(*run, run_flags);
    if (*grid) return cmd_grid(*grid, grid_flags, grid_path);
    if (*sub) return cmd_subsample(sub_data, sub_format, sub_scale, sub_size, sub_seed, sub_out);
    if (*rep) return cmd_replicate(*rep, rep_flags, table, rep_size);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (*run && run_flags.data.empty() && run_flags.config.empty()) std::cerr << run->help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
