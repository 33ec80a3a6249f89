#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "recbench/harness.hpp"

namespace recbench {

// One row of a published results table: the configuration that was run and
// the accuracy reported for it. Rows are data so they can be audited here.
struct PresetRow {
  int run = 0;
  std::size_t size = 0;  // ratings in the published run
  AlgorithmKind kind = AlgorithmKind::KnnUser;
  ParamList params;
  std::string label;
  double rmse = 0.0;
  double mae = 0.0;
};

struct TablePreset {
  int table = 0;
  std::string title;
  std::vector<PresetRow> rows;
  std::optional<GridSpec> grid;  // tuned rows come from a grid search
};

namespace detail {

inline PresetRow knn_row(int run, std::size_t size, const char* sim, double rmse, double mae) {
  return {run, size, AlgorithmKind::KnnUser, {{"k", "40"}, {"top_n", "10"}, {"similarity", sim}}, sim, rmse, mae};
}

inline PresetRow als_row(int run, std::size_t size, int factors, int iterations, const char* sim, double rmse,
                         double mae) {
  return {run,
          size,
          AlgorithmKind::MfAls,
          {{"factors", std::to_string(factors)}, {"iterations", std::to_string(iterations)}, {"similarity", sim}},
          "als",
          rmse,
          mae};
}

inline PresetRow sgd_row(int run, std::size_t size, bool plus, double rmse, double mae) {
  return {run, size, plus ? AlgorithmKind::Svdpp : AlgorithmKind::Svd, {}, plus ? "SVD++" : "SVD", rmse, mae};
}

inline PresetRow tuned_row(int run, std::size_t size, bool tuned, double rmse, double mae) {
  ParamList p{{"epochs", "20"}};
  if (tuned) {
    p.emplace_back("factors", "50");
    p.emplace_back("lr", "0.005");
  }
  return {run, size, AlgorithmKind::Svd, p, tuned ? "SVD tuned" : "SVD untuned", rmse, mae};
}

inline PresetRow rbm_row(int run, std::size_t size, int hidden, const char* lr, int batch, double rmse, double mae) {
  return {run,
          size,
          AlgorithmKind::Rbm,
          {{"epochs", "20"}, {"hidden", std::to_string(hidden)}, {"lr", lr}, {"batch_size", std::to_string(batch)}},
          "rbm",
          rmse,
          mae};
}

inline PresetRow ae_row(int run, std::size_t size, int epochs, int hidden, const char* lr, double rmse, double mae) {
  return {run,
          size,
          AlgorithmKind::Autoencoder,
          {{"epochs", std::to_string(epochs)}, {"hidden", std::to_string(hidden)}, {"lr", lr}, {"batch_size", "200"}},
          "autoencoder",
          rmse,
          mae};
}

}  // namespace detail

inline const std::vector<TablePreset>& table_presets() {
  using namespace detail;
  static const std::vector<TablePreset> presets{
      {6,
       "KNN (K=40) user-user collaborative filtering",
       {knn_row(6, 1250000, "cosine", .9486, .7300), knn_row(7, 1250000, "msd", .8941, .6834),
        knn_row(8, 1250000, "pearson", .9357, .7252), knn_row(9, 1250000, "pearson_baseline", .8984, .6957),
        knn_row(18, 1000000, "cosine", .9517, .7316), knn_row(19, 1000000, "msd", .8982, .6864),
        knn_row(20, 1000000, "pearson", .9414, .7290), knn_row(21, 1000000, "pearson_baseline", .9080, .7030),
        knn_row(13, 500000, "cosine", .9600, .7348), knn_row(12, 500000, "msd", .9158, .6974),
        knn_row(11, 500000, "pearson", .9540, .7362), knn_row(10, 500000, "pearson_baseline", .9296, .7155),
        knn_row(14, 250000, "cosine", .9778, .7524), knn_row(15, 250000, "msd", .9402, .7203),
        knn_row(16, 250000, "pearson", .9749, .7555), knn_row(17, 250000, "pearson_baseline", .9589, .7398)},
       std::nullopt},
      {7,
       "Matrix factorization (ALS)",
       {als_row(5, 1500000, 15, 100, "cosine", .8504, .6559), als_row(6, 1500000, 20, 200, "cosine", .8290, .6387),
        als_row(1, 1000000, 15, 100, "cosine", .9168, .7241), als_row(4, 1000000, 20, 200, "cosine", .8402, .6463),
        als_row(12, 750000, 20, 200, "cosine", .8476, .6519), als_row(7, 500000, 20, 200, "cosine", .8624, .6612),
        als_row(8, 500000, 20, 200, "msd", .8624, .6612), als_row(9, 500000, 20, 200, "pearson", .8624, .6612),
        als_row(10, 500000, 20, 200, "pearson_baseline", .8624, .6612),
        als_row(11, 250000, 20, 200, "cosine", .9002, .6924), als_row(2, 100000, 15, 100, "cosine", .9523, .7351),
        als_row(3, 100000, 20, 200, "cosine", .9540, .7392)},
       std::nullopt},
      {8,
       "SVD and SVD++ without grid search",
       {sgd_row(3, 1250000, false, .8317, .6363), sgd_row(3, 1250000, true, .8177, .6229),
        sgd_row(1, 1000000, false, .8380, .6415), sgd_row(1, 1000000, true, .8237, .6278),
        sgd_row(6, 750000, false, .8469, .6483), sgd_row(6, 750000, true, .8307, .6325),
        sgd_row(4, 500000, false, .8606, .6575), sgd_row(4, 500000, true, .8441, .6430),
        sgd_row(5, 250000, false, .8855, .6811), sgd_row(5, 250000, true, .8703, .6666),
        sgd_row(2, 100000, false, .9039, .6984), sgd_row(2, 100000, true, .8943, .6887)},
       std::nullopt},
      {9,
       "SVD with grid search",
       {tuned_row(9, 1250000, true, .8298, .6348), tuned_row(9, 1250000, false, .8318, .6367),
        tuned_row(7, 1000000, true, .8356, .6396), tuned_row(7, 1000000, false, .8370, .6407),
        tuned_row(12, 750000, true, .8440, .6462), tuned_row(12, 750000, false, .8457, .6474),
        tuned_row(10, 500000, true, .8574, .6547), tuned_row(10, 500000, false, .8603, .6576),
        tuned_row(11, 250000, true, .8814, .6773), tuned_row(11, 250000, false, .8852, .6802),
        tuned_row(8, 100000, true, .9002, .6958), tuned_row(8, 100000, false, .9033, .6992)},
       GridSpec{{{"factors", {"50", "100"}}, {"lr", {"0.002", "0.005"}}}, "rmse"}},
      {10,
       "RBM without grid search",
       {rbm_row(1, 1000000, 50, "0.001", 100, 1.3923, 1.1887), rbm_row(3, 1000000, 50, "0.1", 100, 1.3899, 1.1864),
        rbm_row(7, 400000, 50, "0.001", 100, 1.3105, 1.1165), rbm_row(6, 300000, 50, "0.001", 100, 1.3090, 1.1140),
        rbm_row(4, 250000, 50, "0.1", 200, 1.3091, 1.1127), rbm_row(5, 200000, 50, "0.1", 200, 1.3112, 1.1144),
        rbm_row(2, 100000, 50, "0.001", 100, 1.3257, 1.1337)},
       std::nullopt},
      {12,
       "Autoencoder",
       {ae_row(1, 1000000, 100, 100, "0.01", 2.0894, 1.7115), ae_row(3, 1000000, 50, 50, "0.1", 2.1453, 1.7757),
        ae_row(9, 400000, 20, 20, "0.1", 2.0716, 1.7284), ae_row(8, 300000, 20, 20, "0.1", 2.0646, 1.7230),
        ae_row(4, 250000, 20, 20, "0.1", 2.0658, 1.7223), ae_row(7, 200000, 20, 20, "0.1", 2.0621, 1.7176),
        ae_row(2, 100000, 200, 100, "0.1", 2.0367, 1.6719), ae_row(5, 100000, 20, 20, "0.1", 2.0464, 1.6994),
        ae_row(6, 100000, 20, 50, "0.1", 2.0792, 1.7307)},
       std::nullopt},
  };
  return presets;
}

inline const TablePreset& table_preset(int table) {
  for (const auto& p : table_presets()) {
    if (p.table == table) return p;
  }
  if (table == 13) throw ArgumentError("table 13 compares published benchmarks and has no runs to replicate");
  throw ArgumentError("no replication preset for table " + std::to_string(table) +
                      " (supported: 6, 7, 8, 9, 10, 12)");
}

// Rows to run at a given data size: the published rows of that size when the
// table has any, otherwise each distinct configuration once, paired with the
// nearest published size.
inline std::vector<PresetRow> rows_for_size(const TablePreset& preset, std::size_t size) {
  std::vector<PresetRow> exact;
  for (const auto& r : preset.rows) {
    if (r.size == size) exact.push_back(r);
  }
  if (!exact.empty()) return exact;
  std::vector<PresetRow> distinct;
  for (const auto& r : preset.rows) {
    const auto same = [&](const PresetRow& d) { return d.kind == r.kind && d.params == r.params; };
    const auto it = std::find_if(distinct.begin(), distinct.end(), same);
    const auto gap = [size](std::size_t s) { return s > size ? s - size : size - s; };
    if (it == distinct.end()) distinct.push_back(r);
    else if (gap(r.size) < gap(it->size)) *it = r;
  }
  return distinct;
}

struct ReplicatedRow {
  PresetRow published;
  RunResult result;
};

// Runs a table's rows on `data`. For the grid table the tuned row is the
// grid winner and the untuned row uses the library defaults.
inline std::vector<ReplicatedRow> replicate_table(const RatingsDataset& data, const TablePreset& preset,
                                                  const ExperimentConfig& base) {
  std::vector<ReplicatedRow> out;
  std::optional<GridResult> grid;
  std::size_t n = 0;
  for (const auto& row : rows_for_size(preset, data.n_ratings())) {
    ExperimentConfig cfg = base;
    cfg.algorithm = {row.kind, row.params};
    cfg.run_id = "table" + std::to_string(preset.table) + "-" + std::to_string(++n);
    RunResult result;
    if (preset.grid && row.label == "SVD tuned") {
      ExperimentConfig g = cfg;
      g.algorithm.params = {{"epochs", "20"}};
      if (!grid) grid = grid_search(data, *preset.grid, g);
      result = grid->results[grid->best];
      result.run_id = cfg.run_id;
    } else {
      result = run_experiment(data, cfg);
    }
    out.push_back({row, std::move(result)});
  }
  return out;
}

// Table-shaped CSV with the published numbers alongside the measured ones.
inline std::string replicated_to_csv(int table, const std::vector<ReplicatedRow>& rows,
                                     const ExportOptions& options = {}) {
  std::vector<std::string> keys;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.result.params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  std::ostringstream out;
  out << "table,published_run,published_size,data_size,model";
  for (const auto& k : keys) out << ',' << k;
  out << ",rmse,mae";
  if (options.include_timing) out << ",clock_seconds";
  out << ",published_rmse,published_mae\n";
  for (const auto& r : rows) {
    out << table << ',' << r.published.run << ',' << r.published.size << ',' << r.result.data_size << ','
        << detail::csv_field(r.published.label);
    for (const auto& k : keys) {
      out << ',';
      for (const auto& [pk, pv] : r.result.params) {
        if (pk == k) out << detail::csv_field(pv);
      }
    }
    out << ',' << detail::format_double(r.result.rmse) << ',' << detail::format_double(r.result.mae);
    if (options.include_timing) out << ',' << detail::format_double(r.result.wall_clock_seconds);
    out << ',' << detail::format_double(r.published.rmse) << ',' << detail::format_double(r.published.mae) << '\n';
  }
  return out.str();
}

}  // namespace recbench
