#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "recbench/errors.hpp"
#include "recbench/random.hpp"

namespace recbench {

using RawId = std::int64_t;

// Discrete rating levels min, min+step, ..., max.
class RatingScale {
 public:
  RatingScale() = default;

  RatingScale(double min, double max, double step) : min_(min), max_(max), step_(step) {
    if (!(min < max) || !(step > 0.0) || !std::isfinite(min) || !std::isfinite(max)) {
      throw ArgumentError("rating scale needs min < max and step > 0");
    }
    const double span = (max - min) / step;
    if (std::abs(span - std::round(span)) > 1e-9) {
      throw ArgumentError("rating scale range is not a multiple of its step");
    }
    levels_ = static_cast<int>(std::llround(span)) + 1;
  }

  // MovieLens 100K/1M: whole stars 1..5.
  static RatingScale whole_stars() { return {1.0, 5.0, 1.0}; }

  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  double step() const noexcept { return step_; }
  int levels() const noexcept { return levels_; }

  double value_of(int level) const noexcept { return min_ + step_ * level; }

  // Level index of an on-scale value, or nullopt.
  std::optional<int> level_of(double value) const noexcept {
    if (!std::isfinite(value)) return std::nullopt;
    const double pos = (value - min_) / step_;
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) > 1e-9 || rounded < 0 || rounded > levels_ - 1) {
      return std::nullopt;
    }
    return static_cast<int>(rounded);
  }

  bool contains(double value) const noexcept { return level_of(value).has_value(); }

  double clamp(double value) const noexcept { return std::clamp(value, min_, max_); }

  friend bool operator==(const RatingScale&, const RatingScale&) = default;

 private:
  double min_ = 0.5;
  double max_ = 5.0;
  double step_ = 0.5;
  int levels_ = 10;
};

struct Rating {
  RawId user = 0;
  RawId item = 0;
  double value = 0.0;
  std::optional<std::int64_t> timestamp;

  friend bool operator==(const Rating&, const Rating&) = default;
};

// One non-zero of a sparse row: the ordinal on the other axis and the rating.
struct Cell {
  std::uint32_t index;
  double value;
};

// A rating expressed in dense ordinals of its dataset.
struct Entry {
  std::uint32_t user;
  std::uint32_t item;
  double value;
};

// Bijection between raw identifiers and contiguous ordinals 0..n-1.
// Ordinals follow ascending raw id.
class IdIndex {
 public:
  IdIndex() = default;

  explicit IdIndex(std::vector<RawId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
    ordinals_.reserve(ids_.size());
    for (std::size_t k = 0; k < ids_.size(); ++k) {
      ordinals_.emplace(ids_[k], static_cast<std::uint32_t>(k));
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }

  std::optional<std::uint32_t> find(RawId id) const {
    const auto it = ordinals_.find(id);
    if (it == ordinals_.end()) return std::nullopt;
    return it->second;
  }

  RawId id(std::uint32_t ordinal) const { return ids_.at(ordinal); }

  const std::vector<RawId>& ids() const noexcept { return ids_; }

 private:
  std::vector<RawId> ids_;
  std::unordered_map<RawId, std::uint32_t> ordinals_;
};

// Immutable, validated, indexed collection of ratings with CSR views in both
// directions. Rows of each view are sorted by the opposite ordinal.
class RatingsDataset {
 public:
  RatingsDataset() : users_(std::make_shared<IdIndex>()), items_(std::make_shared<IdIndex>()) {}

  // Validates every rating against the scale. Duplicate (user, item) rows keep
  // the one with the latest timestamp; on equal timestamps the later row wins.
  static RatingsDataset build(std::vector<Rating> ratings, RatingScale scale) {
    RatingsDataset ds;
    ds.scale_ = scale;

    struct PairHash {
      std::size_t operator()(const std::pair<RawId, RawId>& p) const noexcept {
        return std::hash<RawId>{}(p.first) * 0x9E3779B97F4A7C15ULL ^ std::hash<RawId>{}(p.second);
      }
    };
    std::unordered_map<std::pair<RawId, RawId>, std::size_t, PairHash> seen;
    seen.reserve(ratings.size());
    std::vector<Rating> kept;
    kept.reserve(ratings.size());
    for (auto& r : ratings) {
      const auto level = scale.level_of(r.value);
      if (!level) {
        throw ValidationError("rating " + std::to_string(r.value) + " for user " +
                              std::to_string(r.user) + " is not on the rating scale");
      }
      if (r.timestamp && *r.timestamp < 0) {
        throw ValidationError("negative timestamp for user " + std::to_string(r.user));
      }
      r.value = scale.value_of(*level);
      const auto [it, fresh] = seen.emplace(std::make_pair(r.user, r.item), kept.size());
      if (fresh) {
        kept.push_back(r);
      } else {
        Rating& prev = kept[it->second];
        if (r.timestamp.value_or(0) >= prev.timestamp.value_or(0)) prev = r;
      }
    }
    ds.ratings_ = std::move(kept);
    ds.index();
    return ds;
  }

  const std::vector<Rating>& ratings() const noexcept { return ratings_; }
  std::span<const Entry> entries() const noexcept { return entries_; }

  std::size_t n_users() const noexcept { return users_->size(); }
  std::size_t n_items() const noexcept { return items_->size(); }
  std::size_t n_ratings() const noexcept { return ratings_.size(); }
  bool empty() const noexcept { return ratings_.empty(); }

  const RatingScale& scale() const noexcept { return scale_; }

  const IdIndex& users() const noexcept { return *users_; }
  const IdIndex& items() const noexcept { return *items_; }
  std::shared_ptr<const IdIndex> shared_users() const noexcept { return users_; }
  std::shared_ptr<const IdIndex> shared_items() const noexcept { return items_; }

  // Ratings by one user, ascending item ordinal.
  std::span<const Cell> user_row(std::uint32_t user) const {
    return {by_user_.data() + user_offsets_[user], by_user_.data() + user_offsets_[user + 1]};
  }

  // Ratings of one item, ascending user ordinal.
  std::span<const Cell> item_column(std::uint32_t item) const {
    return {by_item_.data() + item_offsets_[item], by_item_.data() + item_offsets_[item + 1]};
  }

  double global_mean() const noexcept {
    if (entries_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& e : entries_) sum += e.value;
    return sum / static_cast<double>(entries_.size());
  }

 private:
  void index() {
    std::vector<RawId> uids, iids;
    uids.reserve(ratings_.size());
    iids.reserve(ratings_.size());
    for (const auto& r : ratings_) {
      uids.push_back(r.user);
      iids.push_back(r.item);
    }
    users_ = std::make_shared<IdIndex>(std::move(uids));
    items_ = std::make_shared<IdIndex>(std::move(iids));

    entries_.clear();
    entries_.reserve(ratings_.size());
    for (const auto& r : ratings_) {
      entries_.push_back({*users_->find(r.user), *items_->find(r.item), r.value});
    }

    build_csr(users_->size(), [](const Entry& e) { return e.user; },
              [](const Entry& e) { return e.item; }, user_offsets_, by_user_);
    build_csr(items_->size(), [](const Entry& e) { return e.item; },
              [](const Entry& e) { return e.user; }, item_offsets_, by_item_);
  }

  template <typename RowOf, typename ColOf>
  void build_csr(std::size_t rows, RowOf row_of, ColOf col_of, std::vector<std::size_t>& offsets,
                 std::vector<Cell>& cells) const {
    offsets.assign(rows + 1, 0);
    for (const auto& e : entries_) ++offsets[row_of(e) + 1];
    for (std::size_t r = 0; r < rows; ++r) offsets[r + 1] += offsets[r];
    cells.assign(entries_.size(), Cell{0, 0.0});
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (const auto& e : entries_) cells[cursor[row_of(e)]++] = Cell{col_of(e), e.value};
    for (std::size_t r = 0; r < rows; ++r) {
      std::sort(cells.begin() + static_cast<std::ptrdiff_t>(offsets[r]),
                cells.begin() + static_cast<std::ptrdiff_t>(offsets[r + 1]),
                [](const Cell& a, const Cell& b) { return a.index < b.index; });
    }
  }

  std::vector<Rating> ratings_;
  std::vector<Entry> entries_;
  std::shared_ptr<IdIndex> users_;
  std::shared_ptr<IdIndex> items_;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<Cell> by_user_;
  std::vector<std::size_t> item_offsets_{0};
  std::vector<Cell> by_item_;
  RatingScale scale_;
};

// ---------------------------------------------------------------------------
// Loading

enum class FileFormat { Ml100kTab, MlCsv, Ml1mColons };

inline FileFormat parse_file_format(std::string_view name) {
  if (name == "ml100k-tab") return FileFormat::Ml100kTab;
  if (name == "ml-csv") return FileFormat::MlCsv;
  if (name == "ml-1m-colons") return FileFormat::Ml1mColons;
  throw ArgumentError("unknown file format '" + std::string(name) +
                      "' (expected ml100k-tab, ml-csv or ml-1m-colons)");
}

inline std::string to_string(FileFormat format) {
  switch (format) {
    case FileFormat::Ml100kTab: return "ml100k-tab";
    case FileFormat::MlCsv: return "ml-csv";
    case FileFormat::Ml1mColons: return "ml-1m-colons";
  }
  return "?";
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, std::string_view sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + sep.size();
  }
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  field = trim(field);
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace detail

// Parses MovieLens rows from a stream. Line numbers in errors are 1-based.
inline RatingsDataset parse_movielens(std::istream& in, FileFormat format, RatingScale scale) {
  std::vector<Rating> rows;
  std::string line;
  std::size_t line_no = 0;
  const std::string_view sep = format == FileFormat::Ml100kTab   ? "\t"
                               : format == FileFormat::MlCsv     ? ","
                                                                 : "::";
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (format == FileFormat::MlCsv && line_no == 1) {
      if (text != "userId,movieId,rating,timestamp" && text != "userId,movieId,rating") {
        throw ParseError(line_no, "expected header 'userId,movieId,rating,timestamp'");
      }
      continue;
    }
    const auto fields = detail::split(text, sep);
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(line_no, "expected user, item, rating[, timestamp] but found " +
                                    std::to_string(fields.size()) + " fields");
    }
    Rating r;
    r.user = detail::parse_number<RawId>(fields[0], line_no, "user id");
    r.item = detail::parse_number<RawId>(fields[1], line_no, "item id");
    r.value = detail::parse_number<double>(fields[2], line_no, "rating");
    if (fields.size() == 4) {
      r.timestamp = detail::parse_number<std::int64_t>(fields[3], line_no, "timestamp");
    }
    if (!scale.contains(r.value)) {
      throw ValidationError("line " + std::to_string(line_no) + ": rating " +
                            std::string(detail::trim(fields[2])) + " is off the rating scale");
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw EmptyDatasetError("no ratings in input");
  return RatingsDataset::build(std::move(rows), scale);
}

inline RatingsDataset load_movielens(const std::string& path, FileFormat format, RatingScale scale) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ratings file '" + path + "'");
  return parse_movielens(in, format, scale);
}

// Writes ratings in a format parse_movielens reads back unchanged.
inline void write_movielens(std::ostream& out, const RatingsDataset& data, FileFormat format) {
  const char* sep = format == FileFormat::Ml100kTab ? "\t" : format == FileFormat::MlCsv ? "," : "::";
  const bool stamps = std::all_of(data.ratings().begin(), data.ratings().end(),
                                  [](const Rating& r) { return r.timestamp.has_value(); });
  if (format == FileFormat::MlCsv) out << (stamps ? "userId,movieId,rating,timestamp\n" : "userId,movieId,rating\n");
  char value[32];
  for (const auto& r : data.ratings()) {
    std::snprintf(value, sizeof value, "%.17g", r.value);
    out << r.user << sep << r.item << sep << value;
    if (stamps) out << sep << *r.timestamp;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Subsampling and cross-validation

// Exactly n ratings drawn uniformly without replacement; survivors keep their
// original relative order.
inline RatingsDataset subsample(const RatingsDataset& source, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > source.n_ratings()) {
    throw RangeError("subsample size " + std::to_string(n) + " outside 1.." +
                     std::to_string(source.n_ratings()));
  }
  auto order = shuffled_indices(source.n_ratings(), seed);
  order.resize(n);
  std::sort(order.begin(), order.end());
  std::vector<Rating> picked;
  picked.reserve(n);
  for (const auto k : order) picked.push_back(source.ratings()[k]);
  return RatingsDataset::build(std::move(picked), source.scale());
}

enum class FoldMode { RowBased, UserBased };

inline FoldMode parse_fold_mode(std::string_view name) {
  if (name == "row-based" || name == "row") return FoldMode::RowBased;
  if (name == "user-based" || name == "user") return FoldMode::UserBased;
  throw ArgumentError("unknown fold mode '" + std::string(name) + "' (expected row-based or user-based)");
}

inline std::string to_string(FoldMode mode) {
  return mode == FoldMode::RowBased ? "row-based" : "user-based";
}

struct TrainTestSplit {
  RatingsDataset train;
  RatingsDataset test;
  std::size_t fold_id = 0;
  std::uint64_t seed = 0;
};

// Block boundaries for splitting n shuffled units into k contiguous blocks
// whose sizes differ by at most one.
inline std::vector<std::size_t> fold_boundaries(std::size_t n, std::size_t k) {
  std::vector<std::size_t> bounds(k + 1, 0);
  for (std::size_t f = 0; f < k; ++f) bounds[f + 1] = bounds[f] + n / k + (f < n % k ? 1 : 0);
  return bounds;
}

inline std::vector<TrainTestSplit> crossfold(const RatingsDataset& source, std::size_t k, FoldMode mode,
                                             std::uint64_t seed) {
  if (k < 2) throw ArgumentError("crossfold needs at least 2 folds");
  const std::size_t population = mode == FoldMode::RowBased ? source.n_ratings() : source.n_users();
  if (k > population) {
    throw RangeError("cannot make " + std::to_string(k) + " folds from " + std::to_string(population) +
                     (mode == FoldMode::RowBased ? " ratings" : " users"));
  }
  const auto order = shuffled_indices(population, seed);
  const auto bounds = fold_boundaries(population, k);

  // fold_of[unit] for each rating (row-based) or user ordinal (user-based).
  std::vector<std::size_t> fold_of(population);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t p = bounds[f]; p < bounds[f + 1]; ++p) fold_of[order[p]] = f;
  }

  std::vector<TrainTestSplit> splits;
  splits.reserve(k);
  const auto& ratings = source.ratings();
  const auto entries = source.entries();
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<Rating> train, test;
    for (std::size_t r = 0; r < ratings.size(); ++r) {
      const std::size_t unit = mode == FoldMode::RowBased ? r : entries[r].user;
      (fold_of[unit] == f ? test : train).push_back(ratings[r]);
    }
    splits.push_back({RatingsDataset::build(std::move(train), source.scale()),
                      RatingsDataset::build(std::move(test), source.scale()), f, seed});
  }
  return splits;
}

}  // namespace recbench
