#include <gtest/gtest.h>

#include <array>
#include <utility>
#include <vector>

#include "recbench/neighborhood.hpp"
#include "toy_ratings.hpp"

using namespace recbench;

namespace {

const std::array<std::pair<RawId, RawId>, 10> kPairs{
    {{1, 2}, {1, 3}, {1, 4}, {1, 5}, {2, 3}, {2, 4}, {2, 5}, {3, 4}, {3, 5}, {4, 5}}};

KnnConfig config_for(Similarity s, std::size_t k = 40, bool mean_center = true) {
  KnnConfig c;
  c.similarity.variant = s;
  c.k_neighbors = k;
  c.mean_center = mean_center;
  return c;
}

std::shared_ptr<const RatingsDataset> dataset(std::vector<Rating> rows) {
  return std::make_shared<const RatingsDataset>(RatingsDataset::build(std::move(rows), RatingScale::whole_stars()));
}

struct OracleCase {
  Similarity kind;
  std::array<double, 10> sims;
  std::array<double, 4> centered;
  std::array<double, 4> raw;
};

// Produced by tests/oracles/neighborhood_oracle.py.
const std::array<OracleCase, 4> kOracle{{
    {Similarity::Cosine,
     {0.969765149118303, 0.6259686371487613, 0.9468641529479986, 0.9938837346736188, 0.6780635036208105,
      0.8541985556144386, 0.8660254037844386, 0.9065195959149355, 0.7581753965757455, 0.8436614877321075},
     {3.8888178515383736, 1.6012399479488002, 3.4158151007493203, 1.417965247685157},
     {3.506141267350388, 1.4683199305984003, 3.0435361074659415, 2.5343721981481253}},
    {Similarity::Msd,
     {0.5, 0.09375, 0.5, 0.13333333333333333, 0.13636363636363638, 0.2, 0.1764705882352941, 0.25, 0.25,
      0.10526315789473684},
     {3.223684210526316, 1.464285714285714, 4.0, 2.8017241379310347},
     {3.2105263157894735, 1.2857142857142858, 3.6666666666666665, 3.7586206896551726}},
    {Similarity::Pearson,
     {0.6546536707079772, -0.720576692122892, 0.6546536707079772, 0.0, -0.9607689228305226, -1.0,
      -0.8660254037844387, -0.3273268353539886, -0.3273268353539886, -1.0},
     {2.75, 1.25, 5.0, 2.89212228101117},
     {3.0, 1.0, 5.0, 2.89212228101117}},
    {Similarity::PearsonBaseline,
     {0.019206274893949875, -0.024737590014247045, 0.016205091322732287, -0.01629751726812277,
      -0.0240176371275413, -0.01939069425270493, -0.020962941410561646, -0.0019334514509031177,
      0.000265964669506712, -0.014491849730818148},
     {2.75, 1.25, 5.0, 4.25},
     {3.0, 1.0, 5.0, 5.0}},
}};

const std::array<std::pair<RawId, RawId>, 4> kQueries{{{1, 14}, {2, 13}, {4, 10}, {5, 11}}};

}  // namespace

TEST(Similarity, ParseNames) {
  EXPECT_EQ(parse_similarity("msd"), Similarity::Msd);
  EXPECT_EQ(parse_similarity("pearson_baseline"), Similarity::PearsonBaseline);
  EXPECT_EQ(to_string(Similarity::Cosine), "cosine");
  EXPECT_THROW(parse_similarity("jaccard"), ArgumentError);
}

TEST(Similarity, MatchesOracleAndIsSymmetric) {
  const auto train = shared_toy_ratings();
  for (const auto& c : kOracle) {
    const UserKnn knn(train, config_for(c.kind));
    for (std::size_t p = 0; p < kPairs.size(); ++p) {
      const auto u = static_cast<std::uint32_t>(kPairs[p].first - 1);
      const auto v = static_cast<std::uint32_t>(kPairs[p].second - 1);
      EXPECT_NEAR(knn.similarity(u, v), c.sims[p], 1e-12) << to_string(c.kind) << " pair " << p;
      EXPECT_NEAR(knn.similarity(v, u), c.sims[p], 1e-12) << to_string(c.kind) << " reversed pair " << p;
      EXPECT_NEAR(knn.similarity_row(u).sim[v], c.sims[p], 1e-12) << to_string(c.kind) << " row pair " << p;
    }
  }
}

TEST(Similarity, HandExamples) {
  const KnnConfig cfg;
  const std::vector<Cell> a{{0, 4}, {1, 3}};
  const std::vector<Cell> b{{0, 2}, {1, 4}, {2, 6}};
  const std::vector<Cell> c{{0, 1}, {1, 2}, {2, 3}};
  const std::vector<Cell> disjoint{{7, 5}};
  const auto sim = [&](const std::vector<Cell>& x, const std::vector<Cell>& y, Similarity s) {
    return similarity({std::nullopt, x}, {std::nullopt, y}, {s, 100.0}, nullptr, cfg);
  };
  EXPECT_DOUBLE_EQ(sim(a, a, Similarity::Cosine), 1.0);
  EXPECT_DOUBLE_EQ(sim(a, a, Similarity::Msd), 1.0);
  EXPECT_NEAR(sim(c, std::vector<Cell>{{0, 2}, {1, 4}, {2, 6}}, Similarity::Pearson), 1.0, 1e-15);
  for (const auto s : {Similarity::Cosine, Similarity::Msd, Similarity::Pearson}) {
    EXPECT_EQ(sim(a, disjoint, s), 0.0);
  }
  EXPECT_EQ(sim(std::vector<Cell>{{0, 3}, {1, 3}}, b, Similarity::Pearson), 0.0);
  EXPECT_THROW(sim(a, b, Similarity::PearsonBaseline), ArgumentError);

  KnnConfig strict;
  strict.min_support = 3;
  EXPECT_EQ(similarity({std::nullopt, a}, {std::nullopt, b}, {Similarity::Cosine, 0.0}, nullptr, strict), 0.0);
}

TEST(Similarity, RangesOnRandomProfiles) {
  std::mt19937 gen(5);
  std::uniform_int_distribution<int> rating(1, 5), keep(0, 1);
  const KnnConfig cfg;
  for (int t = 0; t < 200; ++t) {
    std::vector<Cell> x, y;
    for (std::uint32_t i = 0; i < 8; ++i) {
      if (keep(gen)) x.push_back({i, static_cast<double>(rating(gen))});
      if (keep(gen)) y.push_back({i, static_cast<double>(rating(gen))});
    }
    for (const auto s : {Similarity::Cosine, Similarity::Pearson}) {
      const double v = similarity({std::nullopt, x}, {std::nullopt, y}, {s, 0.0}, nullptr, cfg);
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
    const double m = similarity({std::nullopt, x}, {std::nullopt, y}, {Similarity::Msd, 0.0}, nullptr, cfg);
    EXPECT_GE(m, 0.0);
    EXPECT_LE(m, 1.0);
  }
}

TEST(UserKnn, PredictionsMatchOracle) {
  const auto train = shared_toy_ratings();
  for (const auto& c : kOracle) {
    for (const bool centered : {true, false}) {
      const UserKnn knn(train, config_for(c.kind, 2, centered));
      const auto& want = centered ? c.centered : c.raw;
      for (std::size_t q = 0; q < kQueries.size(); ++q) {
        EXPECT_NEAR(knn.predict(kQueries[q].first, kQueries[q].second), want[q], 1e-12)
            << to_string(c.kind) << (centered ? " centered" : " raw") << " query " << q;
      }
    }
  }
}

TEST(UserKnn, UnknownEntitiesFallBackToBaseline) {
  const UserKnn knn(shared_toy_ratings(), config_for(Similarity::Cosine));
  const auto& b = knn.baseline();
  EXPECT_DOUBLE_EQ(knn.predict(42, 10), predict_baseline(b, 42, 10, RatingScale::whole_stars()));
  EXPECT_DOUBLE_EQ(knn.predict(1, 99), predict_baseline(b, 1, 99, RatingScale::whole_stars()));
  EXPECT_THROW(knn.find_neighbors_by_id(42, std::vector<RawId>{10}), NotFoundError);
}

TEST(UserKnn, NeighborsSortedWithoutTarget) {
  const UserKnn knn(shared_toy_ratings(), config_for(Similarity::Msd));
  const std::vector<std::uint32_t> all{0, 1, 2, 3, 4, 5};
  for (std::uint32_t u = 0; u < 5; ++u) {
    const auto set = knn.find_neighbors(u, all);
    EXPECT_EQ(set.target, u);
    for (std::size_t k = 0; k < set.neighbors.size(); ++k) {
      EXPECT_NE(set.neighbors[k].user, u);
      if (k > 0) {
        EXPECT_GE(set.neighbors[k - 1].similarity, set.neighbors[k].similarity);
      }
    }
  }
}

TEST(UserKnn, SingleCoRaterIsTheOnlyNeighbor) {
  const auto train = dataset({{1, 1, 5, {}}, {1, 2, 3, {}}, {2, 1, 4, {}}, {2, 3, 2, {}}, {3, 4, 5, {}}});
  const UserKnn knn(train, config_for(Similarity::Msd));
  const auto set = knn.find_neighbors_by_id(1, std::vector<RawId>{3, 4});
  ASSERT_EQ(set.neighbors.size(), 1u);
  EXPECT_EQ(set.neighbors[0].user, 1u);
  EXPECT_DOUBLE_EQ(set.neighbors[0].similarity, 0.5);

  const auto lonely = knn.find_neighbors_by_id(3, std::vector<RawId>{1, 2, 3});
  EXPECT_TRUE(lonely.neighbors.empty());
}

TEST(UserKnn, TruncatesToK) {
  const UserKnn knn(shared_toy_ratings(), config_for(Similarity::Cosine, 1));
  UserKnn::SimilarityRow row{{0.0, 0.3, 0.9, 0.0, 0.0}, {0, 2, 2, 0, 0}};
  const std::vector<std::uint32_t> items{0, 1, 2, 3, 4, 5};
  const auto set = knn.select_neighbors(0, row, items);
  ASSERT_EQ(set.neighbors.size(), 1u);
  EXPECT_EQ(set.neighbors[0].user, 2u);
  EXPECT_DOUBLE_EQ(set.neighbors[0].similarity, 0.9);
}

TEST(UserKnn, ScoreHandExample) {
  // Target (user 1) has mean 3; neighbour (user 2) has mean 2 and rated item 10 as 4.
  const auto train = dataset({{1, 20, 3, {}}, {2, 10, 4, {}}, {2, 20, 1, {}}, {2, 30, 1, {}}});
  const UserKnn knn(train, config_for(Similarity::Cosine));
  const NeighborSet set{0, {{1, 0.5}}};
  EXPECT_DOUBLE_EQ(knn.score(0, *train->items().find(10), set), 5.0);
  // Nobody in the set rated item 30 except the neighbour; an empty set falls back.
  EXPECT_DOUBLE_EQ(knn.score(0, *train->items().find(30), NeighborSet{0, {}}),
                   RatingScale::whole_stars().clamp(knn.baseline().raw(0u, *train->items().find(30))));
}

TEST(UserKnn, IdenticalNeighborShiftsByItsDeviation) {
  const auto train = dataset({{1, 1, 4, {}}, {1, 2, 2, {}}, {2, 1, 4, {}}, {2, 2, 2, {}}, {2, 3, 5, {}}});
  const UserKnn knn(train, config_for(Similarity::Cosine));
  const double target_mean = 3.0;
  const double neighbor_mean = 11.0 / 3.0;
  EXPECT_DOUBLE_EQ(knn.score(0, 2, NeighborSet{0, {{1, 1.0}}}), target_mean + (5.0 - neighbor_mean));
}

TEST(UserKnn, MfinHandExample) {
  // Target T=user 1 rated D; v1 = user 2 {A:5, B:3}; v2 = user 3 {A:4, C:5}.
  enum : RawId { A = 1, B = 2, C = 3, D = 4 };
  const auto train = dataset({{1, D, 4, {}}, {2, A, 5, {}}, {2, B, 3, {}}, {3, A, 4, {}}, {3, C, 5, {}}});
  auto cfg = config_for(Similarity::Cosine);
  cfg.top_n = 2;
  cfg.pt_threshold = 4.0;
  const UserKnn knn(train, cfg);
  const NeighborSet set{0, {{1, 0.8}, {2, 0.6}}};
  const auto top = knn.top_n_mfin(0, set);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(train->items().id(top[0]), A);
  EXPECT_EQ(train->items().id(top[1]), C);

  cfg.pt_threshold = 6.0;
  EXPECT_TRUE(UserKnn(train, cfg).top_n_mfin(0, set).empty());
  cfg.pt_threshold = 4.0;
  cfg.top_n = 10;
  EXPECT_EQ(UserKnn(train, cfg).top_n_mfin(0, set).size(), 2u);
}

TEST(UserKnn, MfinNeverRecommendsRatedItems) {
  const auto train = shared_toy_ratings();
  auto cfg = config_for(Similarity::Msd);
  cfg.pt_threshold = 3.0;
  const UserKnn knn(train, cfg);
  const std::vector<std::uint32_t> all{0, 1, 2, 3, 4, 5};
  for (std::uint32_t u = 0; u < 5; ++u) {
    for (const auto i : knn.top_n_mfin(u, knn.find_neighbors(u, all))) {
      for (const auto& c : train->user_row(u)) EXPECT_NE(c.index, i);
    }
  }
}

TEST(KnnConfig, Validation) {
  auto cfg = config_for(Similarity::Cosine, 0);
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.k_neighbors = 1;
  cfg.min_support = 0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg.min_support = 1;
  cfg.similarity.shrinkage = -1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}
