#include <gtest/gtest.h>

#include <filesystem>

#include "neural_checks.hpp"
#include "recbench/serialization.hpp"
#include "toy_ratings.hpp"

using namespace recbench;

namespace {

nlohmann::json through_text(const nlohmann::json& j) { return nlohmann::json::parse(j.dump()); }

void expect_same_index(const std::shared_ptr<const IdIndex>& a, const std::shared_ptr<const IdIndex>& b) {
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->ids(), b->ids());
}

void expect_same(const MfModel& a, const MfModel& b) {
  EXPECT_EQ(a.mu, b.mu);
  EXPECT_EQ(a.biased, b.biased);
  EXPECT_EQ(a.b_user, b.b_user);
  EXPECT_EQ(a.b_item, b.b_item);
  EXPECT_EQ(a.P, b.P);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.scale, b.scale);
  expect_same_index(a.users, b.users);
  expect_same_index(a.items, b.items);
}

}  // namespace

TEST(Serialization, MfRoundTripIsExact) {
  SgdConfig cfg;
  cfg.factors = 7;
  cfg.seed = 3;
  const auto m = sgd_fit(toy_ratings(), cfg);
  const auto back = mf_model_from_json(through_text(to_json(m)));
  expect_same(m, back);
  for (RawId u = 1; u <= 5; ++u) {
    for (RawId i = 10; i <= 15; ++i) EXPECT_EQ(mf_predict(m, u, i), mf_predict(back, u, i));
  }
}

TEST(Serialization, AlsUnbiasedRoundTrip) {
  AlsConfig cfg;
  cfg.bias_enabled = false;
  cfg.features = 3;
  const auto m = als_fit(toy_ratings(), cfg);
  expect_same(m, mf_model_from_json(through_text(to_json(m))));
}

TEST(Serialization, SvdppRoundTripIsExact) {
  SgdConfig cfg;
  cfg.factors = 4;
  const auto m = svdpp_fit(toy_ratings(), cfg);
  const auto back = svdpp_model_from_json(through_text(to_json(m)));
  expect_same(m.base, back.base);
  EXPECT_EQ(m.Y, back.Y);
  EXPECT_EQ(m.implicit_offsets, back.implicit_offsets);
  EXPECT_EQ(m.implicit_items, back.implicit_items);
  EXPECT_EQ(mf_predict(m, 3, 12), mf_predict(back, 3, 12));
}

TEST(Serialization, RbmRoundTripIsExact) {
  RbmConfig cfg;
  cfg.hidden = 5;
  cfg.epochs = 2;
  cfg.lr = 0.1;
  const auto data = checks::taste_groups(10, 5, 1);
  const auto m = rbm_fit(data, cfg);
  const auto back = rbm_model_from_json(through_text(to_json(m)));
  EXPECT_EQ(m.W, back.W);
  EXPECT_EQ(m.vb, back.vb);
  EXPECT_EQ(m.hb, back.hb);
  EXPECT_EQ(m.levels, back.levels);
  EXPECT_EQ(m.fallback, back.fallback);
  EXPECT_EQ(m.scale, back.scale);
  expect_same_index(m.items, back.items);
}

TEST(Serialization, AutoencoderRoundTripIsExact) {
  AeConfig cfg;
  cfg.hidden = 3;
  cfg.epochs = 2;
  const auto data = checks::taste_groups(10, 5, 1);
  const auto m = ae_fit(data, cfg);
  const auto back = autorec_model_from_json(through_text(to_json(m)));
  EXPECT_EQ(m.V, back.V);
  EXPECT_EQ(m.W, back.W);
  EXPECT_EQ(m.mu_h, back.mu_h);
  EXPECT_EQ(m.b_v, back.b_v);
  EXPECT_EQ(m.fallback, back.fallback);
  expect_same_index(m.users, back.users);
}

TEST(Serialization, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "recbench_model_roundtrip.json";
  SgdConfig cfg;
  cfg.factors = 2;
  const auto m = sgd_fit(toy_ratings(), cfg);
  save_model(to_json(m), path.string());
  expect_same(m, mf_model_from_json(load_model(path.string())));
  std::filesystem::remove(path);
}

TEST(Serialization, RejectsForeignOrDamagedDumps) {
  SgdConfig cfg;
  cfg.factors = 2;
  const auto dump = to_json(sgd_fit(toy_ratings(), cfg));
  EXPECT_THROW(rbm_model_from_json(dump), ParseError);

  auto versioned = dump;
  versioned["version"] = 99;
  EXPECT_THROW(mf_model_from_json(versioned), ParseError);

  auto misshapen = dump;
  misshapen["P"]["rows"] = 1;
  EXPECT_THROW(mf_model_from_json(misshapen), ParseError);

  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
  const auto junk = std::filesystem::temp_directory_path() / "recbench_junk.json";
  std::ofstream(junk) << "{ not json";
  EXPECT_THROW(load_model(junk.string()), ParseError);
  std::filesystem::remove(junk);
}
