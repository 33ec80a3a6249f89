#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "recbench/errors.hpp"
#include "recbench/factorization.hpp"
#include "recbench/neural.hpp"

// Model dumps are JSON objects of the form
//   {"format": "recbench-model", "version": 1, "kind": <kind>, ...}
// with matrices stored as {"rows", "cols", "data"} in row-major order and
// index mappings as the sorted raw ids (ordinal = position). Doubles are
// written in shortest round-trip form, so reading a dump back is exact.

namespace recbench {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json to_json(const Matrix& m) { return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}}; }

inline Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.data().size()) throw ParseError(0, "matrix data does not match its shape");
  m.data() = std::move(data);
  return m;
}

inline json to_json(const RatingScale& s) { return {{"min", s.min()}, {"max", s.max()}, {"step", s.step()}}; }

inline RatingScale scale_from_json(const json& j) {
  return {j.at("min").get<double>(), j.at("max").get<double>(), j.at("step").get<double>()};
}

inline json to_json(const std::shared_ptr<const IdIndex>& index) {
  return index ? json(index->ids()) : json::array();
}

inline std::shared_ptr<const IdIndex> index_from_json(const json& j) {
  return std::make_shared<const IdIndex>(j.get<std::vector<RawId>>());
}

inline json header(std::string_view kind) {
  return {{"format", "recbench-model"}, {"version", kModelFormatVersion}, {"kind", kind}};
}

inline void check_header(const json& j, std::string_view kind) {
  if (j.value("format", "") != "recbench-model") throw ParseError(0, "not a recbench model dump");
  if (j.value("version", 0) != kModelFormatVersion) throw ParseError(0, "unsupported model format version");
  if (j.value("kind", "") != kind) throw ParseError(0, "expected a '" + std::string(kind) + "' model");
}

}  // namespace detail

inline nlohmann::json to_json(const MfModel& m) {
  auto j = detail::header("mf");
  j["mu"] = m.mu;
  j["biased"] = m.biased;
  j["b_user"] = m.b_user;
  j["b_item"] = m.b_item;
  j["P"] = detail::to_json(m.P);
  j["Q"] = detail::to_json(m.Q);
  j["scale"] = detail::to_json(m.scale);
  j["users"] = detail::to_json(m.users);
  j["items"] = detail::to_json(m.items);
  return j;
}

inline MfModel mf_model_from_json(const nlohmann::json& j) {
  detail::check_header(j, "mf");
  MfModel m;
  m.mu = j.at("mu").get<double>();
  m.biased = j.at("biased").get<bool>();
  m.b_user = j.at("b_user").get<std::vector<double>>();
  m.b_item = j.at("b_item").get<std::vector<double>>();
  m.P = detail::matrix_from_json(j.at("P"));
  m.Q = detail::matrix_from_json(j.at("Q"));
  m.scale = detail::scale_from_json(j.at("scale"));
  m.users = detail::index_from_json(j.at("users"));
  m.items = detail::index_from_json(j.at("items"));
  return m;
}

inline nlohmann::json to_json(const SvdppModel& m) {
  auto j = detail::header("svdpp");
  auto base = to_json(m.base);
  base.erase("format");
  base.erase("version");
  base.erase("kind");
  j["base"] = std::move(base);
  j["Y"] = detail::to_json(m.Y);
  j["implicit_offsets"] = m.implicit_offsets;
  j["implicit_items"] = m.implicit_items;
  return j;
}

inline SvdppModel svdpp_model_from_json(const nlohmann::json& j) {
  detail::check_header(j, "svdpp");
  auto base = j.at("base");
  base.update(detail::header("mf"));
  SvdppModel m;
  m.base = mf_model_from_json(base);
  m.Y = detail::matrix_from_json(j.at("Y"));
  m.implicit_offsets = j.at("implicit_offsets").get<std::vector<std::size_t>>();
  m.implicit_items = j.at("implicit_items").get<std::vector<std::uint32_t>>();
  return m;
}

inline nlohmann::json to_json(const RbmModel& m) {
  auto j = detail::header("rbm");
  j["n_items"] = m.n_items;
  j["levels"] = m.levels;
  j["hidden"] = m.hidden;
  j["W"] = m.W;
  j["vb"] = m.vb;
  j["hb"] = m.hb;
  j["scale"] = detail::to_json(m.scale);
  j["fallback"] = m.fallback;
  j["users"] = detail::to_json(m.users);
  j["items"] = detail::to_json(m.items);
  return j;
}

inline RbmModel rbm_model_from_json(const nlohmann::json& j) {
  detail::check_header(j, "rbm");
  RbmModel m;
  m.n_items = j.at("n_items").get<std::size_t>();
  m.levels = j.at("levels").get<int>();
  m.hidden = j.at("hidden").get<std::size_t>();
  m.W = j.at("W").get<std::vector<double>>();
  m.vb = j.at("vb").get<std::vector<double>>();
  m.hb = j.at("hb").get<std::vector<double>>();
  m.scale = detail::scale_from_json(j.at("scale"));
  m.fallback = j.at("fallback").get<double>();
  m.users = detail::index_from_json(j.at("users"));
  m.items = detail::index_from_json(j.at("items"));
  const std::size_t units = m.n_items * static_cast<std::size_t>(m.levels);
  if (m.W.size() != units * m.hidden || m.vb.size() != units || m.hb.size() != m.hidden) {
    throw ParseError(0, "rbm dump has inconsistent dimensions");
  }
  return m;
}

inline nlohmann::json to_json(const AutoRecModel& m) {
  auto j = detail::header("autoencoder");
  j["n_items"] = m.n_items;
  j["levels"] = m.levels;
  j["hidden"] = m.hidden;
  j["V"] = detail::to_json(m.V);
  j["W"] = detail::to_json(m.W);
  j["mu_h"] = m.mu_h;
  j["b_v"] = m.b_v;
  j["scale"] = detail::to_json(m.scale);
  j["fallback"] = m.fallback;
  j["users"] = detail::to_json(m.users);
  j["items"] = detail::to_json(m.items);
  return j;
}

inline AutoRecModel autorec_model_from_json(const nlohmann::json& j) {
  detail::check_header(j, "autoencoder");
  AutoRecModel m;
  m.n_items = j.at("n_items").get<std::size_t>();
  m.levels = j.at("levels").get<int>();
  m.hidden = j.at("hidden").get<std::size_t>();
  m.V = detail::matrix_from_json(j.at("V"));
  m.W = detail::matrix_from_json(j.at("W"));
  m.mu_h = j.at("mu_h").get<std::vector<double>>();
  m.b_v = j.at("b_v").get<std::vector<double>>();
  m.scale = detail::scale_from_json(j.at("scale"));
  m.fallback = j.at("fallback").get<double>();
  m.users = detail::index_from_json(j.at("users"));
  m.items = detail::index_from_json(j.at("items"));
  if (m.V.rows() != m.visible() || m.W.rows() != m.visible() || m.mu_h.size() != m.hidden || m.b_v.size() != m.visible()) {
    throw ParseError(0, "autoencoder dump has inconsistent dimensions");
  }
  return m;
}

inline void save_model(const nlohmann::json& dump, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << dump.dump() << '\n';
  if (!out) throw IoError("failed writing " + path);
}

inline nlohmann::json load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, e.what());
  }
}

}  // namespace recbench
