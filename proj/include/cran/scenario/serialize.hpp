#pragma once

// JSON form of a Scenario. Complex numbers are [re, im] pairs, matrices are
// row-major arrays of rows. Field names are listed in docs/scenario.schema.json.

#include <fstream>
#include <string>

#include <json.hpp>

#include "cran/scenario/scenario.hpp"

namespace cran::scenario {

using json = nlohmann::json;

namespace detail {

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw InvalidInput("complex value must be [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json vector_to_json(const CVector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(complex_to_json(v(i)));
  return a;
}

inline CVector vector_from_json(const json& j) {
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

inline json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_json(const json& j) {
  const auto n = static_cast<Eigen::Index>(j.size());
  CMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != n) throw InvalidInput("matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

}  // namespace detail

inline json to_json(const Scenario& s) {
  const auto& p = s.params;
  json params = {
      {"num_bs", p.num_bs},
      {"num_users", p.num_users},
      {"max_tx_power", p.max_tx_power},
      {"backhaul_capacity", p.backhaul_capacity},
      {"amplifier_efficiency", p.amplifier_efficiency},
      {"relative_power", p.relative_power},
      {"sleep_power", p.sleep_power},
      {"noise_power", p.noise_power},
      {"noise_reference", p.noise_reference},
      {"target_sinr", p.target_sinr},
      {"csi_accuracy", p.csi_accuracy},
      {"smoothing", p.smoothing},
      {"active_threshold", p.active_threshold},
      {"region_size", p.region_size},
  };
  json topo = {{"seed", s.topology.seed}, {"bs_positions", s.topology.bs_positions},
               {"user_positions", s.topology.user_positions}};
  json channels = json::array();
  for (const auto& c : s.channels)
    channels.push_back({{"h_tilde", detail::vector_to_json(c.h_tilde)},
                        {"error_shape", detail::matrix_to_json(c.error_shape)}});
  json content = {{"num_files", s.content.num_files},   {"popularity", s.content.popularity},
                  {"requests", s.content.requests},     {"cache_matrix", s.content.cache_matrix},
                  {"cache_size", s.content.cache_size}, {"alpha", s.content.alpha}};
  return {{"params", params}, {"topology", topo}, {"channels", channels}, {"content", content}, {"seed", s.seed}};
}

inline Scenario from_json(const json& j) {
  Scenario s;
  try {
    const auto& p = j.at("params");
    s.params.num_bs = p.at("num_bs").get<int>();
    s.params.num_users = p.at("num_users").get<int>();
    s.params.max_tx_power = p.at("max_tx_power").get<std::vector<double>>();
    s.params.backhaul_capacity = p.at("backhaul_capacity").get<std::vector<double>>();
    s.params.amplifier_efficiency = p.at("amplifier_efficiency").get<std::vector<double>>();
    s.params.relative_power = p.at("relative_power").get<std::vector<double>>();
    s.params.sleep_power = p.at("sleep_power").get<std::vector<double>>();
    s.params.noise_power = p.at("noise_power").get<std::vector<double>>();
    s.params.noise_reference = p.value("noise_reference", std::vector<double>{});
    s.params.target_sinr = p.at("target_sinr").get<std::vector<double>>();
    s.params.csi_accuracy = p.at("csi_accuracy").get<double>();
    s.params.smoothing = p.at("smoothing").get<double>();
    s.params.active_threshold = p.at("active_threshold").get<double>();
    s.params.region_size = p.at("region_size").get<double>();

    const auto& t = j.at("topology");
    s.topology.seed = t.at("seed").get<std::uint64_t>();
    s.topology.bs_positions = t.at("bs_positions").get<std::vector<Point>>();
    s.topology.user_positions = t.at("user_positions").get<std::vector<Point>>();

    for (const auto& c : j.at("channels"))
      s.channels.push_back({detail::vector_from_json(c.at("h_tilde")), detail::matrix_from_json(c.at("error_shape"))});

    const auto& c = j.at("content");
    s.content.num_files = c.at("num_files").get<int>();
    s.content.popularity = c.at("popularity").get<std::vector<double>>();
    s.content.requests = c.at("requests").get<std::vector<int>>();
    s.content.cache_matrix = c.at("cache_matrix").get<std::vector<std::vector<int>>>();
    s.content.cache_size = c.at("cache_size").get<std::vector<int>>();
    s.content.alpha = c.at("alpha").get<std::vector<int>>();
    s.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scenario json: ") + e.what());
  }
  s.validate();
  return s;
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << to_json(s).dump(2) << '\n';
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("scenario json: ") + e.what());
  }
  return from_json(j);
}

}  // namespace cran::scenario
