#pragma once

// Experiment configuration and its JSON form. Physical parameters use
// user-facing units (W, dBm, dB); omitted keys keep their defaults.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cran/mm/mm_loop.hpp"
#include "cran/recovery/rank_recovery.hpp"
#include "cran/scenario/scenario.hpp"
#include "cran/sdp/solver.hpp"

namespace cran::experiment {

using json = nlohmann::json;

enum class Mode { single, convergence, sinr_sweep, cache_sweep };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::single: return "single";
    case Mode::convergence: return "convergence";
    case Mode::sinr_sweep: return "sinr_sweep";
    case Mode::cache_sweep: return "cache_sweep";
  }
  return "unknown";
}

inline Mode parse_mode(const std::string& s) {
  if (s == "single") return Mode::single;
  if (s == "convergence") return Mode::convergence;
  if (s == "sinr_sweep") return Mode::sinr_sweep;
  if (s == "cache_sweep") return Mode::cache_sweep;
  throw InvalidInput("unknown mode '" + s + "'");
}

inline scenario::RequestMode parse_request_mode(const std::string& s) {
  if (s == "zipf") return scenario::RequestMode::zipf;
  if (s == "common") return scenario::RequestMode::common;
  if (s == "half_common") return scenario::RequestMode::half_common;
  throw InvalidInput("unknown request mode '" + s + "'");
}

inline const char* to_string(scenario::RequestMode m) {
  switch (m) {
    case scenario::RequestMode::zipf: return "zipf";
    case scenario::RequestMode::common: return "common";
    case scenario::RequestMode::half_common: return "half_common";
  }
  return "unknown";
}

// "3", "1,4,9" or "1-20" (ranges may be mixed with commas).
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(item));
      } else {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        if (hi < lo) throw InvalidInput("empty seed range '" + item + "'");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw InvalidInput("bad seed list '" + text + "'");
    }
  }
  if (out.empty()) throw InvalidInput("empty seed list");
  return out;
}

struct ExperimentConfig {
  Mode mode = Mode::single;
  scenario::ScenarioSpec scenario;
  /// Single mode only: run on this saved scenario instead of generating one.
  std::string scenario_file;

  std::vector<std::uint64_t> seeds;  // empty: 1..n_realizations
  int n_realizations = 20;
  std::vector<double> sinr_grid_db;  // empty: mode default
  std::vector<int> cache_sizes;      // empty: mode default

  std::string output_dir = "results";
  int workers = 1;
  bool record_timing = false;  // adds wall_ms to trace files
  bool verbose = false;

  mm::MmParams mm;
  sdp::SolverOptions solver;
  recovery::RecoveryOptions recovery;
  int verify_samples = 10000;

  std::vector<std::uint64_t> effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> s;
    for (int i = 1; i <= n_realizations; ++i) s.push_back(static_cast<std::uint64_t>(i));
    return s;
  }

  std::vector<double> effective_sinr_grid() const {
    if (!sinr_grid_db.empty()) return sinr_grid_db;
    if (mode == Mode::sinr_sweep) return {0.0, 5.0, 10.0, 15.0};
    return {scenario.params.target_sinr_db};
  }

  std::vector<int> effective_cache_sizes() const {
    if (!cache_sizes.empty()) return cache_sizes;
    const int F = scenario.num_files;
    if (mode == Mode::cache_sweep) return {0, F / 4, F / 2, F};
    if (mode == Mode::sinr_sweep) return {0, F};
    return {scenario.cache_size};
  }

  void validate() const {
    require(n_realizations >= 1, "n_realizations must be >= 1");
    require(workers >= 1, "workers must be >= 1");
    require(verify_samples >= 0, "verify_samples must be >= 0");
    require(mm.max_outer_iters >= 1, "max_iters must be >= 1");
    require(mm.epsilon > 0.0, "epsilon must be > 0");
    require(scenario.num_bs >= 1 && scenario.num_users >= 1, "num_bs and num_users must be >= 1");
    require(scenario.num_files >= 1, "num_files must be >= 1");
    const auto s = effective_seeds();
    require(std::set<std::uint64_t>(s.begin(), s.end()).size() == s.size(), "seeds must be distinct");
    require(!effective_sinr_grid().empty(), "sinr grid must be nonempty");
    for (int c : effective_cache_sizes())
      require(c >= 0 && c <= scenario.num_files, "cache sizes must lie in [0, num_files]");
    require(!effective_cache_sizes().empty(), "cache size grid must be nonempty");
    require(scenario_file.empty() || mode == Mode::single || mode == Mode::convergence,
            "scenario_file is only supported in single and convergence modes");
  }
};

namespace detail {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    detail::read(j, "scenario_file", c.scenario_file);
    detail::read(j, "seeds", c.seeds);
    detail::read(j, "n_realizations", c.n_realizations);
    detail::read(j, "sinr_grid_db", c.sinr_grid_db);
    detail::read(j, "cache_sizes", c.cache_sizes);
    detail::read(j, "output_dir", c.output_dir);
    detail::read(j, "workers", c.workers);
    detail::read(j, "record_timing", c.record_timing);
    detail::read(j, "verbose", c.verbose);
    detail::read(j, "verify_samples", c.verify_samples);

    if (j.contains("scenario")) {
      const auto& s = j.at("scenario");
      auto& sp = c.scenario;
      auto& h = sp.params;
      detail::read(s, "num_bs", sp.num_bs);
      detail::read(s, "num_users", sp.num_users);
      detail::read(s, "num_files", sp.num_files);
      detail::read(s, "zipf_skew", sp.zipf_skew);
      if (s.contains("request_mode")) sp.request_mode = parse_request_mode(s.at("request_mode").get<std::string>());
      detail::read(s, "cache_size", sp.cache_size);
      detail::read(s, "noise_normalized", sp.noise_normalized);
      detail::read(s, "max_tx_power_w", h.max_tx_power_w);
      detail::read(s, "backhaul_capacity", h.backhaul_capacity);
      detail::read(s, "amplifier_efficiency", h.amplifier_efficiency);
      detail::read(s, "relative_power_w", h.relative_power_w);
      detail::read(s, "sleep_power_w", h.sleep_power_w);
      detail::read(s, "noise_power_dbm", h.noise_power_dbm);
      detail::read(s, "target_sinr_db", h.target_sinr_db);
      detail::read(s, "csi_accuracy", h.csi_accuracy);
      detail::read(s, "active_threshold_w", h.active_threshold_w);
      detail::read(s, "region_size_m", h.region_size_m);
    }
    if (j.contains("mm")) {
      const auto& m = j.at("mm");
      detail::read(m, "epsilon", c.mm.epsilon);
      detail::read(m, "epsilon_schedule", c.mm.epsilon_schedule);
      detail::read(m, "cost_rel_tol", c.mm.cost_rel_tol);
      detail::read(m, "max_iters", c.mm.max_outer_iters);
    }
    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      detail::read(s, "feas_tol", c.solver.feas_tol);
      detail::read(s, "opt_tol", c.solver.opt_tol);
      detail::read(s, "max_iters", c.solver.max_iters);
    }
    if (j.contains("recovery")) {
      const auto& r = j.at("recovery");
      detail::read(r, "rank_tol", c.recovery.rank_tol);
      detail::read(r, "n_candidates", c.recovery.randomization.n_candidates);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  c.scenario.params.smoothing = c.mm.epsilon;
  c.validate();
  return c;
}

inline json config_to_json(const ExperimentConfig& c) {
  const auto& sp = c.scenario;
  const auto& h = sp.params;
  json j = {
      {"mode", to_string(c.mode)},
      {"seeds", c.effective_seeds()},
      {"n_realizations", c.n_realizations},
      {"sinr_grid_db", c.effective_sinr_grid()},
      {"cache_sizes", c.effective_cache_sizes()},
      {"output_dir", c.output_dir},
      {"workers", c.workers},
      {"record_timing", c.record_timing},
      {"verify_samples", c.verify_samples},
      {"scenario",
       {{"num_bs", sp.num_bs},
        {"num_users", sp.num_users},
        {"num_files", sp.num_files},
        {"zipf_skew", sp.zipf_skew},
        {"request_mode", to_string(sp.request_mode)},
        {"cache_size", sp.cache_size},
        {"noise_normalized", sp.noise_normalized},
        {"max_tx_power_w", h.max_tx_power_w},
        {"backhaul_capacity", h.backhaul_capacity},
        {"amplifier_efficiency", h.amplifier_efficiency},
        {"relative_power_w", h.relative_power_w},
        {"sleep_power_w", h.sleep_power_w},
        {"noise_power_dbm", h.noise_power_dbm},
        {"target_sinr_db", h.target_sinr_db},
        {"csi_accuracy", h.csi_accuracy},
        {"active_threshold_w", h.active_threshold_w},
        {"region_size_m", h.region_size_m}}},
      {"mm",
       {{"epsilon", c.mm.epsilon},
        {"epsilon_schedule", c.mm.epsilon_schedule},
        {"cost_rel_tol", c.mm.cost_rel_tol},
        {"max_iters", c.mm.max_outer_iters}}},
      {"solver", {{"feas_tol", c.solver.feas_tol}, {"opt_tol", c.solver.opt_tol}, {"max_iters", c.solver.max_iters}}},
      {"recovery", {{"rank_tol", c.recovery.rank_tol}, {"n_candidates", c.recovery.randomization.n_candidates}}},
  };
  if (!c.scenario_file.empty()) j["scenario_file"] = c.scenario_file;
  return j;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace cran::experiment
