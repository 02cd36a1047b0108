#pragma once

// Experiment harness: scenario -> MM loop -> rank-one recovery -> evaluation
// for every (seed, SINR target, cache size), run on a bounded worker pool and
// written out in grid order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "cran/eval/evaluator.hpp"
#include "cran/experiment/config.hpp"
#include "cran/mm/mm_loop.hpp"
#include "cran/recovery/rank_recovery.hpp"
#include "cran/scenario/serialize.hpp"

namespace cran::experiment {

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunStatus { ok, infeasible, degraded, recovery_failed, error };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::infeasible: return "infeasible";
    case RunStatus::degraded: return "degraded";
    case RunStatus::recovery_failed: return "recovery-failed";
    case RunStatus::error: return "error";
  }
  return "unknown";
}

struct RunKey {
  std::uint64_t seed = 0;
  double sinr_db = 0.0;
  int cache_size = 0;
};

struct RunResult {
  RunKey key;
  RunStatus status = RunStatus::error;
  std::string message;
  int mm_iterations = 0;
  bool converged = false;
  double smoothed_cost = 0.0;  // last MM iterate
  double relaxed_cost = 0.0;   // true cost read off the relaxed W_u
  bool recovered = false;
  recovery::BeamSolution solution;
  eval::CostBreakdown cost;
  double max_rank_ratio = 0.0;
  bool verified = false;
  double min_sinr_margin = 0.0;
  std::vector<mm::TraceRecord> trace;
  double wall_s = 0.0;

  /// A recovered, verified beamformer exists (possibly after a degraded MM run).
  bool usable() const { return recovered && verified && (status == RunStatus::ok || status == RunStatus::degraded); }
};

inline scenario::Scenario build_scenario(const ExperimentConfig& c, const RunKey& k) {
  if (!c.scenario_file.empty()) return scenario::load_scenario(c.scenario_file);
  scenario::ScenarioSpec spec = c.scenario;
  spec.params.target_sinr_db = k.sinr_db;
  spec.cache_size = k.cache_size;
  return scenario::make_scenario(spec, k.seed);
}

/// Pipeline on one scenario; never throws for solver-side failures.
inline RunResult run_one(const scenario::Scenario& s, const ExperimentConfig& c, const RunKey& key) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.key = key;
  auto finish = [&]() -> RunResult {
    r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  mm::MmResult m;
  try {
    m = mm::run(s, c.mm, c.solver);
  } catch (const ScenarioInfeasible& e) {
    r.status = RunStatus::infeasible;
    r.message = e.what();
    return finish();
  }
  r.trace = m.trace;
  r.mm_iterations = mm::iterations_to_convergence(m);
  r.converged = m.converged;
  if (!m.has_solution) {
    r.status = RunStatus::degraded;
    r.message = m.message;
    return finish();
  }
  r.smoothed_cost = mm::smoothed_cost(m.point, s, c.mm.epsilon_schedule.empty() ? c.mm.epsilon : c.mm.epsilon_schedule.back());
  r.relaxed_cost = mm::true_cost(m.point, s);

  auto sol = recovery::recover(m.point.W, s, c.recovery, split_seed(key.seed, 7));
  if (!sol) {
    r.status = RunStatus::recovery_failed;
    r.message = "no robustly feasible rank-one candidate";
    return finish();
  }
  r.recovered = true;
  r.solution = *sol;
  for (double x : sol->rank_one_ratio) r.max_rank_ratio = std::max(r.max_rank_ratio, x);
  r.cost = eval::cost_breakdown(*sol, s, s.params.active_threshold);
  const auto margins = recovery::verify_candidate(*sol, s, c.verify_samples, split_seed(key.seed, 8));
  r.verified = margins.ok(c.recovery.randomization.feas_tol, 1e-4) && margins.all_certified();
  r.min_sinr_margin = margins.sinr_margin.empty() ? 0.0 : *std::min_element(margins.sinr_margin.begin(), margins.sinr_margin.end());
  if (!r.verified) {
    r.status = RunStatus::recovery_failed;
    r.message = "recovered beamformers failed verification";
  } else if (m.degraded) {
    r.status = RunStatus::degraded;
    r.message = m.message;
  } else {
    r.status = RunStatus::ok;
  }
  return finish();
}

namespace detail {

/// Runs that differ only in cache size produce identical problems whenever the
/// cached (BS, user) pattern and the fetch flags coincide.
inline std::string content_signature(const scenario::Scenario& s) {
  std::string sig;
  for (int b = 0; b < s.num_bs(); ++b) {
    sig += s.content.alpha[static_cast<std::size_t>(b)] ? 'a' : '-';
    for (int u = 0; u < s.num_users(); ++u) sig += s.content.cached(b, u) ? '1' : '0';
  }
  return sig;
}

}  // namespace detail

/// Executes the runs on `workers` threads. Results come back in the order of
/// `keys`; runs whose problems coincide are solved once.
inline std::vector<RunResult> run_grid(const ExperimentConfig& c, const std::vector<RunKey>& keys,
                                       std::ostream* log = nullptr) {
  struct Job {
    RunKey key;
    scenario::Scenario scenario;
    std::vector<std::size_t> targets;
  };
  std::vector<Job> jobs;
  std::vector<RunResult> out(keys.size());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    scenario::Scenario s = build_scenario(c, keys[i]);
    char head[96];
    std::snprintf(head, sizeof head, "%llu|%.17g|", static_cast<unsigned long long>(keys[i].seed), keys[i].sinr_db);
    const std::string sig = head + detail::content_signature(s);
    auto it = index.find(sig);
    if (it != index.end()) {
      jobs[it->second].targets.push_back(i);
      continue;
    }
    index.emplace(sig, jobs.size());
    jobs.push_back({keys[i], std::move(s), {i}});
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  std::size_t done = 0;
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      RunResult r;
      try {
        r = run_one(jobs[j].scenario, c, jobs[j].key);
      } catch (const std::exception& e) {
        r.key = jobs[j].key;
        r.status = RunStatus::error;
        r.message = e.what();
      }
      for (std::size_t t : jobs[j].targets) {
        out[t] = r;
        out[t].key = keys[t];
      }
      if (log) {
        std::lock_guard<std::mutex> lock(log_mu);
        ++done;
        char buf[200];
        std::snprintf(buf, sizeof buf, "[%zu/%zu] seed %llu sinr %g dB cache %d: %s (%d MM iterations, %.1f s)\n", done,
                      jobs.size(), static_cast<unsigned long long>(r.key.seed), r.key.sinr_db, r.key.cache_size,
                      to_string(r.status), r.mm_iterations, r.wall_s);
        *log << buf << std::flush;
      }
    }
  };
  const int n = std::max(1, std::min<int>(c.workers, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct SweepRow {
  double sinr_db = 0.0;
  int cache_size = 0;
  int runs = 0;
  int usable = 0;
  int averaged = 0;  // seeds usable at every cache size for this SINR target
  double mean_backhaul_cost = 0.0;
  double mean_total_power = 0.0;
  double mean_transmit_power = 0.0;
  double mean_total_cost = 0.0;
  double mean_active_bs = 0.0;

  bool feasible() const { return averaged > 0; }
};

/// Means per (SINR, cache size) over the seeds that are usable for every
/// cache size at that SINR, so the curves compare identical channel draws.
inline std::vector<SweepRow> summarize_sweep(const std::vector<RunResult>& results, const std::vector<double>& sinr_grid,
                                             const std::vector<int>& cache_sizes) {
  std::vector<SweepRow> rows;
  for (double d : sinr_grid) {
    std::map<std::uint64_t, int> usable_count;
    for (const auto& r : results)
      if (r.key.sinr_db == d && r.usable()) ++usable_count[r.key.seed];
    for (int cs : cache_sizes) {
      SweepRow row;
      row.sinr_db = d;
      row.cache_size = cs;
      for (const auto& r : results) {
        if (r.key.sinr_db != d || r.key.cache_size != cs) continue;
        ++row.runs;
        if (r.usable()) ++row.usable;
        if (!r.usable() || usable_count[r.key.seed] != static_cast<int>(cache_sizes.size())) continue;
        ++row.averaged;
        row.mean_backhaul_cost += r.cost.backhaul_cost;
        row.mean_total_power += r.cost.total_power();
        row.mean_transmit_power += r.cost.transmit_power;
        row.mean_total_cost += r.cost.total_cost;
        row.mean_active_bs += r.cost.active_bs;
      }
      if (row.averaged > 0) {
        const double n = row.averaged;
        row.mean_backhaul_cost /= n;
        row.mean_total_power /= n;
        row.mean_transmit_power /= n;
        row.mean_total_cost /= n;
        row.mean_active_bs /= n;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw OutputError("cannot write " + p.string());
  return out;
}

inline std::string run_tag(const RunKey& k) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "seed%llu_sinr%g_cache%d", static_cast<unsigned long long>(k.seed), k.sinr_db,
                k.cache_size);
  return buf;
}

}  // namespace detail

inline void write_runs_csv(const std::vector<RunResult>& results, std::ostream& out) {
  using detail::fmt;
  out << "seed,sinr_db,cache_size,status,mm_iterations,converged,smoothed_cost,relaxed_cost,total_cost,"
         "backhaul_cost,transmit_power,total_power,active_bs,recovered_via,max_rank_ratio,verified,min_sinr_margin\n";
  for (const auto& r : results) {
    out << r.key.seed << ',' << fmt(r.key.sinr_db) << ',' << r.key.cache_size << ',' << to_string(r.status) << ','
        << r.mm_iterations << ',' << (r.converged ? 1 : 0) << ',' << fmt(r.smoothed_cost) << ',' << fmt(r.relaxed_cost)
        << ',';
    if (r.recovered)
      out << fmt(r.cost.total_cost) << ',' << fmt(r.cost.backhaul_cost) << ',' << fmt(r.cost.transmit_power) << ','
          << fmt(r.cost.total_power()) << ',' << r.cost.active_bs << ',' << recovery::to_string(r.solution.recovered_via)
          << ',' << fmt(r.max_rank_ratio) << ',' << (r.verified ? 1 : 0) << ',' << fmt(r.min_sinr_margin) << '\n';
    else
      out << ",,,,,,,0,\n";
  }
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  using detail::fmt;
  out << "sinr_db,cache_size,runs,usable,averaged,mean_backhaul_cost,mean_total_power,mean_transmit_power,"
         "mean_total_cost,mean_active_bs\n";
  for (const auto& r : rows) {
    out << fmt(r.sinr_db) << ',' << r.cache_size << ',' << r.runs << ',' << r.usable << ',' << r.averaged << ',';
    if (r.feasible())
      out << fmt(r.mean_backhaul_cost) << ',' << fmt(r.mean_total_power) << ',' << fmt(r.mean_transmit_power) << ','
          << fmt(r.mean_total_cost) << ',' << fmt(r.mean_active_bs) << '\n';
    else
      out << ",,,,\n";
  }
}

inline void write_convergence_csv(const std::vector<RunResult>& results, std::ostream& out) {
  out << "seed,iter,smoothed_cost,true_cost\n";
  for (const auto& r : results)
    for (const auto& t : r.trace)
      out << r.key.seed << ',' << t.iter << ',' << detail::fmt(t.smoothed_cost) << ',' << detail::fmt(t.true_cost) << '\n';
}

inline void write_convergence_summary(const std::vector<RunResult>& results, double opt_tol, std::ostream& out) {
  out << "seed,status,iterations,converged,monotone,max_relative_increase,final_smoothed_cost\n";
  for (const auto& r : results) {
    const double inc = mm::max_relative_increase(r.trace);
    out << r.key.seed << ',' << to_string(r.status) << ',' << r.mm_iterations << ',' << (r.converged ? 1 : 0) << ','
        << (inc <= 10.0 * opt_tol ? 1 : 0) << ',' << detail::fmt(inc) << ','
        << detail::fmt(r.trace.empty() ? 0.0 : r.trace.back().smoothed_cost) << '\n';
  }
}

inline std::vector<RunKey> grid_keys(const ExperimentConfig& c) {
  std::vector<RunKey> keys;
  const auto seeds = c.effective_seeds();
  const auto grid = c.effective_sinr_grid();
  const auto caches = c.effective_cache_sizes();
  if (c.mode == Mode::single || c.mode == Mode::convergence) {
    for (auto s : seeds) keys.push_back({s, grid.front(), caches.front()});
    return keys;
  }
  for (double d : grid)
    for (int cs : caches)
      for (auto s : seeds) keys.push_back({s, d, cs});
  return keys;
}

/// Runs the configured experiment and writes its files into
/// config.output_dir. Returns 0 when every run succeeded and 2 when any run
/// was infeasible, degraded or unrecoverable. Throws InvalidInput for a bad
/// configuration and OutputError for I/O failures.
inline int run_experiment(const ExperimentConfig& c, std::ostream* log = nullptr) {
  c.validate();
  namespace fs = std::filesystem;
  const fs::path dir(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir / "traces", ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());
  {
    auto f = detail::open_out(dir / "config_used.json");
    f << config_to_json(c).dump(2) << '\n';
  }

  const auto keys = grid_keys(c);
  const auto results = run_grid(c, keys, log);

  for (const auto& r : results) {
    auto f = detail::open_out(dir / "traces" / ("trace_" + detail::run_tag(r.key) + ".csv"));
    mm::write_trace_csv(r.trace, f, c.record_timing);
  }
  {
    auto f = detail::open_out(dir / "runs.csv");
    write_runs_csv(results, f);
  }
  switch (c.mode) {
    case Mode::single:
      break;
    case Mode::convergence: {
      auto f = detail::open_out(dir / "convergence.csv");
      write_convergence_csv(results, f);
      auto g = detail::open_out(dir / "convergence_summary.csv");
      write_convergence_summary(results, c.solver.opt_tol, g);
      break;
    }
    case Mode::sinr_sweep:
    case Mode::cache_sweep: {
      auto f = detail::open_out(dir / (std::string(to_string(c.mode)) + ".csv"));
      write_sweep_csv(summarize_sweep(results, c.effective_sinr_grid(), c.effective_cache_sizes()), f);
      break;
    }
  }
  const bool all_ok = std::all_of(results.begin(), results.end(), [](const RunResult& r) { return r.status == RunStatus::ok; });
  return all_ok ? 0 : 2;
}

}  // namespace cran::experiment
