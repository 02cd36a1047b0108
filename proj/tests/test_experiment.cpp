#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cran/experiment/runner.hpp"

using namespace cran;
using namespace cran::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cran_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c = config_from_json(json::parse(R"({
    "seeds": [1, 2],
    "verify_samples": 500,
    "scenario": {"num_bs": 3, "num_users": 2, "cache_size": 2},
    "recovery": {"n_candidates": 20}
  })"));
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST(Config, ParsesKnownKeys) {
  const auto c = config_from_json(json::parse(R"({
    "mode": "sinr_sweep",
    "n_realizations": 3,
    "scenario": {"num_bs": 5, "num_users": 4, "request_mode": "half_common", "target_sinr_db": 5,
                 "csi_accuracy": 0.02, "num_files": 8},
    "mm": {"epsilon": 1e-4, "max_iters": 30},
    "solver": {"opt_tol": 1e-8},
    "recovery": {"n_candidates": 7}
  })"));
  EXPECT_EQ(c.mode, Mode::sinr_sweep);
  EXPECT_EQ(c.effective_seeds(), (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(c.effective_sinr_grid(), (std::vector<double>{0.0, 5.0, 10.0, 15.0}));
  EXPECT_EQ(c.effective_cache_sizes(), (std::vector<int>{0, 8}));
  EXPECT_EQ(c.scenario.num_bs, 5);
  EXPECT_EQ(c.scenario.request_mode, scenario::RequestMode::half_common);
  EXPECT_EQ(c.scenario.params.csi_accuracy, 0.02);
  EXPECT_EQ(c.scenario.params.smoothing, 1e-4);
  EXPECT_EQ(c.mm.max_outer_iters, 30);
  EXPECT_EQ(c.solver.opt_tol, 1e-8);
  EXPECT_EQ(c.recovery.randomization.n_candidates, 7);
  EXPECT_EQ(grid_keys(c).size(), 3u * 4u * 2u);
}

TEST(Config, CacheSweepDefaults) {
  const auto c = config_from_json(json::parse(R"({"mode": "cache_sweep"})"));
  EXPECT_EQ(c.effective_cache_sizes(), (std::vector<int>{0, 2, 5, 10}));
  EXPECT_EQ(c.effective_sinr_grid(), (std::vector<double>{10.0}));
}

TEST(Config, JsonRoundTrip) {
  auto c = config_from_json(json::parse(R"({"mode": "convergence", "seeds": [4, 9], "mm": {"epsilon_schedule": [1e-3, 1e-6]}})"));
  const json j = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(j)).dump(), j.dump());
}

TEST(Config, RejectsBadInput) {
  auto bad = [](const char* text) { return config_from_json(json::parse(text)); };
  EXPECT_THROW(bad(R"({"mode": "sweep"})"), InvalidInput);
  EXPECT_THROW(bad(R"({"seeds": "1-3"})"), InvalidInput);
  EXPECT_THROW(bad(R"({"seeds": [1, 1]})"), InvalidInput);
  EXPECT_THROW(bad(R"({"cache_sizes": [11]})"), InvalidInput);
  EXPECT_THROW(bad(R"({"workers": 0})"), InvalidInput);
  EXPECT_THROW(bad(R"({"mm": {"epsilon": -1}})"), InvalidInput);
  EXPECT_THROW(bad(R"({"scenario": {"request_mode": "popular"}})"), InvalidInput);
  EXPECT_THROW(bad(R"({"scenario": {"max_tx_power_w": "big"}})"), InvalidInput);
  EXPECT_THROW(bad(R"([1, 2])"), InvalidInput);
  EXPECT_THROW(load_config("/nonexistent/config.json"), InvalidInput);
}

TEST(Config, SeedLists) {
  EXPECT_EQ(parse_seed_list("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(parse_seed_list("1-4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
  EXPECT_EQ(parse_seed_list("1,5-6,9"), (std::vector<std::uint64_t>{1, 5, 6, 9}));
  EXPECT_THROW(parse_seed_list("5-2"), InvalidInput);
  EXPECT_THROW(parse_seed_list("a"), InvalidInput);
  EXPECT_THROW(parse_seed_list(""), InvalidInput);
}

TEST(Runner, SingleModeWritesFiles) {
  const auto dir = scratch_dir("single");
  const auto c = tiny_config(dir);
  ASSERT_EQ(run_experiment(c), 0);
  EXPECT_TRUE(fs::exists(dir / "config_used.json"));
  EXPECT_TRUE(fs::exists(dir / "traces" / "trace_seed1_sinr10_cache2.csv"));
  const std::string runs = slurp(dir / "runs.csv");
  EXPECT_EQ(std::count(runs.begin(), runs.end(), '\n'), 3);
  EXPECT_NE(runs.find("\n1,10,2,ok,"), std::string::npos);
  EXPECT_NE(runs.find("\n2,10,2,ok,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Runner, OutputsAreByteIdenticalAcrossRunsAndWorkers) {
  const auto a = scratch_dir("det_a"), b = scratch_dir("det_b");
  auto c = tiny_config(a);
  c.mode = Mode::convergence;
  ASSERT_EQ(run_experiment(c), 0);
  c.output_dir = b.string();
  c.workers = 2;
  ASSERT_EQ(run_experiment(c), 0);
  for (const char* f : {"runs.csv", "convergence.csv", "convergence_summary.csv", "traces/trace_seed2_sinr10_cache2.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Runner, InfeasibleTargetsGiveExitCodeTwo) {
  const auto dir = scratch_dir("infeasible");
  auto c = tiny_config(dir);
  c.seeds = {1};
  c.scenario.params.target_sinr_db = 80.0;
  EXPECT_EQ(run_experiment(c), 2);
  EXPECT_NE(slurp(dir / "runs.csv").find("\n1,80,2,infeasible,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Runner, UnwritableOutputThrows) {
  auto c = tiny_config("/proc/cran_cannot_write_here");
  EXPECT_THROW(run_experiment(c), OutputError);
}

TEST(Runner, IdenticalProblemsAreSolvedOnce) {
  // With two files and a common request, any cache size >= 1 caches the
  // requested file, so cache sizes 1 and 2 give the same problem.
  auto c = config_from_json(json::parse(R"({
    "mode": "cache_sweep", "seeds": [2], "cache_sizes": [0, 1, 2], "verify_samples": 200,
    "scenario": {"num_bs": 3, "num_users": 2, "num_files": 2, "request_mode": "common"}
  })"));
  std::ostringstream log;
  const auto res = run_grid(c, grid_keys(c), &log);
  ASSERT_EQ(res.size(), 3u);
  EXPECT_EQ(res[1].key.cache_size, 1);
  EXPECT_EQ(res[2].key.cache_size, 2);
  ASSERT_EQ(res[1].status, RunStatus::ok) << res[1].message;
  EXPECT_EQ(res[1].smoothed_cost, res[2].smoothed_cost);
  EXPECT_NE(log.str().find("[2/2]"), std::string::npos);
  EXPECT_EQ(log.str().find("[3/"), std::string::npos);
}

TEST(Sweep, AveragesOverCommonUsableSeeds) {
  auto make = [](std::uint64_t seed, int cache, bool usable, double backhaul) {
    RunResult r;
    r.key = {seed, 10.0, cache};
    r.status = usable ? RunStatus::ok : RunStatus::infeasible;
    r.recovered = r.verified = usable;
    r.cost.backhaul_cost = backhaul;
    r.cost.total_cost = backhaul + 1.0;
    return r;
  };
  const std::vector<RunResult> res = {make(1, 0, true, 4.0), make(2, 0, true, 8.0), make(1, 10, true, 0.0),
                                      make(2, 10, false, 0.0)};
  const auto rows = summarize_sweep(res, {10.0}, {0, 10});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].runs, 2);
  EXPECT_EQ(rows[0].usable, 2);
  EXPECT_EQ(rows[0].averaged, 1);
  EXPECT_EQ(rows[0].mean_backhaul_cost, 4.0);
  EXPECT_EQ(rows[1].usable, 1);
  EXPECT_EQ(rows[1].mean_backhaul_cost, 0.0);
  std::ostringstream out;
  write_sweep_csv(rows, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "sinr_db,cache_size,runs,usable,averaged,mean_backhaul_cost,mean_total_power,mean_transmit_power,"
            "mean_total_cost,mean_active_bs");
}
