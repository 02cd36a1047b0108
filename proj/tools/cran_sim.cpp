// Command-line driver for the experiment harness.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cran/cran.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust cache-aware CRAN beamforming simulator"};
  std::string config_path, mode, seeds, out_dir, dump_scenario, dump_sdpa;
  std::uint64_t seed = 0;
  int workers = 0, max_iters = 0;
  double epsilon = 0.0;
  bool quiet = false, timing = false;
  app.add_option("--config", config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "single | convergence | sinr_sweep | cache_sweep");
  app.add_option("--seed", seed, "run a single seed");
  app.add_option("--seeds", seeds, "seed list, e.g. 1-20 or 1,3,5");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "parallel runs")->check(CLI::PositiveNumber);
  app.add_option("--epsilon", epsilon, "l0 smoothing parameter")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters, "MM outer iteration cap")->check(CLI::PositiveNumber);
  app.add_option("--dump-scenario", dump_scenario, "write the first run's scenario as JSON and exit");
  app.add_option("--dump-sdpa", dump_sdpa, "write the first run's initial SDP in SDPA sparse format and exit");
  app.add_flag("--timing", timing, "include wall-clock times in trace files");
  app.add_flag("-q,--quiet", quiet, "no progress output");
  CLI11_PARSE(app, argc, argv);

  try {
    cran::experiment::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = cran::experiment::load_config(config_path);
    if (!mode.empty()) cfg.mode = cran::experiment::parse_mode(mode);
    if (app.count("--seed")) cfg.seeds = {seed};
    if (!seeds.empty()) cfg.seeds = cran::experiment::parse_seed_list(seeds);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (workers > 0) cfg.workers = workers;
    if (epsilon > 0.0) {
      cfg.mm.epsilon = epsilon;
      cfg.scenario.params.smoothing = epsilon;
    }
    if (max_iters > 0) cfg.mm.max_outer_iters = max_iters;
    if (timing) cfg.record_timing = true;
    cfg.validate();

    if (!dump_scenario.empty() || !dump_sdpa.empty()) {
      const auto key = cran::experiment::grid_keys(cfg).front();
      const auto s = cran::experiment::build_scenario(cfg, key);
      if (!dump_scenario.empty()) cran::scenario::save_scenario(s, dump_scenario);
      if (!dump_sdpa.empty()) {
        std::ofstream f(dump_sdpa);
        if (!f) throw cran::experiment::OutputError("cannot write " + dump_sdpa);
        const auto w = cran::robust::SurrogateWeights::ones(s.num_bs(), s.num_users());
        cran::sdp::write_sdpa(cran::robust::assemble_sdp(s, w).problem, f);
      }
      return 0;
    }
    const int code = cran::experiment::run_experiment(cfg, quiet ? nullptr : &std::cerr);
    if (!quiet) std::cerr << "results in " << cfg.output_dir << (code == 0 ? "" : " (some runs did not succeed)") << '\n';
    return code;
  } catch (const cran::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const cran::experiment::OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
