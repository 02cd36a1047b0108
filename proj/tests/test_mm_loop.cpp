#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cran/mm/mm_loop.hpp"
#include "test_helpers.hpp"

using namespace cran;
using namespace cran::mm;
using cran::testing::cvec;
using cran::testing::manual_scenario;

namespace {

RelaxedPoint random_point(Rng& rng, int B, int U, double scale) {
  RelaxedPoint p;
  for (int u = 0; u < U; ++u) {
    CMatrix a(B, B);
    for (int i = 0; i < B; ++i)
      for (int j = 0; j < B; ++j) a(i, j) = complex_gaussian(rng);
    p.W.push_back(scale * a * a.adjoint());
  }
  std::uniform_real_distribution<double> d(0.0, scale);
  for (int b = 0; b < B; ++b) p.q.push_back(d(rng));
  return p;
}

scenario::Scenario mixed_cache_scenario(std::uint64_t seed) {
  scenario::ScenarioSpec spec;
  spec.num_bs = 4;
  spec.num_users = 3;
  spec.num_files = 3;
  spec.cache_size = 1;
  spec.request_mode = scenario::RequestMode::half_common;
  auto s = scenario::make_scenario(spec, seed);
  // Vary the per-BS constants so that every term matters.
  s.params.relative_power = {38.0, 20.0, 5.0, 60.0};
  s.params.amplifier_efficiency = {2.5, 1.0, 4.0, 2.0};
  s.params.target_sinr = {10.0, 3.0, 1.0};
  return s;
}

}  // namespace

TEST(Smoothing, KnownValues) {
  EXPECT_EQ(l0_smooth(0.0, 1e-6), 0.0);
  EXPECT_NEAR(l0_smooth(1.0, 1e-6), 1.0, 1e-15);
  EXPECT_NEAR(l0_smooth(0.5, 1e-6), 0.9498, 5e-5);
  EXPECT_NEAR(lambda_eps(1e-6), 0.072382, 5e-7);
  EXPECT_THROW(l0_smooth(-1.0, 1e-6), InvalidInput);
  EXPECT_THROW(lambda_eps(0.0), InvalidInput);
}

TEST(Smoothing, ApproachesIndicator) {
  double prev = 1.0;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8, 1e-10}) {
    const double gap = 1.0 - l0_smooth(0.5, eps);
    EXPECT_LT(gap, prev);
    prev = gap;
  }
  EXPECT_LT(prev, 0.035);
}

TEST(Cost, SingleCachedLink) {
  auto s = manual_scenario({cvec({1.0})}, 0.01, 10.0, 1e3, 1);
  RelaxedPoint p{{CMatrix::Constant(1, 1, 1.0)}, {0.0}};
  EXPECT_NEAR(smoothed_cost(p, s, 1e-6), 0.4 + 38.0, 1e-12);
  const auto w = update_weights(p, s, 1e-6);
  EXPECT_NEAR(w.eta[0], 0.4 + lambda_eps(1e-6) * 38.0 / (1.0 + 1e-6), 1e-12);
  EXPECT_NEAR(w.eta[0], 3.1505, 5e-5);
  EXPECT_EQ(w.beta[0][0], 0.0);
  EXPECT_NEAR(true_cost(p, s), 38.4, 1e-12);
}

TEST(Cost, UncachedLinkAddsBackhaulTerms) {
  auto s = manual_scenario({cvec({1.0})}, 0.01, 10.0);
  ASSERT_EQ(s.content.alpha[0], 1);
  const double eps = 1e-6, le = lambda_eps(eps);
  RelaxedPoint p{{CMatrix::Constant(1, 1, 2.0)}, {0.5}};
  const double x = 2.5;
  const double R = std::log2(11.0);
  const double expect = x / 2.5 + le * 38.0 * std::log1p(x / eps) + le * R * std::log1p(2.0 / eps);
  EXPECT_NEAR(smoothed_cost(p, s, eps), expect, 1e-12 * expect);
  const auto w = update_weights(p, s, eps);
  EXPECT_NEAR(w.beta[0][0], R * le / (eps + 2.0), 1e-15);
  EXPECT_NEAR(true_cost(p, s), x / 2.5 + 38.0 + R, 1e-12);
}

TEST(Surrogate, MajorizesAndTouches) {
  Rng rng(5);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = mixed_cache_scenario(seed);
    for (double eps : {1e-6, 1e-3}) {
      for (int k = 0; k < 10; ++k) {
        const auto p0 = random_point(rng, 4, 3, k % 2 ? 1e-3 : 1.0);
        const auto w = update_weights(p0, s, eps);
        const double c = surrogate_constant(p0, s, eps);
        const double f0 = smoothed_cost(p0, s, eps);
        EXPECT_NEAR(surrogate_value(p0, w, s) + c, f0, 1e-9 * (1.0 + f0));
        for (int i = 0; i < 20; ++i) {
          const auto p = random_point(rng, 4, 3, std::pow(10.0, -3 + i % 4));
          const double f = smoothed_cost(p, s, eps);
          EXPECT_LE(f, surrogate_value(p, w, s) + c + 1e-9 * (1.0 + f));
        }
      }
    }
  }
}

TEST(Surrogate, ConcaveTermTangentBound) {
  // log(1 + y/eps) <= log(1 + y0/eps) + (y - y0)/(eps + y0) for all y, y0 >= 0.
  for (double eps : {1e-6, 1e-2})
    for (double y0 : {0.0, 1e-7, 0.3, 5.0})
      for (double y : {0.0, 1e-9, 1e-3, 0.3, 2.0, 100.0})
        EXPECT_LE(std::log1p(y / eps), std::log1p(y0 / eps) + (y - y0) / (eps + y0) + 1e-12);
}

TEST(Stopping, RelativeChangeRule) {
  std::vector<TraceRecord> t(1);
  t[0].smoothed_cost = 100.0;
  EXPECT_FALSE(has_converged(t, 1e-4));
  t.push_back(t[0]);
  t[1].smoothed_cost = 100.0 - 0.0101 * 0.999;
  EXPECT_TRUE(has_converged(t, 1e-4));
  t[1].smoothed_cost = 100.0 - 0.0102;
  EXPECT_FALSE(has_converged(t, 1e-4));
}

TEST(Stopping, RelativeIncreaseIgnoresStageBoundaries) {
  std::vector<TraceRecord> t(3);
  t[0].epsilon = t[1].epsilon = 1e-3;
  t[2].epsilon = 1e-6;
  t[0].smoothed_cost = 10.0;
  t[1].smoothed_cost = 9.0;
  t[2].smoothed_cost = 20.0;
  EXPECT_EQ(max_relative_increase(t), 0.0);
  t[1].smoothed_cost = 10.11;
  EXPECT_NEAR(max_relative_increase(t), 0.01, 1e-12);
}

TEST(Loop, DescendsAndConverges) {
  scenario::ScenarioSpec spec;
  spec.num_bs = 4;
  spec.num_users = 2;
  spec.cache_size = 3;
  const auto s = scenario::make_scenario(spec, 4);
  MmParams params;
  const sdp::SolverOptions opt;
  const auto r = run(s, params, opt);
  ASSERT_TRUE(r.has_solution);
  EXPECT_TRUE(r.converged) << r.message;
  EXPECT_FALSE(r.degraded);
  EXPECT_LE(max_relative_increase(r.trace), 10.0 * opt.opt_tol);
  EXPECT_EQ(iterations_to_convergence(r), static_cast<int>(r.trace.size()));
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    // The majorizer sits above the smoothed cost at the new point.
    const auto& rec = r.trace[i];
    EXPECT_LE(rec.smoothed_cost, rec.surrogate_obj + 1e-5 * (1.0 + std::abs(rec.smoothed_cost)));
  }
  EXPECT_EQ(r.lambda.size(), 2u);
  for (double l : r.lambda) EXPECT_GE(l, -1e-9);
}

TEST(Loop, EasyTargetsStopQuickly) {
  scenario::ScenarioSpec spec;
  spec.num_bs = 3;
  spec.num_users = 2;
  spec.params.target_sinr_db = -160.0;
  spec.cache_size = 10;
  const auto s = scenario::make_scenario(spec, 4);
  // The first solve must land near W = 0 for the cost change to fall under
  // cost_rel_tol, hence the tight solver tolerances.
  sdp::SolverOptions opt;
  opt.opt_tol = opt.feas_tol = 1e-10;
  const auto r = run(s, {}, opt);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.trace.size(), 2u);
  EXPECT_LT(r.trace.back().smoothed_cost, 1e-6);
}

TEST(Loop, InfeasibleTargetsThrow) {
  auto s = manual_scenario({cvec({1.0}), cvec({1.0})}, 0.01, 10.0, 1.0, 1);
  EXPECT_THROW(run(s), ScenarioInfeasible);
}

TEST(Loop, EpsilonScheduleRunsEveryStage) {
  scenario::ScenarioSpec spec;
  spec.num_bs = 3;
  spec.num_users = 2;
  const auto s = scenario::make_scenario(spec, 2);
  MmParams params;
  params.epsilon_schedule = {1e-3, 1e-6};
  const auto r = run(s, params);
  ASSERT_TRUE(r.has_solution);
  EXPECT_EQ(r.trace.front().epsilon, 1e-3);
  EXPECT_EQ(r.trace.back().epsilon, 1e-6);
}

TEST(Trace, CsvHeaderAndTimingColumn) {
  std::vector<TraceRecord> t(1);
  t[0].smoothed_cost = 1.5;
  t[0].wall_ms = 12.0;
  std::ostringstream with, without;
  write_trace_csv(t, with, true);
  write_trace_csv(t, without, false);
  const std::string header = "iter,smoothed_cost,surrogate_obj,true_cost,solver_status,wall_ms,epsilon,solver_iterations";
  EXPECT_EQ(with.str().substr(0, header.size()), header);
  EXPECT_EQ(without.str().substr(0, header.size()), header);
  EXPECT_NE(with.str().find(",12"), std::string::npos);
  EXPECT_EQ(without.str().find(",12"), std::string::npos);
}
