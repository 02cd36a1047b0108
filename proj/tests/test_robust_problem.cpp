#include <gtest/gtest.h>

#include <cmath>

#include "cran/eval/evaluator.hpp"
#include "cran/robust/robust_problem.hpp"
#include "cran/sdp/solver.hpp"
#include "test_helpers.hpp"

using namespace cran;
using namespace cran::robust;
using cran::testing::cvec;
using cran::testing::manual_scenario;

namespace {

CMatrix random_psd(Rng& rng, int n) {
  CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = complex_gaussian(rng);
  return a * a.adjoint();
}

// Delta_u written out term by term, independent of DeltaBlockSpec.
CMatrix direct_delta(const scenario::Scenario& s, const std::vector<CMatrix>& W, const std::vector<double>& q,
                     double lambda, int u) {
  const int B = s.num_bs();
  const auto ui = static_cast<std::size_t>(u);
  const CVector& h = s.channels[ui].h_tilde;
  const CMatrix& E = s.channels[ui].error_shape;
  const double delta = s.params.target_sinr[ui];
  const double sigma2 = s.params.noise_power[ui];
  CMatrix g = W[ui] / delta;
  for (std::size_t v = 0; v < W.size(); ++v)
    if (v != ui) g -= W[v];
  for (int b = 0; b < B; ++b) g(b, b) -= s.content.alpha[static_cast<std::size_t>(b)] * q[static_cast<std::size_t>(b)];
  CMatrix d(B + 1, B + 1);
  d.topLeftCorner(B, B) = g + lambda * E;
  d.topRightCorner(B, 1) = g * h;
  d.bottomLeftCorner(1, B) = h.adjoint() * g;
  d(B, B) = (h.adjoint() * g * h)(0, 0) - lambda - sigma2;
  return d;
}

sdp::SdpSolution point_solution(const RobustSdp& r, const std::vector<CMatrix>& W, const std::vector<double>& q,
                                const std::vector<double>& lambda) {
  sdp::SdpSolution sol;
  sol.matrix_values.resize(r.problem.matrix_vars().size());
  sol.scalar_values.resize(r.problem.scalar_vars().size());
  for (std::size_t u = 0; u < W.size(); ++u) sol.matrix_values[r.vars.W[u].id] = W[u];
  CMatrix Q = CMatrix::Zero(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(q.size()));
  const auto& qd = r.problem.matrix_decl(r.vars.Q);
  for (std::size_t b = 0; b < q.size(); ++b) {
    const auto i = static_cast<Eigen::Index>(b);
    Q(i, i) = qd.is_fixed(static_cast<int>(b), static_cast<int>(b)) ? 0.0 : q[b];
  }
  sol.matrix_values[r.vars.Q.id] = Q;
  for (std::size_t u = 0; u < lambda.size(); ++u) sol.scalar_values[r.vars.lambda[u].id] = lambda[u] * r.blocks[u].lambda_scale;
  return sol;
}

}  // namespace

TEST(DeltaBlock, SmallWorkedExample) {
  auto s = manual_scenario({cvec({1.0})}, 1.0, 1.0);
  const auto d = build_delta_block(s, 0);
  const CMatrix m = d.evaluate({CMatrix::Constant(1, 1, 1.0)}, {0.0}, 0.0);
  CMatrix expect(2, 2);
  expect << 1.0, 1.0, 1.0, 0.0;
  EXPECT_LT((m - expect).norm(), 1e-15);
}

TEST(DeltaBlock, ZeroBeamformerLeavesOnlyNoise) {
  auto s = manual_scenario({cvec({1.0, cplx(0.5, -0.2)})}, 0.5, 2.0);
  s.params.noise_power[0] = 2.0;
  const auto d = build_delta_block(s, 0);
  const CMatrix m = d.evaluate({CMatrix::Zero(2, 2)}, {0.0, 0.0}, 0.0);
  CMatrix expect = CMatrix::Zero(3, 3);
  expect(2, 2) = -2.0;
  EXPECT_LT((m - expect).norm(), 1e-15);
  EXPECT_NEAR(min_eigenvalue(m), -2.0, 1e-14);
}

TEST(DeltaBlock, AffineFormMatchesDirectAssembly) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int B = 1 + trial % 4;
    const int U = 1 + trial % 3;
    std::vector<CVector> h;
    for (int u = 0; u < U; ++u) h.push_back(complex_gaussian_vector(rng, B));
    auto s = manual_scenario(h, 0.2 + 0.1 * trial, 3.0);
    // Non-spherical error shapes and mixed cache flags.
    for (auto& ch : s.channels) ch.error_shape = random_psd(rng, B) + CMatrix::Identity(B, B);
    for (int b = 0; b < B; ++b) s.content.alpha[static_cast<std::size_t>(b)] = (b + trial) % 2;
    for (auto& n : s.params.noise_power) n = 0.5 + std::uniform_real_distribution<double>(0.0, 1.0)(rng);

    const auto r = assemble_sdp(s, SurrogateWeights::ones(B, U));
    std::vector<CMatrix> W;
    std::vector<double> q, lambda;
    for (int u = 0; u < U; ++u) W.push_back(random_psd(rng, B));
    for (int b = 0; b < B; ++b) q.push_back(std::uniform_real_distribution<double>(0.0, 2.0)(rng));
    for (int u = 0; u < U; ++u) lambda.push_back(std::uniform_real_distribution<double>(0.0, 3.0)(rng));
    const auto sol = point_solution(r, W, q, lambda);

    for (int u = 0; u < U; ++u) {
      const CMatrix expect = direct_delta(s, W, q, lambda[static_cast<std::size_t>(u)], u);
      const CMatrix affine = sdp::evaluate(r.problem.lmi_constraints()[static_cast<std::size_t>(u)].expr, sol);
      const CMatrix numeric = r.blocks[static_cast<std::size_t>(u)].evaluate(W, q, lambda[static_cast<std::size_t>(u)]);
      const double scale = 1.0 + expect.norm();
      EXPECT_LT((affine - expect).norm() / scale, 1e-12) << "B=" << B << " U=" << U << " u=" << u;
      EXPECT_LT((numeric - expect).norm() / scale, 1e-12);
    }
  }
}

TEST(Assembly, GroupCounts) {
  for (int B = 1; B <= 3; ++B)
    for (int U = 1; U <= 3; ++U) {
      std::vector<CVector> h(static_cast<std::size_t>(U), CVector::Ones(B));
      const auto s = manual_scenario(h, 0.1, 1.0);
      const auto r = assemble_sdp(s, SurrogateWeights::ones(B, U));
      EXPECT_EQ(r.problem.variable_group_count(), static_cast<std::size_t>(2 * U + 1)) << B << "x" << U;
      EXPECT_EQ(r.problem.constraint_group_count(), static_cast<std::size_t>(2 * B + 3 * U + 2)) << B << "x" << U;
      EXPECT_EQ(r.problem.lmi_constraints().size(), static_cast<std::size_t>(U));
      EXPECT_EQ(r.problem.linear_constraints().size(), static_cast<std::size_t>(2 * B));
    }
}

TEST(Assembly, FullyCachedBackhaulHasNoTerms) {
  auto s = manual_scenario({cvec({1.0, 1.0}), cvec({1.0, -1.0})}, 0.1, 1.0, 1e3, 1);
  ASSERT_EQ(s.content.alpha, (std::vector<int>{0, 0}));
  const auto r = assemble_sdp(s, SurrogateWeights::ones(2, 2));
  for (const auto& l : r.problem.linear_constraints())
    if (l.name.rfind("backhaul", 0) == 0) {
      EXPECT_TRUE(l.expr.entry_terms.empty()) << l.name;
      EXPECT_TRUE(l.expr.scalar_terms.empty());
      EXPECT_EQ(l.rhs, 0.0);
    }
  const auto& qd = r.problem.matrix_decl(r.vars.Q);
  EXPECT_TRUE(qd.is_fixed(0, 0));
  EXPECT_TRUE(qd.is_fixed(1, 1));
}

TEST(Assembly, WeightedObjective) {
  Rng rng(3);
  const int B = 3, U = 2;
  std::vector<CVector> h;
  for (int u = 0; u < U; ++u) h.push_back(complex_gaussian_vector(rng, B));
  auto s = manual_scenario(h, 0.1, 1.0);
  s.content.alpha = {1, 0, 1};
  SurrogateWeights w = SurrogateWeights::ones(B, U);
  w.eta = {2.0, 0.5, 7.0};
  w.beta = {{1.0, 0.0}, {3.0, 4.0}, {0.25, 1.5}};
  const auto r = assemble_sdp(s, w);
  std::vector<CMatrix> W{random_psd(rng, B), random_psd(rng, B)};
  std::vector<double> q{0.3, 0.9, 1.7};
  const auto sol = point_solution(r, W, q, {0.0, 0.0});
  double expect = 0.0;
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    double x = s.content.alpha[bi] * q[bi];
    for (int u = 0; u < U; ++u) {
      x += W[static_cast<std::size_t>(u)](b, b).real();
      expect += w.beta[bi][static_cast<std::size_t>(u)] * W[static_cast<std::size_t>(u)](b, b).real();
    }
    expect += w.eta[bi] * x;
  }
  EXPECT_NEAR(sdp::evaluate(r.problem.objective(), sol), expect, 1e-12 * (1.0 + expect));
}

TEST(Assembly, PowerAndBackhaulRows) {
  auto s = manual_scenario({cvec({1.0, 2.0})}, 0.1, 1.0);
  s.params.backhaul_capacity = {3.0, 1.0};
  s.params.max_tx_power = {5.0, 6.0};
  const auto r = assemble_sdp(s, SurrogateWeights::ones(2, 1));
  CMatrix W(2, 2);
  W << 2.0, 0.5, 0.5, 1.0;
  const auto sol = point_solution(r, {W}, {0.25, 4.0}, {0.0});
  for (const auto& l : r.problem.linear_constraints()) {
    const double v = sdp::evaluate(l.expr, sol);
    if (l.name == "power0") EXPECT_NEAR(v, 2.25, 1e-15);
    if (l.name == "power1") EXPECT_NEAR(v, 5.0, 1e-15);
    if (l.name == "backhaul0") EXPECT_NEAR(v, 2.0 - 7.0 * 0.25, 1e-15);
    if (l.name == "backhaul1") EXPECT_NEAR(v, 1.0 - 4.0, 1e-15);
  }
}

TEST(Assembly, RejectsMismatchedWeights) {
  const auto s = manual_scenario({cvec({1.0, 2.0})}, 0.1, 1.0);
  EXPECT_THROW(assemble_sdp(s, SurrogateWeights::ones(3, 1)), StructuralError);
  EXPECT_THROW(assemble_sdp(s, SurrogateWeights::ones(2, 2)), StructuralError);
}

TEST(Certificate, SingleAntennaThreshold) {
  // |h~| = 1, |e| <= 0.1: worst-case gain 0.81, SINR with |w|^2 = 10 is 8.1.
  const auto s = manual_scenario({cvec({1.0})}, 0.01, 10.0);
  EXPECT_FALSE(robust_sinr_certificate({cvec({std::sqrt(10.0)})}, {0.0}, s, 0).has_value());
  const double p = 10.0 / 0.81 * (1.0 + 1e-9);
  const auto lam = robust_sinr_certificate({cvec({std::sqrt(p)})}, {0.0}, s, 0);
  ASSERT_TRUE(lam.has_value());
  EXPECT_GE(*lam, 0.0);
  EXPECT_GE(min_eigenvalue(build_delta_block(s, 0).evaluate({CMatrix::Constant(1, 1, p)}, {0.0}, *lam)), -1e-7);
}

TEST(Certificate, AgreesWithGridSearch) {
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int B = 1 + trial % 2;
    const int U = 1 + (trial / 2) % 2;
    std::vector<CVector> h, w;
    for (int u = 0; u < U; ++u) h.push_back(complex_gaussian_vector(rng, B));
    for (int u = 0; u < U; ++u) w.push_back(2.0 * complex_gaussian_vector(rng, B));
    const auto s = manual_scenario(h, 4.0, 1.0);
    const std::vector<double> q(static_cast<std::size_t>(B), 0.0);
    for (int u = 0; u < U; ++u) {
      const double worst = eval::worst_case_sinr_grid(w, q, s.channels[static_cast<std::size_t>(u)], u, s.content.alpha, 1.0, B == 1 ? 0 : 31);
      const bool cert = robust_sinr_certificate(w, q, s, u).has_value();
      if (std::abs(worst - 1.0) < 1e-3) continue;
      ++checked;
      EXPECT_EQ(cert, worst > 1.0) << "trial " << trial << " u=" << u << " worst=" << worst;
    }
  }
  EXPECT_GT(checked, 25);
}

TEST(Assembly, SingleLinkOptimumMatchesClosedForm) {
  // Cached link, so no quantization noise: the optimal power is delta sigma^2 / (|h~| - 0.1)^2.
  const auto s = manual_scenario({cvec({1.0})}, 0.01, 10.0, 1e3, 1);
  const auto r = assemble_sdp(s, SurrogateWeights::ones(1, 1));
  const auto sol = sdp::solve(r.problem);
  ASSERT_TRUE(sol.optimal()) << sol.message;
  EXPECT_NEAR(r.W(sol)[0](0, 0).real(), 10.0 / 0.81, 1e-4 * 10.0 / 0.81);
}
