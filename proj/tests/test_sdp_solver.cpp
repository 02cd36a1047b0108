#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "cran/core/random.hpp"
#include "cran/sdp/solver.hpp"

using namespace cran;
using namespace cran::sdp;

TEST(SdpSolver, TraceLowerBound) {
  SdpProblem p;
  auto W = p.add_matrix_var("W", 3);
  LinearExpr tr;
  tr.add_trace(W, 3, 1.0);
  p.set_objective(tr);
  p.add_linear("trace", tr, Relation::greater_equal, 1.0);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.objective_value, 1.0, 1e-6);
  EXPECT_GE(min_eigenvalue(sol.value(W)), -1e-7);
}

TEST(SdpSolver, LinearEqualityAndInequality) {
  SdpProblem p;
  auto q = p.add_scalar_var("q");
  auto x = p.add_scalar_var("x", -std::numeric_limits<double>::infinity());
  p.set_objective(LinearExpr{}.add(q, 1.0));
  p.add_linear("cap", LinearExpr{}.add(x, 1.0).add(q, -3.0), Relation::less_equal, 0.0);
  p.add_linear("fix", LinearExpr{}.add(x, 1.0), Relation::equal, 6.0);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.value(q), 2.0, 1e-6);
  EXPECT_NEAR(sol.value(x), 6.0, 1e-6);
}

TEST(SdpSolver, ScalarLmi) {
  // [[t, 1], [1, 1]] >= 0 iff t >= 1.
  SdpProblem p;
  auto t = p.add_scalar_var("t", -std::numeric_limits<double>::infinity());
  p.set_objective(LinearExpr{}.add(t, 1.0));
  MatrixExpr e(2);
  CMatrix c(2, 2);
  c << 0, 1, 1, 1;
  e.add_constant(c);
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 1.0;
  e.add(t, a);
  p.add_lmi("lmi", e);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.value(t), 1.0, 1e-6);
}

TEST(SdpSolver, LargestEigenvalueOfRandomHermitian) {
  auto rng = make_rng(7, 0);
  for (int n : {2, 4, 7}) {
    CMatrix g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = complex_gaussian(rng, 1.0);
    const CMatrix A = hermitian_part(g);
    const double oracle = Eigen::SelfAdjointEigenSolver<CMatrix>(A).eigenvalues()(n - 1);

    SdpProblem p;
    auto t = p.add_scalar_var("t", -std::numeric_limits<double>::infinity());
    p.set_objective(LinearExpr{}.add(t, 1.0));
    MatrixExpr e(n);
    e.add_constant(-A);
    e.add(t, CMatrix::Identity(n, n));
    p.add_lmi("bound", e);
    const auto sol = solve(p);
    ASSERT_EQ(sol.status, Status::optimal) << sol.message;
    EXPECT_NEAR(sol.value(t), oracle, 1e-6 * (1 + std::abs(oracle)));
  }
}

TEST(SdpSolver, CongruenceMapMinimalTrace) {
  // min tr(W) s.t. h^H W h >= 1 has value 1 / |h|^2.
  auto rng = make_rng(3, 0);
  const CVector h = complex_gaussian_vector(rng, 4);
  SdpProblem p;
  auto W = p.add_matrix_var("W", 4);
  p.set_objective(LinearExpr{}.add_trace(W, 4, 1.0));
  MatrixExpr e(1);
  e.add(W, 1.0, std::make_shared<const CMatrix>(h));
  e.add_constant(-CMatrix::Identity(1, 1));
  p.add_lmi("gain", e);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.objective_value, 1.0 / h.squaredNorm(), 1e-6);
}

TEST(SdpSolver, DetectsInfeasibility) {
  SdpProblem p;
  auto W = p.add_matrix_var("W", 2);
  p.set_objective(LinearExpr{}.add_trace(W, 2, 1.0));
  p.add_linear("neg", LinearExpr{}.add_trace(W, 2, 1.0), Relation::less_equal, -1.0);
  EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(SdpSolver, DetectsInfeasibleLmi) {
  // s >= 0 and [[-1, s], [s, -1]] >= 0 cannot hold.
  SdpProblem p;
  auto s = p.add_scalar_var("s");
  p.set_objective(LinearExpr{}.add(s, 1.0));
  MatrixExpr e(2);
  e.add_constant(-CMatrix::Identity(2, 2));
  CMatrix off = CMatrix::Zero(2, 2);
  off(0, 1) = off(1, 0) = 1.0;
  e.add(s, off);
  p.add_lmi("lmi", e);
  EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(SdpSolver, DiagonalVariable) {
  // Q diagonal, min sum q s.t. q_i >= i+1.
  SdpProblem p;
  auto Q = p.add_matrix_var("Q", 3, Field::real);
  p.set_diagonal(Q);
  p.set_objective(LinearExpr{}.add_trace(Q, 3, 1.0));
  for (int i = 0; i < 3; ++i) p.add_linear("lb", LinearExpr{}.add_diag(Q, i, 1.0), Relation::greater_equal, i + 1.0);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, Status::optimal) << sol.message;
  EXPECT_NEAR(sol.objective_value, 6.0, 1e-6);
  EXPECT_EQ(sol.value(Q)(0, 1), cplx(0.0));
}
