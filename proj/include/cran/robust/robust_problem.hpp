#pragma once

// Per-iteration robust beamforming SDP. For user u the worst-case SINR
// condition over the ellipsoid e^H E_u e <= 1 becomes, via the S-procedure,
//
//   Delta_u = K^H G_u K + lambda_u blkdiag(E_u, -1) - sigma_u^2 e_B e_B^T >= 0,
//   K = [I_B, h_u],   G_u = W_u / delta_u - sum_{v != u} W_v - diag(alpha o q).

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cran/scenario/scenario.hpp"
#include "cran/sdp/problem.hpp"

namespace cran::robust {

using scenario::Scenario;

/// Handles to the decision variables of the assembled problem.
struct Variables {
  std::vector<sdp::MatrixVar> W;  // one B x B Hermitian matrix per user
  sdp::MatrixVar Q;               // diagonal B x B, q_b on the diagonal
  std::vector<sdp::ScalarVar> lambda;
};

struct DeltaBlockSpec {
  int user = 0;
  int num_bs = 0;
  double target = 0.0;  // delta_u
  double noise = 0.0;   // sigma_u^2
  std::vector<int> alpha;
  CMatrix error_shape;
  /// The solver works with lambda' = lambda * lambda_scale (largest eigenvalue
  /// of E_u) so that the multiplier term stays O(1) for very accurate CSI.
  double lambda_scale = 1.0;
  std::shared_ptr<const CMatrix> map;  // K, B x (B+1)

  int dim() const { return num_bs + 1; }

  CMatrix G(const std::vector<CMatrix>& W, const std::vector<double>& q) const {
    CMatrix g = W[static_cast<std::size_t>(user)] / target;
    for (std::size_t v = 0; v < W.size(); ++v)
      if (static_cast<int>(v) != user) g -= W[v];
    for (int b = 0; b < num_bs; ++b) g(b, b) -= alpha[static_cast<std::size_t>(b)] * q[static_cast<std::size_t>(b)];
    return g;
  }

  CMatrix lambda_coef() const {
    CMatrix m = CMatrix::Zero(dim(), dim());
    m.topLeftCorner(num_bs, num_bs) = error_shape;
    m(num_bs, num_bs) = -1.0;
    return m;
  }

  /// Delta_u at a numeric point, assembled from G_u directly.
  CMatrix evaluate_from_g(const CMatrix& g, double lambda) const {
    CMatrix d = map->adjoint() * g * *map + lambda * lambda_coef();
    d(num_bs, num_bs) -= noise;
    return hermitian_part(d);
  }

  CMatrix evaluate(const std::vector<CMatrix>& W, const std::vector<double>& q, double lambda) const {
    return evaluate_from_g(G(W, q), lambda);
  }

  /// Affine form in the problem variables (lambda enters as lambda').
  sdp::MatrixExpr to_matrix_expr(const Variables& vars) const {
    sdp::MatrixExpr e(dim());
    for (std::size_t v = 0; v < vars.W.size(); ++v)
      e.add(vars.W[v], static_cast<int>(v) == user ? 1.0 / target : -1.0, map);
    e.add(vars.Q, -1.0, map);
    e.add(vars.lambda[static_cast<std::size_t>(user)], lambda_coef() / lambda_scale);
    CMatrix c = CMatrix::Zero(dim(), dim());
    c(num_bs, num_bs) = -noise;
    e.add_constant(c);
    return e;
  }
};

inline DeltaBlockSpec build_delta_block(const Scenario& s, int u) {
  const auto& ch = s.channels.at(static_cast<std::size_t>(u));
  const int B = s.num_bs();
  DeltaBlockSpec d;
  d.user = u;
  d.num_bs = B;
  d.target = s.params.target_sinr[static_cast<std::size_t>(u)];
  d.noise = s.params.noise_power[static_cast<std::size_t>(u)];
  d.alpha = s.content.alpha;
  d.error_shape = ch.error_shape;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(ch.error_shape, Eigen::EigenvaluesOnly);
  if (es.eigenvalues()(0) <= 0.0) throw InvalidInput("error shape must be positive definite");
  d.lambda_scale = es.eigenvalues()(B - 1);
  CMatrix k = CMatrix::Zero(B, B + 1);
  k.leftCols(B).setIdentity();
  k.col(B) = ch.h_tilde;
  d.map = std::make_shared<const CMatrix>(std::move(k));
  return d;
}

struct SurrogateWeights {
  std::vector<double> eta;                // per BS
  std::vector<std::vector<double>> beta;  // [b][u]

  static SurrogateWeights ones(int num_bs, int num_users) {
    return {std::vector<double>(static_cast<std::size_t>(num_bs), 1.0),
            std::vector<std::vector<double>>(static_cast<std::size_t>(num_bs),
                                             std::vector<double>(static_cast<std::size_t>(num_users), 1.0))};
  }
};

struct RobustSdp {
  sdp::SdpProblem problem;
  Variables vars;
  std::vector<DeltaBlockSpec> blocks;

  std::vector<CMatrix> W(const sdp::SdpSolution& sol) const {
    std::vector<CMatrix> out;
    for (const auto& w : vars.W) out.push_back(hermitian_part(sol.value(w)));
    return out;
  }
  std::vector<double> q(const sdp::SdpSolution& sol) const {
    const CMatrix& m = sol.value(vars.Q);
    std::vector<double> out;
    for (Eigen::Index b = 0; b < m.rows(); ++b) out.push_back(m(b, b).real());
    return out;
  }
  std::vector<double> lambda(const sdp::SdpSolution& sol) const {
    std::vector<double> out;
    for (std::size_t u = 0; u < vars.lambda.size(); ++u)
      out.push_back(sol.value(vars.lambda[u]) / blocks[u].lambda_scale);
    return out;
  }
};

/// Linear surrogate problem: min sum_b eta_b x_b + sum_{b,u} beta_bu W_u[b,b]
/// with x_b = sum_u W_u[b,b] + alpha_b q_b, under power, backhaul and robust
/// SINR constraints.
inline RobustSdp assemble_sdp(const Scenario& s, const SurrogateWeights& w) {
  const int B = s.num_bs();
  const int U = s.num_users();
  if (static_cast<int>(w.eta.size()) != B || static_cast<int>(w.beta.size()) != B)
    throw StructuralError("surrogate weights do not match the number of BSs");
  for (const auto& row : w.beta)
    if (static_cast<int>(row.size()) != U) throw StructuralError("surrogate weights do not match the number of users");
  if (static_cast<int>(s.channels.size()) != U) throw StructuralError("channel count does not match the number of users");
  for (const auto& ch : s.channels)
    if (ch.h_tilde.size() != B || ch.error_shape.rows() != B || ch.error_shape.cols() != B)
      throw StructuralError("channel dimension does not match the number of BSs");

  RobustSdp r;
  auto& p = r.problem;
  for (int u = 0; u < U; ++u) r.vars.W.push_back(p.add_matrix_var("W" + std::to_string(u), B));
  r.vars.Q = p.add_matrix_var("Q", B, sdp::Field::real);
  p.set_diagonal(r.vars.Q);
  const auto& alpha = s.content.alpha;
  for (int b = 0; b < B; ++b)
    if (alpha[static_cast<std::size_t>(b)] == 0) p.fix_zero(r.vars.Q, b, b);
  for (int u = 0; u < U; ++u) r.vars.lambda.push_back(p.add_scalar_var("lambda" + std::to_string(u)));

  sdp::LinearExpr obj;
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    sdp::LinearExpr power;
    sdp::LinearExpr backhaul;
    for (int u = 0; u < U; ++u) {
      const auto ui = static_cast<std::size_t>(u);
      power.add_diag(r.vars.W[ui], b, 1.0);
      if (!s.content.cached(b, u)) backhaul.add_diag(r.vars.W[ui], b, 1.0);
      obj.add_diag(r.vars.W[ui], b, w.eta[bi] + w.beta[bi][ui]);
    }
    if (alpha[bi] != 0) {
      power.add_diag(r.vars.Q, b, 1.0);
      backhaul.add_diag(r.vars.Q, b, -(std::exp2(s.params.backhaul_capacity[bi]) - 1.0));
      obj.add_diag(r.vars.Q, b, w.eta[bi]);
    }
    p.add_linear("power" + std::to_string(b), power, sdp::Relation::less_equal, s.params.max_tx_power[bi]);
    p.add_linear("backhaul" + std::to_string(b), backhaul, sdp::Relation::less_equal, 0.0);
  }
  p.set_objective(obj);

  for (int u = 0; u < U; ++u) {
    r.blocks.push_back(build_delta_block(s, u));
    p.add_lmi("robust_sinr" + std::to_string(u), r.blocks.back().to_matrix_expr(r.vars));
  }
  return r;
}

/// Searches lambda >= 0 with Delta_u(lambda) >= -tol sigma_u^2 I for fixed numeric
/// beamformers (rank one) and quantization noise. lambda_min(Delta_u(lambda))
/// is concave in lambda, so a golden-section search over the interval where the
/// corner entry stays nonnegative finds its maximum.
inline std::optional<double> robust_sinr_certificate(const std::vector<CVector>& w, const std::vector<double>& q,
                                                     const Scenario& s, int u, double tol = 1e-7) {
  const DeltaBlockSpec d = build_delta_block(s, u);
  std::vector<CMatrix> W;
  for (const auto& v : w) W.push_back(v * v.adjoint());
  const CMatrix g = d.G(W, q);
  const CVector& h = s.channels[static_cast<std::size_t>(u)].h_tilde;
  const double corner = (h.adjoint() * g * h)(0, 0).real() - d.noise;
  const CMatrix base = d.evaluate_from_g(g, 0.0);
  const CMatrix coef = d.lambda_coef();
  // An eigenvalue defect of tol * sigma^2 in Delta_u moves h^H G_u h - sigma^2
  // by at most tol * sigma^2 (1 + |e|^2) at the worst error e.
  const double scale = d.noise;
  auto f = [&](double lam) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(base + lam * coef, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
  };
  if (corner < -tol * scale) return std::nullopt;
  double lo = 0.0, hi = std::max(0.0, corner);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
  double fa = f(a), fb = f(b);
  double best_l = 0.0, best_f = f(0.0);
  for (auto [l, v] : {std::pair{a, fa}, std::pair{b, fb}})
    if (v > best_f) best_f = v, best_l = l;
  for (int it = 0; it < 100 && hi - lo > 1e-14 * (1.0 + hi); ++it) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + phi * (hi - lo);
      fb = f(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - phi * (hi - lo);
      fa = f(a);
    }
    for (auto [l, v] : {std::pair{a, fa}, std::pair{b, fb}})
      if (v > best_f) best_f = v, best_l = l;
    if (best_f >= 0.0) break;
  }
  if (best_f >= -tol * scale) return best_l;
  return std::nullopt;
}

}  // namespace cran::robust
