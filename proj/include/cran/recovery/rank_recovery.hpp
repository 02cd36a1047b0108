#pragma once

// Rank-one beamformers from the relaxed W_u: principal eigenvector when the
// relaxation is tight, Gaussian randomization with robust screening otherwise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cran/eval/evaluator.hpp"
#include "cran/recovery/beam_solution.hpp"
#include "cran/robust/robust_problem.hpp"

namespace cran::recovery {

using scenario::Scenario;

/// lambda_2 / lambda_1 of a Hermitian PSD matrix (0 for rank <= 1).
inline double rank_one_ratio(const CMatrix& W) {
  if (W.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(W), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double l1 = ev(ev.size() - 1);
  if (l1 <= 0.0) return 0.0;
  return std::max(ev(ev.size() - 2), 0.0) / l1;
}

/// sqrt(lambda_1) v_1 when lambda_2 / lambda_1 <= rank_tol, with the phase
/// chosen so the largest-magnitude entry is real and positive.
inline std::optional<CVector> extract_rank_one(const CMatrix& W, double rank_tol = 1e-6) {
  if (W.rows() != W.cols()) throw InvalidInput("W must be square");
  if (hermitian_defect(W) > 1e-10 * std::max(1.0, W.cwiseAbs().maxCoeff())) throw InvalidInput("W is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(W));
  const auto& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  const double l1 = ev(n - 1);
  if (l1 <= 0.0) {
    if (l1 == 0.0 && ev(0) == 0.0) return CVector::Zero(n);
    return std::nullopt;
  }
  const double ratio = n > 1 ? std::max(ev(n - 2), 0.0) / l1 : 0.0;
  if (ratio > rank_tol) return std::nullopt;
  CVector v = es.eigenvectors().col(n - 1);
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  v *= std::conj(v(k)) / std::abs(v(k));
  return CVector(std::sqrt(l1) * v);
}

/// Smallest q_b meeting the linear backhaul constraint for fixed w.
inline std::vector<double> minimal_quantization(const std::vector<CVector>& w, const Scenario& s) {
  std::vector<double> q(static_cast<std::size_t>(s.num_bs()), 0.0);
  for (int b = 0; b < s.num_bs(); ++b) {
    if (s.content.alpha[static_cast<std::size_t>(b)] == 0) continue;
    double load = 0.0;
    for (int u = 0; u < s.num_users(); ++u)
      if (!s.content.cached(b, u)) load += std::norm(w[static_cast<std::size_t>(u)](b));
    q[static_cast<std::size_t>(b)] = load / (std::exp2(s.params.backhaul_capacity[static_cast<std::size_t>(b)]) - 1.0);
  }
  return q;
}

struct MarginReport {
  std::vector<double> power_slack;     // P_b - sum_u |w_bu|^2 - alpha_b q_b
  std::vector<double> backhaul_slack;  // (2^C_b - 1) q_b - sum_u (1 - p) |w_bu|^2
  std::vector<bool> certified;         // robust SINR certificate found
  std::vector<double> sinr_margin;     // sampled worst-case SINR / delta_u - 1
  double min_q = 0.0;

  bool ok(double feas_tol, double sinr_tol) const {
    for (double v : power_slack)
      if (v < -feas_tol) return false;
    for (double v : backhaul_slack)
      if (v < -feas_tol) return false;
    for (double v : sinr_margin)
      if (v < -sinr_tol) return false;
    return min_q >= -feas_tol;
  }
  bool all_certified() const { return std::all_of(certified.begin(), certified.end(), [](bool c) { return c; }); }
};

inline MarginReport verify_candidate(const BeamSolution& sol, const Scenario& s, int n_samples = 10000,
                                     std::uint64_t seed = 0, double cert_tol = 1e-7) {
  MarginReport r;
  const int B = s.num_bs();
  const int U = s.num_users();
  r.min_q = sol.q.empty() ? 0.0 : *std::min_element(sol.q.begin(), sol.q.end());
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    double x = s.content.alpha[bi] * sol.q[bi], load = 0.0;
    for (int u = 0; u < U; ++u) {
      x += sol.link_power(b, u);
      if (!s.content.cached(b, u)) load += sol.link_power(b, u);
    }
    r.power_slack.push_back(s.params.max_tx_power[bi] - x);
    const double cap = std::exp2(s.params.backhaul_capacity[bi]) - 1.0;
    r.backhaul_slack.push_back(s.content.alpha[bi] ? cap * sol.q[bi] - load : -load);
  }
  for (int u = 0; u < U; ++u) {
    r.certified.push_back(robust::robust_sinr_certificate(sol.w, sol.q, s, u, cert_tol).has_value());
    const double wc = n_samples > 0 ? eval::worst_case_sinr_sampled(sol, s, u, n_samples, split_seed(seed, static_cast<std::uint64_t>(u)))
                                    : eval::sinr(sol, s, s.channels[static_cast<std::size_t>(u)].h_tilde, u);
    r.sinr_margin.push_back(wc / s.params.target_sinr[static_cast<std::size_t>(u)] - 1.0);
  }
  return r;
}

struct RandomizationOptions {
  int n_candidates = 100;
  int max_scale_steps = 40;
  double feas_tol = 1e-7;
};

namespace detail {

inline bool power_ok(const std::vector<CVector>& w, const std::vector<double>& q, const Scenario& s, double tol) {
  for (int b = 0; b < s.num_bs(); ++b) {
    double x = s.content.alpha[static_cast<std::size_t>(b)] * q[static_cast<std::size_t>(b)];
    for (const auto& v : w) x += std::norm(v(b));
    if (x > s.params.max_tx_power[static_cast<std::size_t>(b)] + tol) return false;
  }
  return true;
}

inline bool robust_ok(const std::vector<CVector>& w, const std::vector<double>& q, const Scenario& s) {
  for (int u = 0; u < s.num_users(); ++u)
    if (!robust::robust_sinr_certificate(w, q, s, u, 0.0)) return false;
  return true;
}

inline std::vector<CVector> scaled(const std::vector<CVector>& w, double t) {
  std::vector<CVector> out;
  for (const auto& v : w) out.push_back(t * v);
  return out;
}

/// Smallest t in [lo, t_max] (binary search) at which the scaled beamformers
/// are robustly feasible, t_max being the largest scale the power budgets
/// allow; q always takes its minimal backhaul-feasible value.
inline std::optional<BeamSolution> scale_to_feasibility(const std::vector<CVector>& w, const Scenario& s, double lo,
                                                        const RandomizationOptions& opt) {
  const int B = s.num_bs();
  const auto q1 = minimal_quantization(w, s);
  double t_max = std::numeric_limits<double>::infinity();
  for (int b = 0; b < B; ++b) {
    double x = s.content.alpha[static_cast<std::size_t>(b)] * q1[static_cast<std::size_t>(b)];
    for (const auto& v : w) x += std::norm(v(b));
    if (x > 0.0) t_max = std::min(t_max, std::sqrt((s.params.max_tx_power[static_cast<std::size_t>(b)] + opt.feas_tol) / x));
  }
  if (!std::isfinite(t_max) || t_max < lo) return std::nullopt;
  auto feasible = [&](double t) {
    const auto wt = scaled(w, t);
    return robust_ok(wt, minimal_quantization(wt, s), s);
  };
  double hi = t_max;
  if (!feasible(hi)) return std::nullopt;
  if (lo > 0.0 && feasible(lo)) {
    hi = lo;
  } else {
    for (int it = 0; it < opt.max_scale_steps && hi - lo > 1e-9 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
  }
  BeamSolution cand;
  cand.w = scaled(w, hi);
  cand.q = minimal_quantization(cand.w, s);
  if (!power_ok(cand.w, cand.q, s, opt.feas_tol)) return std::nullopt;
  cand.feasible = true;
  return cand;
}

}  // namespace detail

/// Draws w_u ~ CN(0, W_u) and scales each draw by the smallest t >= 1 that
/// makes it robustly feasible. The winner has the least true cost, then least total power,
/// then lowest candidate index.
inline std::optional<BeamSolution> gaussian_randomization(const std::vector<CMatrix>& W, const Scenario& s,
                                                          const RandomizationOptions& opt, std::uint64_t seed) {
  if (opt.n_candidates <= 0) return std::nullopt;
  const int B = s.num_bs();
  std::vector<CMatrix> roots;
  for (const auto& w : W) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(w));
    const RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    roots.push_back(es.eigenvectors() * ev.asDiagonal());
  }

  std::optional<BeamSolution> best;
  double best_cost = std::numeric_limits<double>::infinity(), best_power = best_cost;
  for (int k = 0; k < opt.n_candidates; ++k) {
    auto rng = make_rng(seed, 100 + static_cast<std::uint64_t>(k));
    std::vector<CVector> w;
    for (const auto& r : roots) w.push_back(r * complex_gaussian_vector(rng, B));
    auto cand = detail::scale_to_feasibility(w, s, 1.0, opt);
    if (!cand) continue;
    const auto cost = eval::cost_breakdown(*cand, s, s.params.active_threshold);
    if (cost.total_cost < best_cost || (cost.total_cost == best_cost && cost.transmit_power < best_power)) {
      best_cost = cost.total_cost;
      best_power = cost.transmit_power;
      cand->recovered_via = RecoveryMethod::randomization;
      best = std::move(cand);
    }
  }
  return best;
}

struct RecoveryOptions {
  double rank_tol = 1e-6;
  RandomizationOptions randomization;
};

/// Eigen extraction when every W_u is numerically rank one and the result is
/// robustly feasible; otherwise Gaussian randomization. Returns nullopt when
/// neither route yields a feasible candidate.
inline std::optional<BeamSolution> recover(const std::vector<CMatrix>& W, const Scenario& s,
                                           const RecoveryOptions& opt = {}, std::uint64_t seed = 0) {
  std::vector<double> ratios;
  for (const auto& w : W) ratios.push_back(rank_one_ratio(w));

  BeamSolution sol;
  bool rank_one = true;
  for (const auto& w : W) {
    auto v = extract_rank_one(w, opt.rank_tol);
    if (!v) {
      rank_one = false;
      break;
    }
    sol.w.push_back(*v);
  }
  if (rank_one) {
    // The relaxed optimum sits on the robust SINR boundary up to solver
    // accuracy; a scale factor t >= 1 absorbs that residue.
    auto cand = detail::scale_to_feasibility(sol.w, s, 1.0, opt.randomization);
    if (cand) {
      cand->rank_one_ratio = ratios;
      cand->recovered_via = RecoveryMethod::eigen;
      return cand;
    }
  }
  auto r = gaussian_randomization(W, s, opt.randomization, seed);
  if (r) r->rank_one_ratio = ratios;
  return r;
}

}  // namespace cran::recovery
