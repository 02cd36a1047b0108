#pragma once

// Ground-truth metrics for rank-one solutions: SINR, worst-case SINR over the
// CSI error ellipsoid (sampled and brute-force grid), network cost and BS
// clustering.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cran/core/random.hpp"
#include "cran/core/units.hpp"
#include "cran/recovery/beam_solution.hpp"
#include "cran/scenario/scenario.hpp"

namespace cran::eval {

using recovery::BeamSolution;
using scenario::ChannelEstimate;
using scenario::Scenario;

/// |h^H w_u|^2 / (sum_{v != u} |h^H w_v|^2 + sum_b alpha_b |h_b|^2 q_b + sigma^2).
inline double sinr(const std::vector<CVector>& w, const std::vector<double>& q, const CVector& h, int u,
                   const std::vector<int>& alpha, double noise) {
  double signal = 0.0, interference = noise;
  for (std::size_t v = 0; v < w.size(); ++v) {
    const double g = std::norm(h.dot(w[v]));
    if (static_cast<int>(v) == u)
      signal = g;
    else
      interference += g;
  }
  for (Eigen::Index b = 0; b < h.size(); ++b) interference += alpha[static_cast<std::size_t>(b)] * std::norm(h(b)) * q[static_cast<std::size_t>(b)];
  return signal / interference;
}

inline double sinr(const BeamSolution& sol, const Scenario& s, const CVector& h, int u) {
  return sinr(sol.w, sol.q, h, u, s.content.alpha, s.params.noise_power[static_cast<std::size_t>(u)]);
}

namespace detail {

/// SINR at h as a ratio of Hermitian forms: h^H A h / (h^H D h + sigma^2).
struct SinrForm {
  CMatrix A, D;
  double noise;

  SinrForm(const std::vector<CVector>& w, const std::vector<double>& q, int u, const std::vector<int>& alpha, double n)
      : noise(n) {
    const auto B = static_cast<Eigen::Index>(q.size());
    A = w[static_cast<std::size_t>(u)] * w[static_cast<std::size_t>(u)].adjoint();
    D = CMatrix::Zero(B, B);
    for (std::size_t v = 0; v < w.size(); ++v)
      if (static_cast<int>(v) != u) D += w[v] * w[v].adjoint();
    for (Eigen::Index b = 0; b < B; ++b) D(b, b) += alpha[static_cast<std::size_t>(b)] * q[static_cast<std::size_t>(b)];
  }

  double operator()(const CVector& h) const {
    const double s = (h.adjoint() * A * h)(0, 0).real();
    const double i = (h.adjoint() * D * h)(0, 0).real() + noise;
    return s / i;
  }
};

}  // namespace detail

/// Minimum SINR over n_samples errors drawn in the ellipsoid e^H E e <= 1;
/// half of them lie on the shell e^H E e = 1 - 1e-9.
inline double worst_case_sinr_sampled(const std::vector<CVector>& w, const std::vector<double>& q,
                                      const ChannelEstimate& ch, int u, const std::vector<int>& alpha, double noise,
                                      int n_samples, std::uint64_t seed) {
  require(n_samples >= 1, "n_samples must be at least 1");
  const detail::SinrForm f(w, q, u, alpha, noise);
  const CMatrix root = scenario::inverse_sqrt(ch.error_shape);
  const auto B = ch.h_tilde.size();
  auto rng = make_rng(seed, 4);
  const double shell = std::sqrt(1.0 - 1e-9);
  double best = f(ch.h_tilde);
  for (int i = 0; i < n_samples; ++i) {
    const CVector z = i % 2 == 0 ? on_complex_sphere(rng, B, shell) : uniform_in_complex_ball(rng, B);
    best = std::min(best, f(ch.h_tilde + root * z));
  }
  return best;
}

inline double worst_case_sinr_sampled(const BeamSolution& sol, const Scenario& s, int u, int n_samples,
                                      std::uint64_t seed) {
  return worst_case_sinr_sampled(sol.w, sol.q, s.channels[static_cast<std::size_t>(u)], u, s.content.alpha,
                                 s.params.noise_power[static_cast<std::size_t>(u)], n_samples, seed);
}

inline int default_grid_resolution(Eigen::Index num_bs) { return num_bs == 1 ? 201 : 61; }

/// Brute-force worst case for B <= 2: a uniform grid over the 2B real
/// coordinates of the unit ball (error e = E^{-1/2} z), every grid point also
/// projected onto the boundary shell, followed by a pattern search from the
/// best points.
inline double worst_case_sinr_grid(const std::vector<CVector>& w, const std::vector<double>& q,
                                   const ChannelEstimate& ch, int u, const std::vector<int>& alpha, double noise,
                                   int resolution = 0) {
  const auto B = ch.h_tilde.size();
  if (B > 2) throw UnsupportedSize("grid oracle supports at most 2 BSs");
  if (resolution <= 0) resolution = default_grid_resolution(B);
  require(resolution >= 2, "grid resolution must be at least 2");
  const detail::SinrForm f(w, q, u, alpha, noise);
  const CMatrix root = scenario::inverse_sqrt(ch.error_shape);
  const int dims = static_cast<int>(2 * B);
  const double step = 2.0 / (resolution - 1);

  // Allocation-free evaluation; the grid visits up to resolution^4 points.
  cplx hv[2], ev[2];
  auto value = [&](const std::vector<double>& z) {
    for (Eigen::Index b = 0; b < B; ++b) ev[b] = cplx(z[static_cast<std::size_t>(2 * b)], z[static_cast<std::size_t>(2 * b + 1)]);
    for (Eigen::Index r = 0; r < B; ++r) {
      hv[r] = ch.h_tilde(r);
      for (Eigen::Index c = 0; c < B; ++c) hv[r] += root(r, c) * ev[c];
    }
    double num = 0.0, den = f.noise;
    for (Eigen::Index r = 0; r < B; ++r)
      for (Eigen::Index c = 0; c < B; ++c) {
        num += (std::conj(hv[r]) * f.A(r, c) * hv[c]).real();
        den += (std::conj(hv[r]) * f.D(r, c) * hv[c]).real();
      }
    return num / den;
  };
  auto project = [](std::vector<double>& z) {
    double r = 0.0;
    for (double c : z) r += c * c;
    r = std::sqrt(r);
    if (r > 1.0)
      for (double& c : z) c /= r;
  };

  struct Best {
    double v;
    std::vector<double> z;
  };
  constexpr std::size_t kKeep = 4;
  std::vector<Best> best;
  auto consider = [&](double v, const std::vector<double>& z) {
    if (best.size() < kKeep || v < best.back().v) {
      best.push_back({v, z});
      std::sort(best.begin(), best.end(), [](const Best& a, const Best& b) { return a.v < b.v; });
      if (best.size() > kKeep) best.pop_back();
    }
  };

  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  std::vector<double> z(static_cast<std::size_t>(dims)), zs = z;
  for (;;) {
    double r2 = 0.0;
    for (int d = 0; d < dims; ++d) {
      z[static_cast<std::size_t>(d)] = -1.0 + step * idx[static_cast<std::size_t>(d)];
      r2 += z[static_cast<std::size_t>(d)] * z[static_cast<std::size_t>(d)];
    }
    if (r2 > 1e-30) {
      zs = z;
      const double r = std::sqrt(r2);
      for (double& c : zs) c /= r;
      consider(value(zs), zs);
    }
    if (r2 <= 1.0) consider(value(z), z);
    int d = 0;
    while (d < dims && ++idx[static_cast<std::size_t>(d)] == resolution) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == dims) break;
  }

  double result = best.front().v;
  for (auto& cand : best) {
    std::vector<double> cur = cand.z;
    double cur_v = cand.v;
    for (double h = step; h > 1e-10;) {
      bool improved = false;
      for (int d = 0; d < dims; ++d)
        for (double sgn : {1.0, -1.0}) {
          std::vector<double> trial = cur;
          trial[static_cast<std::size_t>(d)] += sgn * h;
          project(trial);
          const double v = value(trial);
          if (v < cur_v) {
            cur_v = v;
            cur = std::move(trial);
            improved = true;
          }
        }
      if (!improved) h *= 0.5;
    }
    result = std::min(result, cur_v);
  }
  return result;
}

inline double worst_case_sinr_grid(const BeamSolution& sol, const Scenario& s, int u, int resolution = 0) {
  return worst_case_sinr_grid(sol.w, sol.q, s.channels[static_cast<std::size_t>(u)], u, s.content.alpha,
                              s.params.noise_power[static_cast<std::size_t>(u)], resolution);
}

struct CostBreakdown {
  double transmit_power = 0.0;   // sum_b x_b, x_b = sum_u |w_bu|^2 + alpha_b q_b
  double amplifier_power = 0.0;  // sum_b x_b / nu_b
  double active_power = 0.0;     // sum over active BSs of P_rb
  double sleep_power = 0.0;      // sum_b P_{b,s}
  double backhaul_cost = 0.0;    // sum of R_u over uncached active links
  double total_cost = 0.0;       // amplifier + active + backhaul
  int active_bs = 0;
  std::vector<std::vector<int>> active_bs_sets;  // per user

  double total_power() const { return amplifier_power + active_power + sleep_power; }
};

/// Cost from per-link powers P[b][u] (|w_bu|^2 or the relaxed W_u[b,b]).
inline CostBreakdown cost_from_link_powers(const std::vector<std::vector<double>>& link, const std::vector<double>& q,
                                           const Scenario& s, double tau) {
  const int B = s.num_bs();
  const int U = s.num_users();
  CostBreakdown c;
  c.active_bs_sets.assign(static_cast<std::size_t>(U), {});
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    double x = s.content.alpha[bi] * std::max(q[bi], 0.0);
    for (int u = 0; u < U; ++u) x += std::max(link[bi][static_cast<std::size_t>(u)], 0.0);
    c.transmit_power += x;
    c.amplifier_power += x / s.params.amplifier_efficiency[bi];
    c.sleep_power += s.params.sleep_power[bi];
    if (x > tau) {
      c.active_power += s.params.relative_power[bi];
      ++c.active_bs;
    }
    for (int u = 0; u < U; ++u) {
      if (link[bi][static_cast<std::size_t>(u)] <= tau / U) continue;
      c.active_bs_sets[static_cast<std::size_t>(u)].push_back(b);
      if (!s.content.cached(b, u)) c.backhaul_cost += units::target_rate(s.params.target_sinr[static_cast<std::size_t>(u)]);
    }
  }
  c.total_cost = c.amplifier_power + c.active_power + c.backhaul_cost;
  return c;
}

inline CostBreakdown cost_breakdown(const BeamSolution& sol, const Scenario& s, double tau) {
  std::vector<std::vector<double>> link(static_cast<std::size_t>(s.num_bs()),
                                        std::vector<double>(static_cast<std::size_t>(s.num_users())));
  for (int b = 0; b < s.num_bs(); ++b)
    for (int u = 0; u < s.num_users(); ++u) link[static_cast<std::size_t>(b)][static_cast<std::size_t>(u)] = sol.link_power(b, u);
  return cost_from_link_powers(link, sol.q, s, tau);
}

/// User u is served by {b : |w_bu|^2 > tau / U}.
inline std::vector<std::vector<int>> bs_clustering(const BeamSolution& sol, double tau) {
  const int U = sol.num_users();
  std::vector<std::vector<int>> out(static_cast<std::size_t>(U));
  for (int u = 0; u < U; ++u)
    for (Eigen::Index b = 0; b < sol.w[static_cast<std::size_t>(u)].size(); ++b)
      if (std::norm(sol.w[static_cast<std::size_t>(u)](b)) > tau / U) out[static_cast<std::size_t>(u)].push_back(static_cast<int>(b));
  return out;
}

}  // namespace cran::eval
