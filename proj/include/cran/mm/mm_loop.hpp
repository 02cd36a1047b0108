#pragma once

// Reweighted majorization-minimization over the smoothed l0 cost. Each outer
// iteration solves the linear surrogate SDP and re-linearizes the concave
// log terms at the new point.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "cran/eval/evaluator.hpp"
#include "cran/robust/robust_problem.hpp"
#include "cran/sdp/solver.hpp"

namespace cran::mm {

using robust::SurrogateWeights;
using scenario::Scenario;

inline double lambda_eps(double eps) {
  require(eps > 0.0, "epsilon must be positive");
  return 1.0 / std::log1p(1.0 / eps);
}

/// log(1 + x/eps) / log(1 + 1/eps).
inline double l0_smooth(double x, double eps) {
  if (!(x >= 0.0)) throw InvalidInput("l0_smooth needs x >= 0");
  return std::log1p(x / eps) * lambda_eps(eps);
}

struct MmParams {
  double epsilon = 1e-6;
  double cost_rel_tol = 1e-4;
  int max_outer_iters = 100;
  /// When non-empty, epsilon follows this schedule (one MM run per value,
  /// warm-started weights) and `epsilon` is ignored.
  std::vector<double> epsilon_schedule;

  double lambda() const { return lambda_eps(epsilon); }
};

/// Relaxed point: W_u matrices and quantization noise q_b.
struct RelaxedPoint {
  std::vector<CMatrix> W;
  std::vector<double> q;
};

namespace detail {

inline double clamp_diag(double v, double tol, const char* what) {
  if (v < -tol) throw InvalidInput(std::string(what) + " has a negative diagonal entry");
  return std::max(v, 0.0);
}

constexpr double kDiagTol = 1e-5;

/// x_b = sum_u W_u[b,b] + alpha_b q_b and d_bu = W_u[b,b], clamped at zero.
struct Loads {
  std::vector<double> x;
  std::vector<std::vector<double>> d;
};

inline Loads loads(const RelaxedPoint& p, const Scenario& s) {
  const int B = s.num_bs();
  const int U = s.num_users();
  Loads l;
  l.x.assign(static_cast<std::size_t>(B), 0.0);
  l.d.assign(static_cast<std::size_t>(B), std::vector<double>(static_cast<std::size_t>(U), 0.0));
  for (int b = 0; b < B; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    double x = s.content.alpha[bi] * clamp_diag(p.q[bi], kDiagTol, "q");
    for (int u = 0; u < U; ++u) {
      const double v = clamp_diag(p.W[static_cast<std::size_t>(u)](b, b).real(), kDiagTol, "W");
      l.d[bi][static_cast<std::size_t>(u)] = v;
      x += v;
    }
    l.x[bi] = x;
  }
  return l;
}

inline double backhaul_factor(const Scenario& s, int b, int u) {
  return s.content.cached(b, u) ? 0.0 : units::target_rate(s.params.target_sinr[static_cast<std::size_t>(u)]);
}

}  // namespace detail

/// sum_b [x_b / nu_b + lambda_eps P_rb log(1 + x_b/eps)
///        + lambda_eps sum_u R_u (1 - p_{b,f_u}) log(1 + W_u[b,b]/eps)].
inline double smoothed_cost(const RelaxedPoint& p, const Scenario& s, double eps) {
  const auto l = detail::loads(p, s);
  const double le = lambda_eps(eps);
  double c = 0.0;
  for (int b = 0; b < s.num_bs(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    c += l.x[bi] / s.params.amplifier_efficiency[bi] + le * s.params.relative_power[bi] * std::log1p(l.x[bi] / eps);
    for (int u = 0; u < s.num_users(); ++u)
      c += le * detail::backhaul_factor(s, b, u) * std::log1p(l.d[bi][static_cast<std::size_t>(u)] / eps);
  }
  return c;
}

inline SurrogateWeights update_weights(const RelaxedPoint& p, const Scenario& s, double eps) {
  const auto l = detail::loads(p, s);
  const double le = lambda_eps(eps);
  SurrogateWeights w = SurrogateWeights::ones(s.num_bs(), s.num_users());
  for (int b = 0; b < s.num_bs(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    w.eta[bi] = 1.0 / s.params.amplifier_efficiency[bi] + le * s.params.relative_power[bi] / (eps + l.x[bi]);
    for (int u = 0; u < s.num_users(); ++u)
      w.beta[bi][static_cast<std::size_t>(u)] =
          detail::backhaul_factor(s, b, u) * le / (eps + l.d[bi][static_cast<std::size_t>(u)]);
  }
  return w;
}

/// Constant of the majorizer at expansion point p: the smoothed cost minus the
/// linear surrogate, both evaluated at p.
inline double surrogate_constant(const RelaxedPoint& p, const Scenario& s, double eps) {
  const auto l = detail::loads(p, s);
  const double le = lambda_eps(eps);
  double c = 0.0;
  for (int b = 0; b < s.num_bs(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const double y = l.x[bi];
    c += le * s.params.relative_power[bi] * (std::log1p(y / eps) - y / (eps + y));
    for (int u = 0; u < s.num_users(); ++u) {
      const double yu = l.d[bi][static_cast<std::size_t>(u)];
      c += le * detail::backhaul_factor(s, b, u) * (std::log1p(yu / eps) - yu / (eps + yu));
    }
  }
  return c;
}

/// Linear surrogate sum_b eta_b x_b + sum_{b,u} beta_bu W_u[b,b].
inline double surrogate_value(const RelaxedPoint& p, const SurrogateWeights& w, const Scenario& s) {
  const auto l = detail::loads(p, s);
  double v = 0.0;
  for (int b = 0; b < s.num_bs(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    v += w.eta[bi] * l.x[bi];
    for (int u = 0; u < s.num_users(); ++u) v += w.beta[bi][static_cast<std::size_t>(u)] * l.d[bi][static_cast<std::size_t>(u)];
  }
  return v;
}

/// True cost of a relaxed point, reading W_u[b,b] as the link power.
inline double true_cost(const RelaxedPoint& p, const Scenario& s) {
  const auto l = detail::loads(p, s);
  return eval::cost_from_link_powers(l.d, p.q, s, s.params.active_threshold).total_cost;
}

struct TraceRecord {
  int iter = 0;
  double epsilon = 0.0;
  double smoothed_cost = 0.0;
  /// Surrogate optimum plus the majorizer constant (the first iteration uses
  /// unit weights and has no constant).
  double surrogate_obj = 0.0;
  double true_cost = 0.0;
  sdp::Status solver_status = sdp::Status::optimal;
  int solver_iterations = 0;
  double wall_ms = 0.0;
  SurrogateWeights weights;  // weights used in this iteration's solve
};

struct MmResult {
  bool has_solution = false;
  RelaxedPoint point;
  std::vector<double> lambda;
  sdp::SdpSolution solution;  // last accepted solve
  std::vector<TraceRecord> trace;
  bool converged = false;
  bool degraded = false;
  std::string message;
};

inline bool has_converged(const std::vector<TraceRecord>& trace, double cost_rel_tol) {
  if (trace.size() < 2) return false;
  const double prev = trace[trace.size() - 2].smoothed_cost;
  const double cur = trace.back().smoothed_cost;
  return std::abs(cur - prev) <= cost_rel_tol * (1.0 + std::abs(prev));
}

/// Throws ScenarioInfeasible when the very first surrogate problem is
/// infeasible. Later solver failures stop the loop and keep the last accepted
/// iterate, flagged as degraded.
inline MmResult run(const Scenario& s, const MmParams& params = {}, const sdp::SolverOptions& solver = {}) {
  std::vector<double> schedule = params.epsilon_schedule;
  if (schedule.empty()) schedule.push_back(params.epsilon);
  for (double e : schedule) require(e > 0.0, "epsilon must be positive");
  require(params.max_outer_iters >= 1, "max_outer_iters must be at least 1");

  MmResult res;
  SurrogateWeights weights = SurrogateWeights::ones(s.num_bs(), s.num_users());
  double constant = 0.0;
  int iter = 0;
  for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
    const double eps = schedule[stage];
    if (res.has_solution) {
      weights = update_weights(res.point, s, eps);
      constant = surrogate_constant(res.point, s, eps);
    }
    const std::size_t stage_start = res.trace.size();
    for (int m = 0; m < params.max_outer_iters; ++m, ++iter) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto prob = robust::assemble_sdp(s, weights);
      sdp::SdpSolution sol = sdp::solve(prob.problem, solver);
      const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

      if (!sol.optimal()) {
        if (!res.has_solution && sol.status == sdp::Status::infeasible)
          throw ScenarioInfeasible("robust SINR targets are not attainable: " + sol.message);
        TraceRecord rec;
        rec.iter = iter;
        rec.epsilon = eps;
        rec.solver_status = sol.status;
        rec.solver_iterations = sol.solver_iterations;
        rec.wall_ms = ms;
        rec.weights = weights;
        rec.smoothed_cost = res.has_solution ? res.trace.back().smoothed_cost : std::nan("");
        rec.true_cost = res.has_solution ? res.trace.back().true_cost : std::nan("");
        rec.surrogate_obj = std::nan("");
        res.trace.push_back(std::move(rec));
        res.degraded = true;
        res.message = std::string("solver stopped with status ") + sdp::to_string(sol.status) +
                      (sol.message.empty() ? "" : ": " + sol.message);
        return res;
      }

      RelaxedPoint pt{prob.W(sol), prob.q(sol)};
      TraceRecord rec;
      rec.iter = iter;
      rec.epsilon = eps;
      rec.smoothed_cost = smoothed_cost(pt, s, eps);
      rec.surrogate_obj = sol.objective_value + constant;
      rec.true_cost = true_cost(pt, s);
      rec.solver_status = sol.status;
      rec.solver_iterations = sol.solver_iterations;
      rec.wall_ms = ms;
      rec.weights = weights;
      res.trace.push_back(std::move(rec));
      res.point = std::move(pt);
      res.lambda = prob.lambda(sol);
      res.solution = std::move(sol);
      res.has_solution = true;

      const std::vector<TraceRecord> stage_trace(res.trace.begin() + static_cast<std::ptrdiff_t>(stage_start),
                                                 res.trace.end());
      if (has_converged(stage_trace, params.cost_rel_tol)) {
        res.converged = true;
        break;
      }
      res.converged = false;
      weights = update_weights(res.point, s, eps);
      constant = surrogate_constant(res.point, s, eps);
    }
  }
  return res;
}

/// Largest increase of the smoothed cost between consecutive iterations of
/// one epsilon stage, relative to 1 + |previous| (0 for a descending trace).
inline double max_relative_increase(const std::vector<TraceRecord>& trace) {
  double worst = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& a = trace[i - 1];
    const auto& b = trace[i];
    if (a.epsilon != b.epsilon || !std::isfinite(a.smoothed_cost) || !std::isfinite(b.smoothed_cost)) continue;
    worst = std::max(worst, (b.smoothed_cost - a.smoothed_cost) / (1.0 + std::abs(a.smoothed_cost)));
  }
  return worst;
}

/// Iterations until the stopping rule fired (trace length when it never did).
inline int iterations_to_convergence(const MmResult& r) { return static_cast<int>(r.trace.size()); }

/// One row per outer iteration. wall_ms is left empty unless include_timing
/// is set, since it is the only non-reproducible field.
inline void write_trace_csv(const std::vector<TraceRecord>& trace, std::ostream& out, bool include_timing = true) {
  char buf[256];
  out << "iter,smoothed_cost,surrogate_obj,true_cost,solver_status,wall_ms,epsilon,solver_iterations\n";
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g,%.12g,%s,", r.iter, r.smoothed_cost, r.surrogate_obj, r.true_cost,
                  sdp::to_string(r.solver_status));
    out << buf;
    if (include_timing) {
      std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.12g,%d\n", r.epsilon, r.solver_iterations);
    out << buf;
  }
}

}  // namespace cran::mm
