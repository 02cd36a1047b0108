#pragma once

// Infeasible-start primal-dual path-following method for the internal LMI
// form (see compiled.hpp). Search direction: HKM, with a Mehrotra
// predictor-corrector step. When the run stalls or hits the iteration limit a
// phase-one problem (min t s.t. every cone shifted by t I) decides whether
// the problem is infeasible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <vector>

#include "cran/sdp/compiled.hpp"
#include "cran/sdp/problem.hpp"

namespace cran::sdp {

struct SolverOptions {
  double feas_tol = 1e-7;
  double opt_tol = 1e-7;
  int max_iters = 200;
  /// Run the phase-one problem when the main run does not reach optimality.
  bool infeasibility_check = true;
  bool verbose = false;
};

namespace detail {

struct Iterate {
  RVector x, y;
  std::vector<CMatrix> S, Z;
  RVector s, z;
};

struct IpmResult {
  Status status = Status::numerical_failure;
  Iterate it;
  int iterations = 0;
  double pobj = 0.0;
  double dobj = 0.0;
  double violation = std::numeric_limits<double>::infinity();
  double rel_dual = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  std::string message;
};

/// Largest alpha with X + alpha dX PSD (infinity when unbounded).
inline double max_step(const CMatrix& x, const CMatrix& dx) {
  Eigen::LLT<CMatrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const auto L = llt.matrixL();
  CMatrix t = L.solve(dx);
  t = L.solve(t.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

inline double max_step(const RVector& x, const RVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

class InteriorPoint {
 public:
  InteriorPoint(const Compiled& cp, const SolverOptions& opt) : cp_(cp), opt_(opt) {
    m_ = cp.num_params;
    ne_ = static_cast<int>(cp.eq_rows.size());
    nl_ = static_cast<int>(cp.lp_rows.size());
    Ae_ = RMatrix::Zero(ne_, m_);
    be_ = RVector::Zero(ne_);
    for (int i = 0; i < ne_; ++i) {
      for (const auto& [p, c] : cp.eq_rows[static_cast<std::size_t>(i)]) Ae_(i, p) += c;
      be_(i) = cp.eq_rhs[static_cast<std::size_t>(i)];
    }
    h_ = RVector(nl_);
    for (int r = 0; r < nl_; ++r) h_(r) = cp.lp_const[static_cast<std::size_t>(r)];
    data_norm_ = 1.0 + h_.norm() + be_.norm();
    for (const auto& b : cp.blocks) data_norm_ += b.constant.norm();
  }

  IpmResult run() {
    IpmResult res;
    Iterate& st = res.it;
    initial_point(st);
    const int N = std::max(1, cp_.total_cone_dim());
    const double cnorm = cp_.c.norm();
    std::vector<double> pinf_hist;
    int tiny_steps = 0;

    for (int iter = 0;; ++iter) {
      // Residuals.
      std::vector<CMatrix> Sx(cp_.blocks.size()), RP(cp_.blocks.size());
      double viol = 0.0, pinf2 = 0.0, comp = 0.0, cz = 0.0;
      for (std::size_t k = 0; k < cp_.blocks.size(); ++k) {
        const auto& b = cp_.blocks[k];
        Sx[k] = b.constant + apply_block(cp_, b, st.x);
        RP[k] = st.S[k] - Sx[k];
        viol = std::max(viol, -min_eigenvalue(Sx[k]));
        pinf2 += RP[k].squaredNorm();
        comp += (st.S[k].cwiseProduct(st.Z[k].conjugate())).sum().real();
        cz += (b.constant.cwiseProduct(st.Z[k].conjugate())).sum().real();
      }
      const RVector sx = h_ + apply_lp(cp_, st.x);
      const RVector rp = st.s - sx;
      if (nl_ > 0) viol = std::max(viol, -sx.minCoeff());
      pinf2 += rp.squaredNorm();
      comp += st.s.dot(st.z);
      const RVector rE = be_ - Ae_ * st.x;
      if (ne_ > 0) viol = std::max(viol, rE.cwiseAbs().maxCoeff());
      pinf2 += rE.squaredNorm();
      viol = std::max(viol, 0.0);

      RVector RD = cp_.c;
      {
        RVector g = RVector::Zero(m_);
        for (std::size_t k = 0; k < cp_.blocks.size(); ++k) adjoint_block(cp_, cp_.blocks[k], st.Z[k], g);
        adjoint_lp(cp_, st.z, g);
        g += Ae_.transpose() * st.y;
        RD -= g;
      }
      const double pobj = cp_.c.dot(st.x) + cp_.c0;
      const double dhom = -cz - h_.dot(st.z) + be_.dot(st.y);
      const double dobj = dhom + cp_.c0;
      const double rel_dual = RD.norm() / (1.0 + cnorm);
      const double gap = std::max(std::abs(pobj - dobj), comp);
      const double mu = comp / N;
      const double pinf = std::sqrt(pinf2) / data_norm_;

      res.iterations = iter;
      res.pobj = pobj;
      res.dobj = dobj;
      res.violation = viol;
      res.rel_dual = rel_dual;
      res.gap = gap;

      if (opt_.verbose)
        std::fprintf(stderr, "%3d pobj % .9e dobj % .9e viol %.2e pinf %.2e dinf %.2e gap %.2e mu %.2e\n", iter, pobj,
                     dobj, viol, pinf, rel_dual, gap, mu);

      if (viol <= opt_.feas_tol && rel_dual <= opt_.feas_tol && gap <= opt_.opt_tol * (1.0 + std::abs(pobj))) {
        res.status = Status::optimal;
        return res;
      }
      // Dual ray: A^*(Z) + G^T z + A_eq^T y ~ 0 with positive dual objective.
      if (dhom > 0.0 && (cp_.c - RD).norm() <= 1e-9 * dhom) {
        res.status = Status::infeasible;
        res.message = "dual ray certifies primal infeasibility";
        return res;
      }
      if (viol <= opt_.feas_tol && st.x.size() > 0 && st.x.cwiseAbs().maxCoeff() > 1e12 && pobj < -1e10) {
        res.status = Status::unbounded;
        res.message = "objective decreases without bound";
        return res;
      }
      if (iter >= opt_.max_iters) {
        res.status = Status::iteration_limit;
        res.message = "iteration limit reached";
        return res;
      }
      pinf_hist.push_back(pinf);
      if (iter >= 30 && pinf > 1e3 * opt_.feas_tol / data_norm_ && pinf > 0.7 * pinf_hist[static_cast<std::size_t>(iter - 15)]) {
        res.status = Status::numerical_failure;
        res.message = "primal infeasibility stalled";
        return res;
      }

      // Schur complement.
      std::vector<CMatrix> Sinv(cp_.blocks.size());
      RMatrix& M = M_;
      M.setZero(m_, m_);
      SchurAccumulator acc;
      for (std::size_t k = 0; k < cp_.blocks.size(); ++k) {
        Eigen::LLT<CMatrix> llt(st.S[k]);
        if (llt.info() != Eigen::Success) {
          res.status = Status::numerical_failure;
          res.message = "slack lost definiteness";
          return res;
        }
        Sinv[k] = llt.solve(CMatrix::Identity(st.S[k].rows(), st.S[k].cols()));
        Sinv[k] = hermitian_part(Sinv[k]);
        schur_block(cp_, cp_.blocks[k], st.Z[k], Sinv[k], M, acc);
      }
      acc.flush(cp_, M);
      const RVector zs = st.z.cwiseQuotient(st.s);
      schur_lp(cp_, zs, M);
      if (!factor(M)) {
        res.status = Status::numerical_failure;
        res.message = "Schur complement factorization failed";
        return res;
      }

      // Predictor.
      std::vector<CMatrix> T(cp_.blocks.size());
      for (std::size_t k = 0; k < T.size(); ++k) T[k] = -st.Z[k];
      RVector t = -st.z;
      Direction aff = direction(st, T, t, Sinv, RP, rp, rE, RD);
      const double ap_aff = std::min(1.0, primal_step(st, aff));
      const double ad_aff = std::min(1.0, dual_step(st, aff));
      double comp_aff = 0.0;
      for (std::size_t k = 0; k < T.size(); ++k)
        comp_aff += ((st.S[k] + ap_aff * aff.dS[k]).cwiseProduct((st.Z[k] + ad_aff * aff.dZ[k]).conjugate())).sum().real();
      comp_aff += (st.s + ap_aff * aff.ds).dot(st.z + ad_aff * aff.dz);
      const double sigma = std::clamp(std::pow(std::max(comp_aff, 0.0) / std::max(comp, 1e-300), 3.0), 0.0, 1.0);

      // Corrector.
      for (std::size_t k = 0; k < T.size(); ++k)
        T[k] = sigma * mu * Sinv[k] - st.Z[k] - hermitian_part(aff.dZ[k] * aff.dS[k] * Sinv[k]);
      t = (sigma * mu * st.s.cwiseInverse()) - st.z - aff.dz.cwiseProduct(aff.ds).cwiseQuotient(st.s);
      Direction d = direction(st, T, t, Sinv, RP, rp, rE, RD);

      const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
      const double ap = std::min(1.0, gamma * primal_step(st, d));
      const double ad = std::min(1.0, gamma * dual_step(st, d));
      tiny_steps = (ap < 1e-8 && ad < 1e-8) ? tiny_steps + 1 : 0;
      if (tiny_steps >= 3) {
        res.status = Status::numerical_failure;
        res.message = "step length collapsed";
        return res;
      }
      st.x += ap * d.dx;
      st.s += ap * d.ds;
      for (std::size_t k = 0; k < T.size(); ++k) {
        st.S[k] = hermitian_part(st.S[k] + ap * d.dS[k]);
        st.Z[k] = hermitian_part(st.Z[k] + ad * d.dZ[k]);
      }
      st.z += ad * d.dz;
      st.y += ad * d.dy;
    }
  }

 private:
  struct Direction {
    RVector dx, dy, ds, dz;
    std::vector<CMatrix> dS, dZ;
  };

  void initial_point(Iterate& st) const {
    st.x = RVector::Zero(m_);
    st.y = RVector::Zero(ne_);
    for (const auto& b : cp_.blocks) {
      const double n = b.n;
      double normA = 0.0, ratio = 0.0;
      for (const auto& [p, nrm] : block_param_norms(cp_, b)) {
        normA = std::max(normA, nrm);
        ratio = std::max(ratio, (1.0 + std::abs(cp_.c(p))) / (1.0 + nrm));
      }
      const double zeta = std::max({10.0, std::sqrt(n), n * ratio});
      const double xi = std::max({10.0, std::sqrt(n), normA, b.constant.norm()});
      st.S.push_back(xi * CMatrix::Identity(b.n, b.n));
      st.Z.push_back(zeta * CMatrix::Identity(b.n, b.n));
    }
    st.s = RVector(nl_);
    st.z = RVector(nl_);
    for (int r = 0; r < nl_; ++r) {
      double normA = 0.0, ratio = 0.0;
      for (const auto& [p, a] : cp_.lp_rows[static_cast<std::size_t>(r)]) {
        normA = std::max(normA, std::abs(a));
        ratio = std::max(ratio, (1.0 + std::abs(cp_.c(p))) / (1.0 + std::abs(a)));
      }
      st.s(r) = std::max({10.0, normA, std::abs(h_(r))});
      st.z(r) = std::max(10.0, ratio);
    }
  }

  /// In-place Cholesky of M_. Only the lower triangle is overwritten, so the
  /// strict upper triangle and a saved diagonal allow a regularized retry.
  bool factor(RMatrix& M) {
    const RVector diag = M.diagonal();
    llt_.emplace(M);
    if (llt_->info() == Eigen::Success) return true;
    const double scale = std::max(1e-300, diag.cwiseAbs().maxCoeff());
    for (double reg : {1e-14, 1e-12, 1e-10}) {
      M.triangularView<Eigen::StrictlyLower>() = M.transpose();
      M.diagonal() = diag.array() + reg * scale;
      llt_.emplace(M);
      if (llt_->info() == Eigen::Success) return true;
    }
    return false;
  }

  Direction direction(const Iterate& st, const std::vector<CMatrix>& T, const RVector& t, const std::vector<CMatrix>& Sinv,
                      const std::vector<CMatrix>& RP, const RVector& rp, const RVector& rE, const RVector& RD) const {
    Direction d;
    RVector g = -RD;
    for (std::size_t k = 0; k < cp_.blocks.size(); ++k)
      adjoint_block(cp_, cp_.blocks[k], T[k] + st.Z[k] * RP[k] * Sinv[k], g);
    adjoint_lp(cp_, t + st.z.cwiseProduct(rp).cwiseQuotient(st.s), g);

    RVector mg = llt_->solve(g);
    if (ne_ > 0) {
      const RMatrix W = llt_->solve(Ae_.transpose());
      const RMatrix sch = Ae_ * W;
      d.dy = sch.ldlt().solve(rE - Ae_ * mg);
      d.dx = mg + W * d.dy;
    } else {
      d.dy = RVector::Zero(0);
      d.dx = mg;
    }
    d.dS.resize(cp_.blocks.size());
    d.dZ.resize(cp_.blocks.size());
    for (std::size_t k = 0; k < cp_.blocks.size(); ++k) {
      d.dS[k] = apply_block(cp_, cp_.blocks[k], d.dx) - RP[k];
      d.dZ[k] = T[k] - hermitian_part(st.Z[k] * d.dS[k] * Sinv[k]);
    }
    d.ds = apply_lp(cp_, d.dx) - rp;
    d.dz = t - st.z.cwiseProduct(d.ds).cwiseQuotient(st.s);
    return d;
  }

  double primal_step(const Iterate& st, const Direction& d) const {
    double a = max_step(st.s, d.ds);
    for (std::size_t k = 0; k < st.S.size(); ++k) a = std::min(a, max_step(st.S[k], d.dS[k]));
    return a;
  }
  double dual_step(const Iterate& st, const Direction& d) const {
    double a = max_step(st.z, d.dz);
    for (std::size_t k = 0; k < st.Z.size(); ++k) a = std::min(a, max_step(st.Z[k], d.dZ[k]));
    return a;
  }

  const Compiled& cp_;
  SolverOptions opt_;
  int m_ = 0, ne_ = 0, nl_ = 0;
  RMatrix Ae_;
  RVector be_, h_;
  double data_norm_ = 1.0;
  RMatrix M_;
  std::optional<Eigen::LLT<Eigen::Ref<RMatrix>>> llt_;
};

/// min t s.t. every cone of cp shifted by t I, t >= -1.
inline Compiled phase_one(const Compiled& cp) {
  Compiled p1 = cp;
  const int t = cp.num_params;
  p1.num_params = t + 1;
  p1.c = RVector::Zero(t + 1);
  p1.c(t) = 1.0;
  p1.c0 = 0.0;
  for (auto& b : p1.blocks) b.scal.push_back({t, CMatrix::Identity(b.n, b.n)});
  for (auto& r : p1.lp_rows) r.emplace_back(t, 1.0);
  p1.lp_rows.push_back({{t, 1.0}});
  p1.lp_const.push_back(1.0);
  p1.lp_names.push_back("phase-one floor");
  return p1;
}

}  // namespace detail

inline SdpSolution solve_compiled(const SdpProblem& problem, const detail::Compiled& cp, const SolverOptions& opt = {}) {
  SdpSolution sol;
  detail::InteriorPoint ipm(cp, opt);
  detail::IpmResult r = ipm.run();

  if (r.status != Status::optimal && r.status != Status::infeasible && r.status != Status::unbounded &&
      opt.infeasibility_check) {
    const detail::Compiled p1 = detail::phase_one(cp);
    SolverOptions o1 = opt;
    o1.infeasibility_check = false;
    o1.verbose = false;
    detail::InteriorPoint ipm1(p1, o1);
    const detail::IpmResult r1 = ipm1.run();
    const double tstar = r1.it.x.size() > 0 ? r1.it.x(cp.num_params) : 0.0;
    if ((r1.status == Status::optimal && tstar > opt.feas_tol) || r1.status == Status::infeasible) {
      r.status = Status::infeasible;
      r.message = "phase-one optimum " + std::to_string(tstar) + " > 0";
    }
  }

  sol.status = r.status;
  sol.solver_iterations = r.iterations;
  sol.objective_value = r.pobj;
  sol.dual_objective = r.dobj;
  sol.max_constraint_violation = r.violation;
  sol.dual_residual = r.rel_dual;
  sol.gap = r.gap;
  sol.primal_residual = r.violation;
  sol.message = r.message;
  for (const auto& v : cp.vars) sol.matrix_values.push_back(detail::assemble_var(v, r.it.x));
  for (int p : cp.scalar_param) sol.scalar_values.push_back(r.it.x(p));
  (void)problem;
  return sol;
}

inline SdpSolution solve(const SdpProblem& problem, const SolverOptions& opt = {}) {
  const detail::Compiled cp = detail::compile(problem);
  return solve_compiled(problem, cp, opt);
}

}  // namespace cran::sdp
