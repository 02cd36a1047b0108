#pragma once

// Real symmetric embedding of complex Hermitian programs:
//   phi(X) = [Re X, -Im X; Im X, Re X],
// which preserves products, adjoints and PSD-ness. A complex program maps to
// a real one over 2n x 2n symmetric variables with the same optimal value.

#include <vector>

#include "cran/sdp/problem.hpp"

namespace cran::sdp {

inline CMatrix real_embedding(const CMatrix& x) {
  const auto r = x.rows(), c = x.cols();
  RMatrix m(2 * r, 2 * c);
  m << x.real(), -x.imag(), x.imag(), x.real();
  return m.cast<cplx>();
}

/// Inverse of real_embedding on the averaged (structured) part of a 2n x 2n
/// symmetric matrix.
inline CMatrix complex_from_embedding(const CMatrix& m) {
  const auto n = m.rows() / 2;
  const RMatrix re = 0.5 * (m.topLeftCorner(n, n).real() + m.bottomRightCorner(n, n).real());
  const RMatrix im = 0.5 * (m.bottomLeftCorner(n, n).real() - m.topRightCorner(n, n).real());
  CMatrix x(n, n);
  x.real() = re;
  x.imag() = im;
  return x;
}

struct EmbeddedProblem {
  SdpProblem problem;

  /// Complex-valued solution of the original program from a solution of the
  /// embedded one.
  SdpSolution recover(const SdpSolution& real_sol) const {
    SdpSolution out = real_sol;
    out.matrix_values.clear();
    for (std::size_t i = 0; i < real_sol.matrix_values.size(); ++i) {
      CMatrix x = complex_from_embedding(real_sol.matrix_values[i]);
      if (original_field[i] == Field::real) x = CMatrix(x.real().cast<cplx>());
      out.matrix_values.push_back(std::move(x));
    }
    return out;
  }

  std::vector<Field> original_field;
};

inline EmbeddedProblem embed_real(const SdpProblem& p) {
  p.validate();
  EmbeddedProblem e;
  SdpProblem& q = e.problem;
  for (const auto& d : p.matrix_vars()) {
    e.original_field.push_back(d.field);
    const int n = d.dim;
    const MatrixVar v = q.add_matrix_var(d.name, 2 * n, Field::real);
    if (d.diagonal) q.set_diagonal(v);
    for (const auto& [r, c] : d.fixed_zero) {
      q.fix_zero(v, r, c);
      q.fix_zero(v, n + r, n + c);
      if (r != c) {
        q.fix_zero(v, r, n + c);
        q.fix_zero(v, c, n + r);
      }
    }
    if (d.field == Field::real && !d.diagonal)
      for (int r = 0; r < n; ++r)
        for (int c = r + 1; c < n; ++c) {
          q.fix_zero(v, r, n + c);
          q.fix_zero(v, c, n + r);
        }
  }
  for (const auto& d : p.scalar_vars()) q.add_scalar_var(d.name, d.lower_bound, d.group);

  // Re(a X[r,c]) with Re X = (M11 + M22)/2 and Im X = (M21 - M12)/2.
  auto embed_linear = [&](const LinearExpr& in) {
    LinearExpr out;
    out.constant = in.constant;
    out.scalar_terms = in.scalar_terms;
    for (const auto& t : in.entry_terms) {
      const int n = p.matrix_decl(t.var).dim;
      const double a = t.coef.real(), b = t.coef.imag();
      out.add(t.var, t.row, t.col, 0.5 * a);
      out.add(t.var, n + t.row, n + t.col, 0.5 * a);
      if (b != 0.0) {
        out.add(t.var, n + t.row, t.col, -0.5 * b);
        out.add(t.var, t.row, n + t.col, 0.5 * b);
      }
    }
    return out;
  };

  q.set_objective(embed_linear(p.objective()));
  for (const auto& l : p.linear_constraints()) q.add_linear(l.name, embed_linear(l.expr), l.relation, l.rhs);
  for (const auto& lmi : p.lmi_constraints()) {
    const auto& in = lmi.expr;
    MatrixExpr out(2 * in.dim);
    out.constant = real_embedding(in.constant);
    for (const auto& t : in.congruences)
      out.add(t.var, t.coef, t.map ? std::make_shared<const CMatrix>(real_embedding(*t.map)) : nullptr);
    for (const auto& t : in.scaled) out.add(t.var, real_embedding(t.coef));
    q.add_lmi(lmi.name, std::move(out));
  }
  return e;
}

}  // namespace cran::sdp
