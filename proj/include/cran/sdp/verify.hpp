#pragma once

// Feasibility check of a candidate SdpSolution recomputed from the raw
// variable values, without touching solver internals.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cran/sdp/problem.hpp"

namespace cran::sdp {

enum class ConstraintClass { linear_inequality, linear_equality, lmi, variable_psd, sparsity_pattern, scalar_bound };

inline const char* to_string(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::linear_inequality: return "linear-inequality";
    case ConstraintClass::linear_equality: return "linear-equality";
    case ConstraintClass::lmi: return "lmi";
    case ConstraintClass::variable_psd: return "variable-psd";
    case ConstraintClass::sparsity_pattern: return "sparsity-pattern";
    case ConstraintClass::scalar_bound: return "scalar-bound";
  }
  return "unknown";
}

struct Residual {
  ConstraintClass cls;
  std::string name;
  double violation = 0.0;  // >= 0; 0 means satisfied
};

struct FeasibilityReport {
  std::vector<Residual> residuals;
  double objective = 0.0;

  /// Largest violation within one class (0 if the class is empty).
  double worst(ConstraintClass c) const {
    double w = 0.0;
    for (const auto& r : residuals)
      if (r.cls == c) w = std::max(w, r.violation);
    return w;
  }
  double worst() const {
    double w = 0.0;
    for (const auto& r : residuals) w = std::max(w, r.violation);
    return w;
  }
  const Residual* find(const std::string& name) const {
    for (const auto& r : residuals)
      if (r.name == name) return &r;
    return nullptr;
  }
  bool ok(double tol) const { return worst() <= tol; }
};

/// Violations are absolute: positive part of (lhs - rhs) for <=, |lhs - rhs|
/// for equalities, and minus the smallest eigenvalue for LMIs and PSD cones.
inline FeasibilityReport verify_solution(const SdpProblem& p, const SdpSolution& s) {
  if (s.matrix_values.size() != p.matrix_vars().size() || s.scalar_values.size() != p.scalar_vars().size())
    throw StructuralError("solution does not match the problem's variable list");
  for (std::size_t i = 0; i < p.matrix_vars().size(); ++i) {
    const int n = p.matrix_vars()[i].dim;
    if (s.matrix_values[i].rows() != n || s.matrix_values[i].cols() != n)
      throw StructuralError("value of '" + p.matrix_vars()[i].name + "' has the wrong size");
  }

  FeasibilityReport rep;
  rep.objective = evaluate(p.objective(), s);
  for (std::size_t i = 0; i < p.matrix_vars().size(); ++i) {
    const auto& d = p.matrix_vars()[i];
    const CMatrix& x = s.matrix_values[i];
    rep.residuals.push_back({ConstraintClass::variable_psd, d.name + " psd",
                             std::max(0.0, -min_eigenvalue(x)) + 0.5 * hermitian_defect(x)});
    double pat = 0.0;
    for (int r = 0; r < d.dim; ++r)
      for (int c = r; c < d.dim; ++c) {
        if (d.is_fixed(r, c)) pat = std::max(pat, std::abs(x(r, c)));
        if (d.field == Field::real) pat = std::max(pat, std::abs(x(r, c).imag()));
      }
    if (d.has_pattern() || d.field == Field::real)
      rep.residuals.push_back({ConstraintClass::sparsity_pattern, d.name + " pattern", pat});
  }
  for (std::size_t i = 0; i < p.scalar_vars().size(); ++i) {
    const auto& d = p.scalar_vars()[i];
    if (!std::isfinite(d.lower_bound)) continue;
    rep.residuals.push_back(
        {ConstraintClass::scalar_bound, d.name + " lower bound", std::max(0.0, d.lower_bound - s.scalar_values[i])});
  }
  for (const auto& l : p.linear_constraints()) {
    const double lhs = evaluate(l.expr, s);
    switch (l.relation) {
      case Relation::less_equal:
        rep.residuals.push_back({ConstraintClass::linear_inequality, l.name, std::max(0.0, lhs - l.rhs)});
        break;
      case Relation::greater_equal:
        rep.residuals.push_back({ConstraintClass::linear_inequality, l.name, std::max(0.0, l.rhs - lhs)});
        break;
      case Relation::equal:
        rep.residuals.push_back({ConstraintClass::linear_equality, l.name, std::abs(lhs - l.rhs)});
        break;
    }
  }
  for (const auto& lmi : p.lmi_constraints())
    rep.residuals.push_back({ConstraintClass::lmi, lmi.name, std::max(0.0, -min_eigenvalue(evaluate(lmi.expr, s)))});
  return rep;
}

}  // namespace cran::sdp
