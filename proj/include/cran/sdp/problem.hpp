#pragma once

// Modeling layer for small dense conic programs: a real linear objective over
// Hermitian PSD matrix variables and bounded scalar variables, subject to
// linear (in)equalities and affine linear matrix inequalities (LMIs).

#include <cmath>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cran/core/types.hpp"

namespace cran::sdp {

enum class Field { complex, real };

struct MatrixVar {
  std::size_t id = 0;
};
struct ScalarVar {
  std::size_t id = 0;
};

struct MatrixVarDecl {
  std::string name;
  int dim = 0;
  Field field = Field::complex;
  bool diagonal = false;
  /// Entries (row <= col) pinned to zero; together with `diagonal` this is the
  /// variable's sparsity pattern.
  std::set<std::pair<int, int>> fixed_zero;

  bool has_pattern() const { return diagonal || !fixed_zero.empty(); }
  bool is_fixed(int r, int c) const {
    if (r > c) std::swap(r, c);
    if (diagonal && r != c) return true;
    return fixed_zero.count({r, c}) != 0;
  }
};

struct ScalarVarDecl {
  std::string name;
  double lower_bound = 0.0;  // -inf for a free variable
  std::string group;
};

/// constant + sum coef * s + sum Re(coef * X[row, col]).
struct LinearExpr {
  struct Entry {
    MatrixVar var;
    int row = 0;
    int col = 0;
    cplx coef;
  };
  double constant = 0.0;
  std::vector<std::pair<ScalarVar, double>> scalar_terms;
  std::vector<Entry> entry_terms;

  LinearExpr& add(ScalarVar v, double coef) {
    scalar_terms.emplace_back(v, coef);
    return *this;
  }
  LinearExpr& add(MatrixVar v, int row, int col, cplx coef) {
    entry_terms.push_back({v, row, col, coef});
    return *this;
  }
  /// coef * tr(A_i X) with A_i the i-th diagonal selector.
  LinearExpr& add_diag(MatrixVar v, int i, double coef) { return add(v, i, i, coef); }
  LinearExpr& add_trace(MatrixVar v, int dim, double coef) {
    for (int i = 0; i < dim; ++i) add_diag(v, i, coef);
    return *this;
  }
  LinearExpr& add_constant(double c) {
    constant += c;
    return *this;
  }
};

enum class Relation { less_equal, greater_equal, equal };

struct LinearConstraint {
  std::string name;
  LinearExpr expr;
  Relation relation = Relation::less_equal;
  double rhs = 0.0;
};

/// constant + sum coef * L^H X L + sum s * D, all Hermitian of size dim.
struct MatrixExpr {
  struct Congruence {
    MatrixVar var;
    double coef = 1.0;
    std::shared_ptr<const CMatrix> map;  // var.dim x dim; null means identity
  };
  struct Scaled {
    ScalarVar var;
    CMatrix coef;
  };

  int dim = 0;
  CMatrix constant;
  std::vector<Congruence> congruences;
  std::vector<Scaled> scaled;

  explicit MatrixExpr(int n = 0) : dim(n), constant(CMatrix::Zero(n, n)) {}

  MatrixExpr& add(MatrixVar v, double coef, std::shared_ptr<const CMatrix> map = nullptr) {
    congruences.push_back({v, coef, std::move(map)});
    return *this;
  }
  MatrixExpr& add(ScalarVar v, CMatrix coef) {
    scaled.push_back({v, std::move(coef)});
    return *this;
  }
  MatrixExpr& add_constant(const CMatrix& c) {
    constant += c;
    return *this;
  }
};

struct LmiConstraint {
  std::string name;
  MatrixExpr expr;
};

class SdpProblem {
 public:
  MatrixVar add_matrix_var(std::string name, int dim, Field field = Field::complex) {
    if (dim < 1) throw StructuralError("matrix variable '" + name + "' must have dim >= 1");
    matrix_vars_.push_back({std::move(name), dim, field, false, {}});
    return {matrix_vars_.size() - 1};
  }

  /// Pins every off-diagonal entry of v to zero.
  void set_diagonal(MatrixVar v) { matrix_decl(v).diagonal = true; }

  /// Pins X[row, col] (and its mirror) to zero. Diagonal entries may only be
  /// pinned on diagonal variables.
  void fix_zero(MatrixVar v, int row, int col) {
    auto& d = matrix_decl(v);
    if (row < 0 || col < 0 || row >= d.dim || col >= d.dim) throw StructuralError("fix_zero: index out of range");
    if (row > col) std::swap(row, col);
    d.fixed_zero.insert({row, col});
  }

  ScalarVar add_scalar_var(std::string name, double lower_bound = 0.0, std::string group = {}) {
    if (group.empty()) group = name;
    scalar_vars_.push_back({std::move(name), lower_bound, std::move(group)});
    return {scalar_vars_.size() - 1};
  }

  void set_objective(LinearExpr e) { objective_ = std::move(e); }

  void add_linear(std::string name, LinearExpr e, Relation rel, double rhs) {
    linear_.push_back({std::move(name), std::move(e), rel, rhs});
  }

  void add_lmi(std::string name, MatrixExpr e) { lmis_.push_back({std::move(name), std::move(e)}); }

  const std::vector<MatrixVarDecl>& matrix_vars() const { return matrix_vars_; }
  const std::vector<ScalarVarDecl>& scalar_vars() const { return scalar_vars_; }
  const LinearExpr& objective() const { return objective_; }
  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const std::vector<LmiConstraint>& lmi_constraints() const { return lmis_; }
  const MatrixVarDecl& matrix_decl(MatrixVar v) const { return matrix_vars_.at(v.id); }
  const ScalarVarDecl& scalar_decl(ScalarVar v) const { return scalar_vars_.at(v.id); }

  /// Matrix variables plus distinct scalar groups.
  std::size_t variable_group_count() const { return matrix_vars_.size() + scalar_groups().size(); }

  /// One group per linear constraint, LMI, matrix-variable PSD cone, matrix
  /// sparsity pattern, and bounded scalar group.
  std::size_t constraint_group_count() const {
    std::size_t n = linear_.size() + lmis_.size() + matrix_vars_.size();
    for (const auto& d : matrix_vars_)
      if (d.has_pattern()) ++n;
    std::set<std::string> bounded;
    for (const auto& s : scalar_vars_)
      if (std::isfinite(s.lower_bound)) bounded.insert(s.group);
    return n + bounded.size();
  }

  /// Throws StructuralError on undeclared variables, bad indices or
  /// non-Hermitian / non-finite data.
  void validate() const {
    auto check_linear = [&](const LinearExpr& e, const std::string& where) {
      if (!std::isfinite(e.constant)) throw StructuralError(where + ": non-finite constant");
      for (const auto& [v, c] : e.scalar_terms) {
        if (v.id >= scalar_vars_.size()) throw StructuralError(where + ": undeclared scalar variable");
        if (!std::isfinite(c)) throw StructuralError(where + ": non-finite coefficient");
      }
      for (const auto& t : e.entry_terms) {
        if (t.var.id >= matrix_vars_.size()) throw StructuralError(where + ": undeclared matrix variable");
        const int n = matrix_vars_[t.var.id].dim;
        if (t.row < 0 || t.col < 0 || t.row >= n || t.col >= n) throw StructuralError(where + ": entry out of range");
        if (!std::isfinite(std::abs(t.coef))) throw StructuralError(where + ": non-finite coefficient");
      }
    };
    for (const auto& d : matrix_vars_)
      for (const auto& [r, c] : d.fixed_zero)
        if (r == c && !d.diagonal)
          throw StructuralError("'" + d.name + "': diagonal entries can only be pinned on diagonal variables");
    check_linear(objective_, "objective");
    for (const auto& l : linear_) {
      check_linear(l.expr, l.name);
      if (!std::isfinite(l.rhs)) throw StructuralError(l.name + ": non-finite bound");
    }
    for (const auto& lmi : lmis_) {
      const auto& e = lmi.expr;
      const int n = e.dim;
      auto hermitian = [&](const CMatrix& m, const char* what) {
        if (m.rows() != n || m.cols() != n) throw StructuralError(lmi.name + ": " + what + " has wrong size");
        if (!m.allFinite()) throw StructuralError(lmi.name + ": " + what + " not finite");
        if (hermitian_defect(m) > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
          throw StructuralError(lmi.name + ": " + what + " not Hermitian");
      };
      hermitian(e.constant, "constant");
      for (const auto& t : e.congruences) {
        if (t.var.id >= matrix_vars_.size()) throw StructuralError(lmi.name + ": undeclared matrix variable");
        const int nv = matrix_vars_[t.var.id].dim;
        if (t.map) {
          if (t.map->rows() != nv || t.map->cols() != n) throw StructuralError(lmi.name + ": congruence map has wrong shape");
          if (!t.map->allFinite()) throw StructuralError(lmi.name + ": congruence map not finite");
        } else if (nv != n) {
          throw StructuralError(lmi.name + ": identity congruence needs matching dimensions");
        }
        if (!std::isfinite(t.coef)) throw StructuralError(lmi.name + ": non-finite coefficient");
      }
      for (const auto& t : e.scaled) {
        if (t.var.id >= scalar_vars_.size()) throw StructuralError(lmi.name + ": undeclared scalar variable");
        hermitian(t.coef, "coefficient");
      }
    }
  }

 private:
  MatrixVarDecl& matrix_decl(MatrixVar v) {
    if (v.id >= matrix_vars_.size()) throw StructuralError("undeclared matrix variable");
    return matrix_vars_[v.id];
  }
  std::set<std::string> scalar_groups() const {
    std::set<std::string> g;
    for (const auto& s : scalar_vars_) g.insert(s.group);
    return g;
  }

  std::vector<MatrixVarDecl> matrix_vars_;
  std::vector<ScalarVarDecl> scalar_vars_;
  LinearExpr objective_;
  std::vector<LinearConstraint> linear_;
  std::vector<LmiConstraint> lmis_;
};

enum class Status { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical-failure";
    case Status::iteration_limit: return "iteration-limit";
  }
  return "unknown";
}

struct SdpSolution {
  Status status = Status::numerical_failure;
  std::vector<CMatrix> matrix_values;
  std::vector<double> scalar_values;
  double objective_value = 0.0;
  double dual_objective = 0.0;
  double max_constraint_violation = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int solver_iterations = 0;
  std::string message;

  const CMatrix& value(MatrixVar v) const { return matrix_values.at(v.id); }
  double value(ScalarVar v) const { return scalar_values.at(v.id); }
  bool optimal() const { return status == Status::optimal; }
};

/// Direct evaluation from raw variable values.
inline double evaluate(const LinearExpr& e, const SdpSolution& s) {
  double v = e.constant;
  for (const auto& [var, c] : e.scalar_terms) v += c * s.value(var);
  for (const auto& t : e.entry_terms) v += (t.coef * s.value(t.var)(t.row, t.col)).real();
  return v;
}

inline CMatrix evaluate(const MatrixExpr& e, const SdpSolution& s) {
  CMatrix m = e.constant;
  for (const auto& t : e.congruences) {
    const CMatrix& x = s.value(t.var);
    if (t.map)
      m += t.coef * (t.map->adjoint() * x * *t.map);
    else
      m += t.coef * x;
  }
  for (const auto& t : e.scaled) m += s.value(t.var) * t.coef;
  return m;
}

}  // namespace cran::sdp
