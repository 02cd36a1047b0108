#pragma once

// Internal LMI form of an SdpProblem:
//
//   minimize    c^T x + c0
//   subject to  S_k = C_k + A_k(x)  PSD     (Hermitian blocks)
//               s   = h + G x       >= 0    (nonnegative orthant)
//               A_eq x = b_eq
//
// x collects the real parameters of every matrix variable (diagonal, then
// real/imaginary parts of the upper triangle) and every scalar variable.
// Matrix variables keep their congruence structure c * L^H X L inside each
// block so the Schur complement can be formed without expanding every
// basis matrix.

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "cran/sdp/problem.hpp"

namespace cran::sdp::detail {

/// Basis E_k of n x n Hermitian matrices: k < n is e_k e_k^T; the remaining
/// indices alternate real / imaginary parts of the upper-triangular pairs.
class HermitianBasis {
 public:
  struct Entry {
    int row;
    int col;
    cplx val;
  };
  struct Element {
    std::array<Entry, 2> e;
    int count;
    int row;  // (row, col) of the upper entry
    int col;
    bool imag;
  };

  explicit HermitianBasis(int n) : n_(n) {
    elems_.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) elems_.push_back({{Entry{a, a, 1.0}, Entry{a, a, 0.0}}, 1, a, a, false});
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        elems_.push_back({{Entry{a, b, 1.0}, Entry{b, a, 1.0}}, 2, a, b, false});
        elems_.push_back({{Entry{a, b, cplx(0, 1)}, Entry{b, a, cplx(0, -1)}}, 2, a, b, true});
      }
  }

  int dim() const { return n_; }
  int size() const { return static_cast<int>(elems_.size()); }
  const Element& operator[](int k) const { return elems_[static_cast<std::size_t>(k)]; }

  /// out[k] = Re tr(E_k Y).
  void extract(const CMatrix& y, std::vector<double>& out) const {
    out.resize(elems_.size());
    for (std::size_t k = 0; k < elems_.size(); ++k) {
      const auto& el = elems_[k];
      cplx v = 0.0;
      for (int t = 0; t < el.count; ++t) v += el.e[static_cast<std::size_t>(t)].val * y(el.e[static_cast<std::size_t>(t)].col, el.e[static_cast<std::size_t>(t)].row);
      out[k] = v.real();
    }
  }

  static std::shared_ptr<const HermitianBasis> get(int n) {
    static std::map<int, std::weak_ptr<const HermitianBasis>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (auto p = slot.lock()) return p;
    auto p = std::make_shared<const HermitianBasis>(n);
    slot = p;
    return p;
  }

 private:
  int n_;
  std::vector<Element> elems_;
};

struct CompiledVar {
  int dim = 0;
  bool diagonal = false;
  std::shared_ptr<const HermitianBasis> basis;
  std::vector<int> param;  // basis index -> x index, -1 when pinned / absent
  int contiguous_base = -1;  // param[k] == base + k for all k, when that holds
};

struct CongTerm {
  int var = 0;
  double coef = 1.0;
  std::shared_ptr<const CMatrix> map;  // null = identity
};

struct ScalTerm {
  int param = 0;
  CMatrix coef;
};

struct PsdBlock {
  std::string name;
  int n = 0;
  CMatrix constant;
  std::vector<CongTerm> cong;
  std::vector<ScalTerm> scal;
};

using SparseRow = std::vector<std::pair<int, double>>;

struct Compiled {
  int num_params = 0;
  std::vector<CompiledVar> vars;     // one per matrix variable
  std::vector<int> scalar_param;     // scalar variable -> x index
  RVector c;
  double c0 = 0.0;
  std::vector<PsdBlock> blocks;
  std::vector<SparseRow> lp_rows;
  std::vector<double> lp_const;
  std::vector<std::string> lp_names;
  std::vector<SparseRow> eq_rows;
  std::vector<double> eq_rhs;

  int total_cone_dim() const {
    int n = static_cast<int>(lp_rows.size());
    for (const auto& b : blocks) n += b.n;
    return n;
  }
};

/// X = sum_k x[param[k]] E_k.
inline CMatrix assemble_var(const CompiledVar& v, const RVector& x) {
  CMatrix m = CMatrix::Zero(v.dim, v.dim);
  const auto& basis = *v.basis;
  for (int k = 0; k < basis.size(); ++k) {
    const int p = v.param[static_cast<std::size_t>(k)];
    if (p < 0) continue;
    const auto& el = basis[k];
    for (int t = 0; t < el.count; ++t) {
      const auto& e = el.e[static_cast<std::size_t>(t)];
      m(e.row, e.col) += e.val * x(p);
    }
  }
  return m;
}

inline void add_row_entry(SparseRow& row, int param, double coef) {
  if (param < 0 || coef == 0.0) return;
  for (auto& [p, c] : row)
    if (p == param) {
      c += coef;
      return;
    }
  row.emplace_back(param, coef);
}

inline SparseRow linear_row(const Compiled& cp, const LinearExpr& e) {
  SparseRow row;
  for (const auto& [v, c] : e.scalar_terms) add_row_entry(row, cp.scalar_param[v.id], c);
  for (const auto& t : e.entry_terms) {
    const auto& var = cp.vars[t.var.id];
    const int n = var.dim;
    int r = t.row, c = t.col;
    if (r == c) {
      add_row_entry(row, var.param[static_cast<std::size_t>(r)], t.coef.real());
      continue;
    }
    const bool lower = r > c;
    if (lower) std::swap(r, c);
    // index of pair (r, c) among upper-triangular pairs in row-major order
    const int pair = r * n - r * (r + 1) / 2 + (c - r - 1);
    const int re = var.param[static_cast<std::size_t>(n + 2 * pair)];
    const int im = var.param[static_cast<std::size_t>(n + 2 * pair + 1)];
    // X[r,c] = x_re + i x_im, X[c,r] = x_re - i x_im
    add_row_entry(row, re, t.coef.real());
    add_row_entry(row, im, lower ? t.coef.imag() : -t.coef.imag());
  }
  return row;
}

inline Compiled compile(const SdpProblem& prob) {
  prob.validate();
  Compiled cp;
  int next = 0;
  for (const auto& d : prob.matrix_vars()) {
    CompiledVar v;
    v.dim = d.dim;
    v.diagonal = d.diagonal;
    v.basis = HermitianBasis::get(d.dim);
    v.param.assign(static_cast<std::size_t>(v.basis->size()), -1);
    for (int k = 0; k < v.basis->size(); ++k) {
      const auto& el = (*v.basis)[k];
      if (d.is_fixed(el.row, el.col)) continue;
      if (el.imag && d.field == Field::real) continue;
      v.param[static_cast<std::size_t>(k)] = next++;
    }
    bool contiguous = true;
    for (int k = 0; k < v.basis->size(); ++k)
      contiguous = contiguous && v.param[static_cast<std::size_t>(k)] == v.param[0] + k;
    if (contiguous && v.param[0] >= 0) v.contiguous_base = v.param[0];
    cp.vars.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < prob.scalar_vars().size(); ++i) cp.scalar_param.push_back(next++);
  cp.num_params = next;

  cp.c = RVector::Zero(next);
  for (const auto& [p, coef] : linear_row(cp, prob.objective())) cp.c(p) += coef;
  cp.c0 = prob.objective().constant;

  // Cones of the matrix variables themselves.
  for (std::size_t i = 0; i < prob.matrix_vars().size(); ++i) {
    const auto& d = prob.matrix_vars()[i];
    const auto& v = cp.vars[i];
    if (v.diagonal) {
      for (int a = 0; a < d.dim; ++a) {
        const int p = v.param[static_cast<std::size_t>(a)];
        if (p < 0) continue;
        cp.lp_rows.push_back({{p, 1.0}});
        cp.lp_const.push_back(0.0);
        cp.lp_names.push_back(d.name + "[" + std::to_string(a) + "] >= 0");
      }
    } else {
      PsdBlock b;
      b.name = d.name + " psd";
      b.n = d.dim;
      b.constant = CMatrix::Zero(d.dim, d.dim);
      b.cong.push_back({static_cast<int>(i), 1.0, nullptr});
      cp.blocks.push_back(std::move(b));
    }
  }
  for (std::size_t i = 0; i < prob.scalar_vars().size(); ++i) {
    const auto& d = prob.scalar_vars()[i];
    if (!std::isfinite(d.lower_bound)) continue;
    cp.lp_rows.push_back({{cp.scalar_param[i], 1.0}});
    cp.lp_const.push_back(-d.lower_bound);
    cp.lp_names.push_back(d.name + " lower bound");
  }

  for (const auto& l : prob.linear_constraints()) {
    SparseRow row = linear_row(cp, l.expr);
    const double k = l.expr.constant - l.rhs;  // expr - rhs = row.x + k
    switch (l.relation) {
      case Relation::greater_equal:
        cp.lp_rows.push_back(row);
        cp.lp_const.push_back(k);
        cp.lp_names.push_back(l.name);
        break;
      case Relation::less_equal:
        for (auto& e : row) e.second = -e.second;
        cp.lp_rows.push_back(row);
        cp.lp_const.push_back(-k);
        cp.lp_names.push_back(l.name);
        break;
      case Relation::equal:
        cp.eq_rows.push_back(row);
        cp.eq_rhs.push_back(-k);
        break;
    }
  }

  for (const auto& lmi : prob.lmi_constraints()) {
    const auto& e = lmi.expr;
    PsdBlock b;
    b.name = lmi.name;
    b.n = e.dim;
    b.constant = hermitian_part(e.constant);
    std::map<int, CMatrix> scal;
    auto add_scal = [&](int p, const CMatrix& m) {
      if (p < 0) return;
      auto it = scal.find(p);
      if (it == scal.end())
        scal.emplace(p, m);
      else
        it->second += m;
    };
    for (const auto& t : e.congruences) {
      const auto& v = cp.vars[t.var.id];
      if (!v.diagonal) {
        b.cong.push_back({static_cast<int>(t.var.id), t.coef, t.map});
        continue;
      }
      // Diagonal variables enter as independent scalars.
      for (int a = 0; a < v.dim; ++a) {
        const int p = v.param[static_cast<std::size_t>(a)];
        if (p < 0) continue;
        CMatrix row = t.map ? CMatrix(t.map->row(a)) : CMatrix(CMatrix::Identity(v.dim, v.dim).row(a));
        add_scal(p, t.coef * (row.adjoint() * row));
      }
    }
    for (const auto& t : e.scaled) add_scal(cp.scalar_param[t.var.id], hermitian_part(t.coef));
    for (auto& [p, m] : scal) b.scal.push_back({p, std::move(m)});
    cp.blocks.push_back(std::move(b));
  }
  return cp;
}

// ---------------------------------------------------------------------------
// Block operators

/// A_k(x) (without the constant).
inline CMatrix apply_block(const Compiled& cp, const PsdBlock& b, const RVector& x) {
  CMatrix m = CMatrix::Zero(b.n, b.n);
  for (const auto& t : b.cong) {
    const CMatrix xv = assemble_var(cp.vars[static_cast<std::size_t>(t.var)], x);
    if (t.map)
      m.noalias() += t.coef * (t.map->adjoint() * xv * *t.map);
    else
      m += t.coef * xv;
  }
  for (const auto& t : b.scal) m += x(t.param) * t.coef;
  return m;
}

/// g_i += Re tr(A_{k,i} Y).
inline void adjoint_block(const Compiled& cp, const PsdBlock& b, const CMatrix& y, RVector& g) {
  std::vector<double> buf;
  for (const auto& t : b.cong) {
    const auto& v = cp.vars[static_cast<std::size_t>(t.var)];
    if (t.map)
      v.basis->extract(*t.map * y * t.map->adjoint(), buf);
    else
      v.basis->extract(y, buf);
    for (std::size_t k = 0; k < buf.size(); ++k)
      if (v.param[k] >= 0) g(v.param[k]) += t.coef * buf[k];
  }
  for (const auto& t : b.scal) g(t.param) += (t.coef.cwiseProduct(y.transpose())).sum().real();
}

inline RVector apply_lp(const Compiled& cp, const RVector& x) {
  RVector s(static_cast<Eigen::Index>(cp.lp_rows.size()));
  for (std::size_t r = 0; r < cp.lp_rows.size(); ++r) {
    double v = 0.0;
    for (const auto& [p, c] : cp.lp_rows[r]) v += c * x(p);
    s(static_cast<Eigen::Index>(r)) = v;
  }
  return s;
}

inline void adjoint_lp(const Compiled& cp, const RVector& z, RVector& g) {
  for (std::size_t r = 0; r < cp.lp_rows.size(); ++r)
    for (const auto& [p, c] : cp.lp_rows[r]) g(p) += c * z(static_cast<Eigen::Index>(r));
}

/// H[p][r] = Re tr(E_p P E_r R) over full bases. With
/// F[(i,j),(k,l)] = P(j,k) R(l,i) this is Re(Phi_1^T F Phi_2), where column p
/// of Phi holds the (at most two) entries of E_p.
inline RMatrix basis_pair_matrix(const HermitianBasis& b1, const HermitianBasis& b2, const CMatrix& P, const CMatrix& R) {
  const int n1 = b1.dim(), n2 = b2.dim();
  CMatrix F(n1 * n1, n2 * n2);
  for (int k = 0; k < n2; ++k)
    for (int l = 0; l < n2; ++l)
      for (int i = 0; i < n1; ++i) F.col(k * n2 + l).segment(i * n1, n1) = R(l, i) * P.col(k);
  CMatrix G(n1 * n1, b2.size());
  for (int r = 0; r < b2.size(); ++r) {
    const auto& er = b2[r];
    const auto& c0 = er.e[0];
    G.col(r) = c0.val * F.col(c0.row * n2 + c0.col);
    if (er.count == 2) G.col(r) += er.e[1].val * F.col(er.e[1].row * n2 + er.e[1].col);
  }
  RMatrix h(b1.size(), b2.size());
  for (int p = 0; p < b1.size(); ++p) {
    const auto& ep = b1[p];
    const auto& a0 = ep.e[0];
    if (ep.count == 1) {
      h.row(p) = (a0.val * G.row(a0.col + n1 * a0.row)).real();
    } else {
      const auto& a1 = ep.e[1];
      h.row(p) = (a0.val * G.row(a0.col + n1 * a0.row) + a1.val * G.row(a1.col + n1 * a1.row)).real();
    }
  }
  return h;
}

/// Collects the dense variable-pair blocks of the Schur matrix so each block
/// of M is written once per iteration, however many cones contribute to it.
class SchurAccumulator {
 public:
  void add(int var1, int var2, double w, std::shared_ptr<const RMatrix> h) {
    terms_[{var1, var2}].push_back({w, std::move(h)});
  }

  void flush(const Compiled& cp, RMatrix& m) {
    RMatrix sum;
    for (auto& [key, list] : terms_) {
      const auto& v1 = cp.vars[static_cast<std::size_t>(key.first)];
      const auto& v2 = cp.vars[static_cast<std::size_t>(key.second)];
      sum = list.front().first * *list.front().second;
      for (std::size_t t = 1; t < list.size(); ++t) sum.noalias() += list[t].first * *list[t].second;
      m.block(v1.contiguous_base, v2.contiguous_base, sum.rows(), sum.cols()) += sum;
      if (key.first != key.second) m.block(v2.contiguous_base, v1.contiguous_base, sum.cols(), sum.rows()) += sum.transpose();
    }
    terms_.clear();
  }

 private:
  std::map<std::pair<int, int>, std::vector<std::pair<double, std::shared_ptr<const RMatrix>>>> terms_;
};

/// M_ij += Re tr(A_{k,i} Z A_{k,j} S^{-1}). Pairs of contiguous variables go
/// through the accumulator; everything else is scattered directly.
inline void schur_block(const Compiled& cp, const PsdBlock& b, const CMatrix& z, const CMatrix& sinv, RMatrix& m,
                        SchurAccumulator& acc) {
  using Key = std::pair<const void*, const void*>;
  std::map<Key, std::shared_ptr<const RMatrix>> pair_cache;
  auto mapped = [](const std::shared_ptr<const CMatrix>& L, const CMatrix& a, const std::shared_ptr<const CMatrix>& R) {
    CMatrix out = a;
    if (L) out = *L * out;
    if (R) out = out * R->adjoint();
    return out;
  };

  const std::size_t nc = b.cong.size();
  for (std::size_t i = 0; i < nc; ++i) {
    const auto& t1 = b.cong[i];
    const auto& v1 = cp.vars[static_cast<std::size_t>(t1.var)];
    for (std::size_t j = i; j < nc; ++j) {
      const auto& t2 = b.cong[j];
      const auto& v2 = cp.vars[static_cast<std::size_t>(t2.var)];
      const Key key{t1.map.get(), t2.map.get()};
      auto it = pair_cache.find(key);
      if (it == pair_cache.end()) {
        const CMatrix P = mapped(t1.map, z, t2.map);     // L1 Z L2^H
        const CMatrix R = mapped(t2.map, sinv, t1.map);  // L2 S^-1 L1^H
        it = pair_cache.emplace(key, std::make_shared<const RMatrix>(basis_pair_matrix(*v1.basis, *v2.basis, P, R))).first;
      }
      const RMatrix& h = *it->second;
      const double w = t1.coef * t2.coef;
      if (v1.contiguous_base >= 0 && v2.contiguous_base >= 0) {
        if (t1.var <= t2.var) {
          acc.add(t1.var, t2.var, w, it->second);
        } else {
          acc.add(t2.var, t1.var, w, std::make_shared<const RMatrix>(h.transpose()));
        }
        if (i != j && t1.var == t2.var) acc.add(t1.var, t1.var, w, std::make_shared<const RMatrix>(h.transpose()));
        continue;
      }
      for (int p = 0; p < h.rows(); ++p) {
        const int pi = v1.param[static_cast<std::size_t>(p)];
        if (pi < 0) continue;
        for (int r = 0; r < h.cols(); ++r) {
          const int rj = v2.param[static_cast<std::size_t>(r)];
          if (rj < 0) continue;
          const double val = w * h(p, r);
          m(pi, rj) += val;
          if (i != j) m(rj, pi) += val;
        }
      }
    }
  }

  // congruence x scalar
  std::vector<double> buf;
  for (const auto& s : b.scal) {
    const CMatrix zd_s = z * s.coef * sinv;
    std::map<const void*, std::vector<double>> per_map;
    for (const auto& t : b.cong) {
      const auto& v = cp.vars[static_cast<std::size_t>(t.var)];
      auto it = per_map.find(t.map.get());
      if (it == per_map.end()) {
        v.basis->extract(mapped(t.map, zd_s, t.map), buf);
        it = per_map.emplace(t.map.get(), buf).first;
      }
      const auto& vals = it->second;
      for (std::size_t k = 0; k < vals.size(); ++k) {
        const int pk = v.param[k];
        if (pk < 0) continue;
        const double val = t.coef * vals[k];
        m(pk, s.param) += val;
        m(s.param, pk) += val;
      }
    }
  }

  // scalar x scalar
  std::vector<CMatrix> dz, ds;
  dz.reserve(b.scal.size());
  ds.reserve(b.scal.size());
  for (const auto& s : b.scal) {
    dz.push_back(s.coef * z);
    ds.push_back((s.coef * sinv).transpose());
  }
  for (std::size_t i = 0; i < b.scal.size(); ++i)
    for (std::size_t j = 0; j < b.scal.size(); ++j)
      m(b.scal[i].param, b.scal[j].param) += dz[i].cwiseProduct(ds[j]).sum().real();
}

inline void schur_lp(const Compiled& cp, const RVector& weight, RMatrix& m) {
  for (std::size_t r = 0; r < cp.lp_rows.size(); ++r) {
    const double w = weight(static_cast<Eigen::Index>(r));
    for (const auto& [p, a] : cp.lp_rows[r])
      for (const auto& [q, c] : cp.lp_rows[r]) m(p, q) += w * a * c;
  }
}

/// Frobenius norm of A_{k,i} for every parameter touching the block (max over terms).
inline std::vector<std::pair<int, double>> block_param_norms(const Compiled& cp, const PsdBlock& b) {
  std::map<int, double> norms;
  for (const auto& t : b.cong) {
    const auto& v = cp.vars[static_cast<std::size_t>(t.var)];
    for (int k = 0; k < v.basis->size(); ++k) {
      const int p = v.param[static_cast<std::size_t>(k)];
      if (p < 0) continue;
      CMatrix e = CMatrix::Zero(v.dim, v.dim);
      const auto& el = (*v.basis)[k];
      for (int s = 0; s < el.count; ++s) e(el.e[static_cast<std::size_t>(s)].row, el.e[static_cast<std::size_t>(s)].col) = el.e[static_cast<std::size_t>(s)].val;
      const double nrm = std::abs(t.coef) * (t.map ? (t.map->adjoint() * e * *t.map).norm() : e.norm());
      norms[p] = std::max(norms[p], nrm);
    }
  }
  for (const auto& s : b.scal) norms[s.param] = std::max(norms[s.param], s.coef.norm());
  return {norms.begin(), norms.end()};
}

}  // namespace cran::sdp::detail
