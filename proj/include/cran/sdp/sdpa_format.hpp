#pragma once

// Writes an SdpProblem in the sparse SDPA format (.dat-s) for cross-checking
// with external solvers. Complex blocks are written through the real
// embedding phi, linear rows as one diagonal block, and every equality as a
// pair of opposite inequalities. See docs/formats.md.

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "cran/sdp/compiled.hpp"
#include "cran/sdp/embedding.hpp"

namespace cran::sdp {

inline void write_sdpa(const SdpProblem& problem, std::ostream& out) {
  const detail::Compiled cp = detail::compile(problem);
  const int m = cp.num_params;
  const int nb = static_cast<int>(cp.blocks.size());
  const int nlp = static_cast<int>(cp.lp_rows.size() + 2 * cp.eq_rows.size());

  // (matno, block, i, j) -> value, 1-based, upper triangle only.
  std::map<std::tuple<int, int, int, int>, double> entries;
  auto put = [&](int mat, int blk, const CMatrix& coef, double sign) {
    const RMatrix r = real_embedding(coef).real();
    for (Eigen::Index i = 0; i < r.rows(); ++i)
      for (Eigen::Index j = i; j < r.cols(); ++j)
        if (r(i, j) != 0.0) entries[{mat, blk, static_cast<int>(i) + 1, static_cast<int>(j) + 1}] += sign * r(i, j);
  };

  for (int k = 0; k < nb; ++k) {
    const auto& b = cp.blocks[static_cast<std::size_t>(k)];
    put(0, k + 1, b.constant, -1.0);
    for (const auto& t : b.cong) {
      const auto& v = cp.vars[static_cast<std::size_t>(t.var)];
      for (int e = 0; e < v.basis->size(); ++e) {
        const int p = v.param[static_cast<std::size_t>(e)];
        if (p < 0) continue;
        CMatrix basis = CMatrix::Zero(v.dim, v.dim);
        const auto& el = (*v.basis)[e];
        for (int s = 0; s < el.count; ++s) basis(el.e[static_cast<std::size_t>(s)].row, el.e[static_cast<std::size_t>(s)].col) += el.e[static_cast<std::size_t>(s)].val;
        put(p + 1, k + 1, t.map ? CMatrix(t.coef * (t.map->adjoint() * basis * *t.map)) : CMatrix(t.coef * basis), 1.0);
      }
    }
    for (const auto& t : b.scal) put(t.param + 1, k + 1, t.coef, 1.0);
  }
  const int lp_block = nb + 1;
  int row = 1;
  auto put_lp = [&](int mat, double v) {
    if (v != 0.0) entries[{mat, lp_block, row, row}] += v;
  };
  for (std::size_t r = 0; r < cp.lp_rows.size(); ++r, ++row) {
    put_lp(0, -cp.lp_const[r]);
    for (const auto& [p, c] : cp.lp_rows[r]) put_lp(p + 1, c);
  }
  for (std::size_t r = 0; r < cp.eq_rows.size(); ++r) {
    for (double sign : {1.0, -1.0}) {
      put_lp(0, sign * cp.eq_rhs[r]);
      for (const auto& [p, c] : cp.eq_rows[r]) put_lp(p + 1, sign * c);
      ++row;
    }
  }

  char buf[128];
  out << "\"cran robust beamforming SDP; objective constant ";
  std::snprintf(buf, sizeof buf, "%.17g", cp.c0);
  out << buf << "\n";
  out << m << "\n" << nb + (nlp > 0 ? 1 : 0) << "\n";
  std::vector<int> sizes;
  for (const auto& b : cp.blocks) sizes.push_back(2 * b.n);
  if (nlp > 0) sizes.push_back(-nlp);
  for (std::size_t i = 0; i < sizes.size(); ++i) out << sizes[i] << (i + 1 < sizes.size() ? " " : "\n");
  if (sizes.empty()) out << "\n";
  for (int p = 0; p < m; ++p) {
    std::snprintf(buf, sizeof buf, "%.17g", cp.c(p));
    out << buf << (p + 1 < m ? " " : "\n");
  }
  if (m == 0) out << "\n";
  for (const auto& [key, v] : entries) {
    if (v == 0.0) continue;
    const auto& [mat, blk, i, j] = key;
    std::snprintf(buf, sizeof buf, "%d %d %d %d %.17g\n", mat, blk, i, j, v);
    out << buf;
  }
}

}  // namespace cran::sdp
