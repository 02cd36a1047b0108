#pragma once

#include <vector>

#include "cran/core/types.hpp"

namespace cran::recovery {

enum class RecoveryMethod { eigen, randomization };

inline const char* to_string(RecoveryMethod m) { return m == RecoveryMethod::eigen ? "eigen" : "randomization"; }

/// Rank-one beamformers w_u (entry b is BS b's weight for user u) together
/// with the per-BS quantization noise levels.
struct BeamSolution {
  std::vector<CVector> w;
  std::vector<double> q;
  std::vector<double> rank_one_ratio;  // lambda_2 / lambda_1 of the relaxed W_u
  RecoveryMethod recovered_via = RecoveryMethod::eigen;
  bool feasible = false;

  int num_users() const { return static_cast<int>(w.size()); }
  int num_bs() const { return static_cast<int>(q.size()); }
  double link_power(int b, int u) const { return std::norm(w[static_cast<std::size_t>(u)](b)); }
};

}  // namespace cran::recovery
