#pragma once

#include <vector>

#include "cran/scenario/scenario.hpp"

namespace cran::testing {

/// Hand-built scenario with physical channels equal to the given vectors,
/// identical error shapes E = I / a, unit noise and the given SINR target.
/// Power budgets are generous unless overridden afterwards.
inline scenario::Scenario manual_scenario(const std::vector<CVector>& h, double a, double target_linear,
                                          double max_power = 1e3, int cache_size = 0) {
  const int U = static_cast<int>(h.size());
  const int B = static_cast<int>(h.front().size());
  scenario::ScenarioSpec spec;
  spec.num_bs = B;
  spec.num_users = U;
  spec.noise_normalized = false;
  spec.cache_size = cache_size;
  spec.num_files = 4;
  spec.request_mode = scenario::RequestMode::common;
  scenario::Scenario s = scenario::make_scenario(spec, 1);
  s.params.max_tx_power.assign(static_cast<std::size_t>(B), max_power);
  s.params.noise_power.assign(static_cast<std::size_t>(U), 1.0);
  s.params.target_sinr.assign(static_cast<std::size_t>(U), target_linear);
  for (int u = 0; u < U; ++u) {
    s.channels[static_cast<std::size_t>(u)].h_tilde = h[static_cast<std::size_t>(u)];
    s.channels[static_cast<std::size_t>(u)].error_shape = CMatrix::Identity(B, B) / a;
  }
  s.validate();
  return s;
}

inline CVector cvec(std::initializer_list<cplx> v) {
  CVector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) out(i++) = x;
  return out;
}

}  // namespace cran::testing
