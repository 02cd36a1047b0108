#pragma once

// Problem instances for the cache-enabled CRAN downlink: geometry, estimated
// channels with ellipsoidal CSI error sets, content requests, cache placement
// and per-BS / per-user system parameters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "cran/core/random.hpp"
#include "cran/core/types.hpp"
#include "cran/core/units.hpp"

namespace cran::scenario {

/// Distances below this (km) are clamped before evaluating the path loss.
inline constexpr double kMinDistanceKm = 0.01;

struct SystemParams {
  int num_bs = 0;
  int num_users = 0;
  std::vector<double> max_tx_power;          // P_b [W]
  std::vector<double> backhaul_capacity;     // C_b [bits per channel use]
  std::vector<double> amplifier_efficiency;  // nu_b
  std::vector<double> relative_power;        // P_rb = P_{b,a} - P_{b,s} [W]
  std::vector<double> sleep_power;           // P_{b,s} [W]
  std::vector<double> noise_power;           // sigma_u^2 in channel units
  std::vector<double> target_sinr;           // delta_u, linear
  /// Noise power [W] the channels were divided by; empty when channels are in physical units.
  std::vector<double> noise_reference;
  double csi_accuracy = 0.01;      // a, E_u = I / a
  double smoothing = 1e-6;         // epsilon
  double active_threshold = 1e-6;  // tau [W]
  double region_size = 1000.0;     // [m]

  void validate() const {
    require(num_bs >= 1, "num_bs must be >= 1");
    require(num_users >= 1, "num_users must be >= 1");
    const auto B = static_cast<std::size_t>(num_bs);
    const auto U = static_cast<std::size_t>(num_users);
    auto positive = [](const std::vector<double>& v, std::size_t n, const char* name) {
      require(v.size() == n, std::string(name) + ": wrong length");
      for (double x : v) require(std::isfinite(x) && x > 0.0, std::string(name) + " must be > 0");
    };
    positive(max_tx_power, B, "max_tx_power");
    positive(backhaul_capacity, B, "backhaul_capacity");
    positive(amplifier_efficiency, B, "amplifier_efficiency");
    positive(relative_power, B, "relative_power");
    positive(sleep_power, B, "sleep_power");
    positive(noise_power, U, "noise_power");
    positive(target_sinr, U, "target_sinr");
    if (!noise_reference.empty()) positive(noise_reference, U, "noise_reference");
    require(csi_accuracy > 0.0 && std::isfinite(csi_accuracy), "csi_accuracy must be > 0");
    require(smoothing > 0.0, "smoothing must be > 0");
    require(active_threshold > 0.0, "active_threshold must be > 0");
    require(region_size > 0.0, "region_size must be > 0");
  }
};

/// Scalar settings shared by every BS / user, in user-facing units.
struct HomogeneousParams {
  double max_tx_power_w = 1.0;
  double backhaul_capacity = 10.0;
  double amplifier_efficiency = 2.5;
  double relative_power_w = 38.0;
  double sleep_power_w = 1.0;
  double noise_power_dbm = -98.0;
  double target_sinr_db = 10.0;
  double csi_accuracy = 0.01;
  double smoothing = 1e-6;
  double active_threshold_w = 1e-6;
  double region_size_m = 1000.0;
};

inline SystemParams make_params(int num_bs, int num_users, const HomogeneousParams& h) {
  require(num_bs >= 1 && num_users >= 1, "num_bs and num_users must be >= 1");
  SystemParams p;
  p.num_bs = num_bs;
  p.num_users = num_users;
  const auto B = static_cast<std::size_t>(num_bs);
  const auto U = static_cast<std::size_t>(num_users);
  p.max_tx_power.assign(B, h.max_tx_power_w);
  p.backhaul_capacity.assign(B, h.backhaul_capacity);
  p.amplifier_efficiency.assign(B, h.amplifier_efficiency);
  p.relative_power.assign(B, h.relative_power_w);
  p.sleep_power.assign(B, h.sleep_power_w);
  p.noise_power.assign(U, units::dbm_to_watts(h.noise_power_dbm));
  p.target_sinr.assign(U, units::db_to_linear(h.target_sinr_db));
  p.csi_accuracy = h.csi_accuracy;
  p.smoothing = h.smoothing;
  p.active_threshold = h.active_threshold_w;
  p.region_size = h.region_size_m;
  p.validate();
  return p;
}

using Point = std::array<double, 2>;

struct Topology {
  std::vector<Point> bs_positions;
  std::vector<Point> user_positions;
  std::uint64_t seed = 0;
};

inline double distance_km(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]) / 1000.0;
}

struct ChannelEstimate {
  CVector h_tilde;       // estimated channel from all BSs
  CMatrix error_shape;   // E_u, error set e^H E_u e <= 1
};

struct ContentModel {
  int num_files = 0;
  std::vector<double> popularity;
  std::vector<int> requests;                 // f_u, 0-based file index
  std::vector<std::vector<int>> cache_matrix;  // p_bf in {0,1}, B x F
  std::vector<int> cache_size;               // F_b
  std::vector<int> alpha;                    // alpha_b

  /// p_{b, f_u}: whether the file requested by user u sits in BS b's cache.
  bool cached(int b, int u) const {
    return cache_matrix[static_cast<std::size_t>(b)][static_cast<std::size_t>(requests[static_cast<std::size_t>(u)])] != 0;
  }
};

struct Scenario {
  SystemParams params;
  Topology topology;
  std::vector<ChannelEstimate> channels;
  ContentModel content;
  std::uint64_t seed = 0;

  int num_bs() const { return params.num_bs; }
  int num_users() const { return params.num_users; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Geometry and propagation

inline Topology generate_topology(int num_bs, int num_users, double region_size, std::uint64_t seed) {
  Rng rng(split_seed(seed, 0));
  std::uniform_real_distribution<double> coord(0.0, region_size);
  Topology t;
  t.seed = seed;
  t.bs_positions.reserve(static_cast<std::size_t>(num_bs));
  t.user_positions.reserve(static_cast<std::size_t>(num_users));
  for (int b = 0; b < num_bs; ++b) {
    const double x = coord(rng);
    const double y = coord(rng);
    t.bs_positions.push_back({x, y});
  }
  for (int u = 0; u < num_users; ++u) {
    const double x = coord(rng);
    const double y = coord(rng);
    t.user_positions.push_back({x, y});
  }
  return t;
}

/// 128.1 + 37.6 log10(d) with d in km, clamped below at kMinDistanceKm.
inline double path_loss_db(double distance_km) {
  if (!(distance_km >= 0.0) || !std::isfinite(distance_km)) throw InvalidInput("path_loss_db: distance must be >= 0");
  const double d = std::max(distance_km, kMinDistanceKm);
  return 128.1 + 37.6 * std::log10(d);
}

/// Rayleigh-faded, path-loss-scaled channel estimates in physical amplitude units;
/// every user gets E_u = I / a.
inline std::vector<ChannelEstimate> generate_channel_estimates(const Topology& topology, const SystemParams& params,
                                                               std::uint64_t seed) {
  const auto B = static_cast<Eigen::Index>(topology.bs_positions.size());
  Rng rng(split_seed(seed, 1));
  std::vector<ChannelEstimate> out;
  out.reserve(topology.user_positions.size());
  for (const auto& up : topology.user_positions) {
    ChannelEstimate ce;
    ce.h_tilde.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double loss = path_loss_db(distance_km(topology.bs_positions[static_cast<std::size_t>(b)], up));
      ce.h_tilde(b) = complex_gaussian(rng) * std::pow(10.0, -loss / 20.0);
    }
    ce.error_shape = CMatrix::Identity(B, B) / params.csi_accuracy;
    out.push_back(std::move(ce));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Content

enum class RequestMode { zipf, common, half_common };

struct RequestDraw {
  std::vector<int> requests;
  std::vector<double> popularity;
};

inline std::vector<double> zipf_popularity(int num_files, double skew) {
  require(num_files >= 1, "num_files must be >= 1");
  require(skew >= 0.0, "zipf skew must be >= 0");
  std::vector<double> p(static_cast<std::size_t>(num_files));
  for (int f = 0; f < num_files; ++f) p[static_cast<std::size_t>(f)] = std::pow(static_cast<double>(f + 1), -skew);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  return p;
}

/// Requests drawn i.i.d. from Zipf popularity. In half_common mode the first
/// floor(U/2) users ask for the most popular file and the rest draw from Zipf.
inline RequestDraw sample_requests(int num_files, double skew, int num_users, std::uint64_t seed,
                                   RequestMode mode = RequestMode::zipf) {
  RequestDraw d;
  d.popularity = zipf_popularity(num_files, skew);
  Rng rng(split_seed(seed, 2));
  std::discrete_distribution<int> pick(d.popularity.begin(), d.popularity.end());
  d.requests.resize(static_cast<std::size_t>(num_users));
  const int common_users = mode == RequestMode::common ? num_users : mode == RequestMode::half_common ? num_users / 2 : 0;
  for (int u = 0; u < num_users; ++u) d.requests[static_cast<std::size_t>(u)] = u < common_users ? 0 : pick(rng);
  return d;
}

/// Most-popular-first placement (ties to the lower file index).
inline std::vector<std::vector<int>> build_cache_placement(const std::vector<double>& popularity,
                                                           const std::vector<int>& cache_size) {
  const int F = static_cast<int>(popularity.size());
  std::vector<int> order(static_cast<std::size_t>(F));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return popularity[static_cast<std::size_t>(a)] > popularity[static_cast<std::size_t>(b)];
  });
  std::vector<std::vector<int>> cache(cache_size.size(), std::vector<int>(static_cast<std::size_t>(F), 0));
  for (std::size_t b = 0; b < cache_size.size(); ++b) {
    const int fb = cache_size[b];
    if (fb < 0 || fb > F) throw InvalidInput("build_cache_placement: cache size must lie in [0, F]");
    for (int k = 0; k < fb; ++k) cache[b][static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  }
  return cache;
}

/// alpha_b = 0 iff every user's requested file is cached at b.
inline std::vector<int> compute_alpha(const std::vector<std::vector<int>>& cache, const std::vector<int>& requests) {
  std::vector<int> alpha(cache.size(), 0);
  for (std::size_t b = 0; b < cache.size(); ++b)
    for (int f : requests)
      if (cache[b].at(static_cast<std::size_t>(f)) == 0) {
        alpha[b] = 1;
        break;
      }
  return alpha;
}

// ---------------------------------------------------------------------------
// CSI errors

/// Inverse square root of a Hermitian positive-definite matrix.
inline CMatrix inverse_sqrt(const CMatrix& e) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(e));
  if (es.eigenvalues()(0) <= 0.0) throw InvalidInput("error shape must be positive definite");
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

/// Uniform draw from the interior of {e : e^H E e < 1}.
inline CVector sample_csi_error(const CMatrix& error_shape, Rng& rng) {
  const CMatrix root = inverse_sqrt(error_shape);
  for (;;) {
    CVector e = root * uniform_in_complex_ball(rng, error_shape.rows());
    if ((e.adjoint() * error_shape * e)(0).real() < 1.0) return e;
  }
}

inline CVector sample_csi_error(const CMatrix& error_shape, std::uint64_t seed) {
  Rng rng(split_seed(seed, 3));
  return sample_csi_error(error_shape, rng);
}

// ---------------------------------------------------------------------------
// Assembly

inline void Scenario::validate() const {
  params.validate();
  const auto B = static_cast<std::size_t>(params.num_bs);
  const auto U = static_cast<std::size_t>(params.num_users);
  require(topology.bs_positions.size() == B && topology.user_positions.size() == U, "topology size mismatch");
  for (const auto* set : {&topology.bs_positions, &topology.user_positions})
    for (const auto& p : *set)
      require(p[0] >= 0.0 && p[0] <= params.region_size && p[1] >= 0.0 && p[1] <= params.region_size,
              "position outside region");
  require(channels.size() == U, "channel count mismatch");
  for (const auto& c : channels) {
    require(c.h_tilde.size() == static_cast<Eigen::Index>(B), "channel length mismatch");
    require(c.h_tilde.allFinite(), "channel estimate not finite");
    require(c.error_shape.rows() == static_cast<Eigen::Index>(B) && c.error_shape.cols() == static_cast<Eigen::Index>(B),
            "error shape size mismatch");
    require(hermitian_defect(c.error_shape) <= 1e-10 * (1.0 + c.error_shape.cwiseAbs().maxCoeff()),
            "error shape not Hermitian");
    require(min_eigenvalue(c.error_shape) > 0.0, "error shape not positive definite");
  }
  const auto F = static_cast<std::size_t>(content.num_files);
  require(F >= 1 && content.popularity.size() == F, "popularity length mismatch");
  require(std::abs(std::accumulate(content.popularity.begin(), content.popularity.end(), 0.0) - 1.0) <= 1e-12,
          "popularity must sum to 1");
  require(content.requests.size() == U, "request count mismatch");
  for (int f : content.requests) require(f >= 0 && static_cast<std::size_t>(f) < F, "request index out of range");
  require(content.cache_matrix.size() == B && content.cache_size.size() == B && content.alpha.size() == B,
          "cache dimension mismatch");
  for (std::size_t b = 0; b < B; ++b) {
    require(content.cache_matrix[b].size() == F, "cache row length mismatch");
    int stored = 0;
    for (int p : content.cache_matrix[b]) {
      require(p == 0 || p == 1, "cache entries must be binary");
      stored += p;
    }
    require(stored <= content.cache_size[b], "cache over capacity");
  }
  require(compute_alpha(content.cache_matrix, content.requests) == content.alpha, "alpha inconsistent with cache");
}

/// Divides every h_u by sigma_u and sets sigma_u^2 = 1. SINR values are unchanged;
/// the error ellipsoid E_u is then read in these noise-normalized channel units.
inline void normalize_to_noise(Scenario& s) {
  if (!s.params.noise_reference.empty()) return;
  s.params.noise_reference = s.params.noise_power;
  for (std::size_t u = 0; u < s.channels.size(); ++u) {
    s.channels[u].h_tilde /= std::sqrt(s.params.noise_power[u]);
    s.params.noise_power[u] = 1.0;
  }
}

struct ScenarioSpec {
  int num_bs = 14;
  int num_users = 6;
  HomogeneousParams params;
  int num_files = 10;
  double zipf_skew = 1.0;
  RequestMode request_mode = RequestMode::zipf;
  int cache_size = 0;
  bool noise_normalized = true;
};

inline Scenario make_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  Scenario s;
  s.seed = seed;
  s.params = make_params(spec.num_bs, spec.num_users, spec.params);
  s.topology = generate_topology(spec.num_bs, spec.num_users, s.params.region_size, seed);
  s.channels = generate_channel_estimates(s.topology, s.params, seed);
  auto draw = sample_requests(spec.num_files, spec.zipf_skew, spec.num_users, seed, spec.request_mode);
  s.content.num_files = spec.num_files;
  s.content.popularity = std::move(draw.popularity);
  s.content.requests = std::move(draw.requests);
  s.content.cache_size.assign(static_cast<std::size_t>(spec.num_bs), spec.cache_size);
  s.content.cache_matrix = build_cache_placement(s.content.popularity, s.content.cache_size);
  s.content.alpha = compute_alpha(s.content.cache_matrix, s.content.requests);
  if (spec.noise_normalized) normalize_to_noise(s);
  s.validate();
  return s;
}

}  // namespace cran::scenario
