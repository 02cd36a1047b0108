#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cran/core/types.hpp"

namespace cran {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from (seed, stream).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(split_seed(seed, stream)); }

/// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
inline cplx complex_gaussian(Rng& rng, double variance = 1.0) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CVector complex_gaussian_vector(Rng& rng, Eigen::Index n) {
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_gaussian(rng);
  return v;
}

/// Uniform draw from the open unit ball of C^n (real dimension 2n).
inline CVector uniform_in_complex_ball(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CVector z(n);
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      z(i) = {re, im};
    }
    norm2 = z.squaredNorm();
  } while (norm2 == 0.0);
  const double radius = std::pow(u(rng), 1.0 / (2.0 * static_cast<double>(n)));
  return z * (radius / std::sqrt(norm2));
}

/// Uniform direction on the sphere of C^n scaled to the given radius.
inline CVector on_complex_sphere(Rng& rng, Eigen::Index n, double radius) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector z(n);
  double norm2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = g(rng);
      const double im = g(rng);
      z(i) = {re, im};
    }
    norm2 = z.squaredNorm();
  } while (norm2 == 0.0);
  return z * (radius / std::sqrt(norm2));
}

}  // namespace cran
