#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace structbandit {

/// SplitMix64 engine: one 64-bit word of state, trivially seedable per
/// substream, which makes Monte-Carlo loops order-independent when each
/// sample index gets its own derived seed.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Mixes (seed, stream, counter) into a fresh seed for an independent
/// substream. Pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t counter = 0) {
  SplitMix64 mix(seed ^ (0x517cc1b727220a95ull * (stream + 1)));
  std::uint64_t a = mix();
  SplitMix64 mix2(a ^ (0x2545f4914f6cdd1dull * (counter + 1)));
  return mix2();
}

/// Uniform double in [0, 1).
inline double uniform01(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a log argument.
inline double uniform_open01(SplitMix64& rng) { return 1.0 - uniform01(rng); }

/// Standard normal via Box-Muller (cosine branch). Two uniforms per draw,
/// no rejection loop, identical output on every platform.
inline double standard_normal(SplitMix64& rng) {
  const double u1 = uniform_open01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline Eigen::VectorXd gaussian_vector(int p, SplitMix64& rng) {
  Eigen::VectorXd g(p);
  for (int i = 0; i < p; ++i) g[i] = standard_normal(rng);
  return g;
}

/// Uniform direction on the unit sphere S^{p-1}.
inline Eigen::VectorXd sphere_uniform(int p, SplitMix64& rng) {
  Eigen::VectorXd g = gaussian_vector(p, rng);
  double nrm = g.norm();
  while (nrm < 1e-300) {
    g = gaussian_vector(p, rng);
    nrm = g.norm();
  }
  return g / nrm;
}

/// Uniform point in the closed unit ball (radial CDF inversion).
inline Eigen::VectorXd ball_uniform(int p, SplitMix64& rng) {
  Eigen::VectorXd dir = sphere_uniform(p, rng);
  const double r = std::pow(uniform01(rng), 1.0 / static_cast<double>(p));
  return r * dir;
}

/// Pairwise summation over values[0..n). The reduction tree depends only on
/// n, so partitioned producers writing into an index-ordered buffer reduce
/// to the same double as a single-threaded pass.
inline double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& values) {
  return pairwise_sum(values.data(), values.size());
}

}  // namespace structbandit
