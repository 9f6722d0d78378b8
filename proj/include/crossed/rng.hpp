#pragma once

#include <cstdint>
#include <random>

namespace crossed {

using Rng = std::mt19937_64;

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Generator for substream `stream` of a master seed.  Unrelated consumers
// (e.g. the theta draw vs. the auxiliary draws of a Gibbs sweep) take distinct
// streams so that swapping one consumer's algorithm leaves the others'
// randomness untouched.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::uint64_t s = seed ^ (0xd1342543de82ef95ULL * (stream + 1));
  std::seed_seq seq{detail::splitmix64(s), detail::splitmix64(s),
                    detail::splitmix64(s), detail::splitmix64(s)};
  return Rng(seq);
}

inline double draw_normal(Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline double draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  return d(rng);
}

inline double draw_exponential(Rng& rng) {
  std::exponential_distribution<double> d(1.0);
  return d(rng);
}

inline double draw_gamma(Rng& rng, double shape, double scale) {
  std::gamma_distribution<double> d(shape, scale);
  return d(rng);
}

inline double draw_chi_squared(Rng& rng, double dof) {
  return draw_gamma(rng, 0.5 * dof, 2.0);
}

}  // namespace crossed
