#pragma once

#include <cmath>
#include <cstdint>

namespace stackelberg {

// Stateless counter-based generator: the draw for (seed, path, step) never
// depends on how many paths or steps surround it, which is what makes
// common-random-number comparisons and parallel evaluation exact.
namespace rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t path,
                         std::uint64_t step) {
  std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
  h = mix64(h ^ (path + 0xbf58476d1ce4e5b9ULL));
  h = mix64(h ^ (step + 0x94d049bb133111ebULL));
  return h;
}

// Standard normal via Box-Muller on two uniforms derived from the key.
inline double standard_normal(std::uint64_t seed, std::uint64_t path,
                              std::uint64_t step) {
  std::uint64_t h = key(seed, path, step);
  std::uint64_t h2 = mix64(h + 0x9e3779b97f4a7c15ULL);
  double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;         // [0,1)
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace stackelberg
