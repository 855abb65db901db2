// SPDX-License-Identifier: Apache-2.0
#include "core/rng.hpp"

#include <cmath>

namespace khan {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t h = splitmix64(seed ^ fnv1a(name));
  h = splitmix64(h ^ index);
  return Rng(h);
}

double Rng::uniform01() {
  // 53 high bits -> [0, 1) on the dyadic grid.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) return 0;
  // Rejection sampling to kill modulo bias.
  std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; consumes exactly two words per call.
  double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;       // [0, 1)
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

int Rng::rademacher() { return (next_u64() >> 63) ? 1 : -1; }

}  // namespace khan
