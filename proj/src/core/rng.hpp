// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace khan {

// Deterministic random source. One master seed fans out into named
// sub-streams so that unrelated consumers (init, shuffling, augmentation,
// perturbation) never interleave draws. All value mappings are hand-rolled
// on top of mt19937_64, which the standard pins bit-exactly, so sequences
// are reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Sub-stream derived from (seed, name, index) by hashing; streams with
  // different names or indices are independent for practical purposes.
  static Rng stream(std::uint64_t seed, std::string_view name,
                    std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  double uniform01();                            // [0, 1)
  double uniform(double lo, double hi);          // [lo, hi)
  std::uint64_t uniform_below(std::uint64_t n);  // unbiased in [0, n)
  double normal(double mean, double stddev);     // Box-Muller, one per call
  int rademacher();                              // -1 or +1, each w.p. 1/2

  // Fisher-Yates; iteration order fixed for determinism.
  template <class T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace khan
