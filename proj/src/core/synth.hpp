// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "core/graph.hpp"

namespace khan {

struct SynthParams {
  int min_nodes = 10;
  int max_nodes = 20;
};

// Two structurally distinct families, interleaved labels 0,1,0,1,...:
// label 0 is a cycle with a few random chords, label 1 is a ring plus a
// hub node adjacent to every ring node. n_graphs must be even so classes
// stay balanced. Deterministic per seed.
Dataset synth_two_class(int n_graphs, std::uint64_t seed,
                        const SynthParams& params = {});

}  // namespace khan
