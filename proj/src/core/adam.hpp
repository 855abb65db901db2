// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace khan {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Flat-vector Adam with bias correction. The parameter count is fixed by
// the first step.
struct AdamState {
  AdamConfig cfg;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
};

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads);

}  // namespace khan
