// SPDX-License-Identifier: Apache-2.0
#include "core/adam.hpp"

#include <cmath>

#include "core/error.hpp"

namespace khan {

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads) {
  require(params.size() == grads.size(), ErrorCode::DimMismatch,
          "adam_step: parameter/gradient size mismatch");
  if (state.t == 0) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  require(state.m.size() == params.size(), ErrorCode::DimMismatch,
          "adam_step: parameter count changed between steps");
  ++state.t;
  double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
  }
}

}  // namespace khan
