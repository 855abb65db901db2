// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "core/bspline.hpp"
#include "core/mat.hpp"
#include "core/rng.hpp"
#include "core/tensor3.hpp"

namespace khan {

// Layer of learnable univariate spline functions: output j sums one spline
// of each input coordinate,
//   y_j = sum_i phi_ij(s(x_i)),  phi_ij(t) = sum_k coeff(i, j, k) B_k(t),
// where s is tanh when squash_input is set (keeping lookups inside the
// spline domain) and identity otherwise.
struct KanLayer {
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  SplineGrid grid;
  bool squash_input = true;
  Tensor3 coeff;  // d_in x d_out x basis_count
};

KanLayer make_kan_layer(std::size_t d_in, std::size_t d_out,
                        const SplineGrid& grid, bool squash_input = true);

// Gaussian init with std sigma / sqrt(d_in), so per-output magnitudes stay
// flat as the fan-in grows.
void kan_init(KanLayer& layer, Rng& rng, double sigma = 0.1);

// Everything backward needs: per-sample squashed inputs plus basis values
// and derivatives at them, laid out (sample, input_dim * basis_count).
struct KanCache {
  std::size_t n = 0;
  std::size_t d_in = 0;
  std::size_t d_c = 0;
  bool squash_input = false;
  Mat squashed;
  Mat bases;
  Mat derivs;
};

// x: n x d_in -> y: n x d_out. Pass a cache to enable backward.
Mat kan_forward(const KanLayer& layer, const Mat& x, KanCache* cache = nullptr);

struct KanGrads {
  Tensor3 coeff;
};

// Backprop through the layer: consumes dY (n x d_out), accumulates into
// grads.coeff and returns dX (n x d_in). The cache must come from a
// kan_forward call on this layer with the matching batch.
Mat kan_backward(const KanLayer& layer, const KanCache& cache, const Mat& d_y,
                 KanGrads& grads);

// Binary container (fixed 16-byte header, little-endian payload) plus a
// human-readable JSON sidecar at path + ".json".
void kan_save(const KanLayer& layer, const std::string& path);
KanLayer kan_load(const std::string& path);

}  // namespace khan
