// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "core/mat.hpp"

namespace khan {

// Cosine similarity of two length-d vectors. A zero vector makes the value
// 0 and sets *degenerate when provided.
double cosine_sim(const double* u, const double* v, std::size_t d,
                  bool* degenerate = nullptr);

// d sim(u, v) / d u written into out (length d). Zero when either vector
// is zero.
void cosine_sim_grad(const double* u, const double* v, std::size_t d,
                     double* out);

struct LossResult {
  double value = 0.0;
  Mat d_v;  // gradient w.r.t. the first argument's rows
};

// Normalized temperature-scaled cross entropy over interleaved positive
// pairs: rows (2i, 2i+1) of v are the two views of sample i. For each
// anchor the denominator runs over every other row, positives included.
// With a single pair the loss is exactly zero. Gradient is returned for
// all rows.
LossResult ntxent_loss(const Mat& v, double tau);

// Mean cosine similarity between matching rows of v and v_hard,
//   (1 / rows) * sum_j sim(v_j, v_hard_j).
// v_hard is treated as constant (stop-gradient): d_v covers v only.
LossResult hard_negative_loss(const Mat& v, const Mat& v_hard);

}  // namespace khan
