// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "core/hosvd.hpp"
#include "core/tensor3.hpp"

namespace khan {

// Per-output-feature importance scores for a spline coefficient tensor
// (d_in x d_out x d_c). Both score vectors have d_out entries.
struct CkfiScores {
  std::vector<double> delta;  // redundancy distance, larger = more independent
  std::vector<double> rho;    // mean coefficient variance across inputs
};

// delta_j: drop mode-2 slice j, Tucker-decompose the remainder (full
// numerical rank by default, or the given per-mode ranks applied to the
// leave-one-out tensor), least-squares-fit slice j in the span the
// remaining slices generate, splice the fitted mixing row back in, and
// measure the Frobenius distance between the rebuilt tensor and the
// original. Features the others cannot express score high.
std::vector<double> ckfi_second_order(const Tensor3& coeff,
                                      const TuckerRanks& ranks = std::nullopt);

// rho_j: average over inputs i of the population variance of the spline
// coefficient vector coeff(i, j, :). Flat splines score near zero.
std::vector<double> ckfi_first_order(const Tensor3& coeff);

// Divide by the max entry when it is positive; order is preserved.
void normalize_scores(std::vector<double>& scores);

CkfiScores ckfi_scores(const Tensor3& coeff, bool normalize = true);

}  // namespace khan
