// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "core/mat.hpp"

namespace khan {

// Thin SVD a = U * diag(S) * V^T with k = min(rows, cols):
//   U: rows x k with orthonormal columns, S: k descending, V: cols x k.
struct SvdResult {
  Mat U;
  std::vector<double> S;
  Mat V;
};

// One-sided Jacobi (Hestenes) SVD. Cyclic sweeps orthogonalize column pairs
// until every off-diagonal Gram entry satisfies
// |a_i . a_j| <= 1e-12 * sqrt((a_i . a_i)(a_j . a_j)); a sweep with no
// rotations means convergence. Throws NonConvergence after max_sweeps.
// Deterministic: fixed sweep order, stable descending sort, and a sign
// convention that makes the largest-magnitude entry of each U column
// non-negative (ties resolved toward the lowest row index). Exact zero
// columns are completed to an orthonormal set from coordinate vectors.
SvdResult svd(const Mat& a, int max_sweeps = 60);

// Number of singular values at or above rel_tol * S.front().
std::size_t numerical_rank(const std::vector<double>& s, double rel_tol = 1e-10);

}  // namespace khan
