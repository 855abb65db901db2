// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>

#include "core/mat.hpp"

namespace khan {

// Dense 3-way tensor, row-major: entry (i, j, k) lives at
// data[i * d2 * d3 + j * d3 + k].
struct Tensor3 {
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t a, std::size_t b, std::size_t c, double fill = 0.0)
      : d1(a), d2(b), d3(c), data(a * b * c, fill) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * d2 + j) * d3 + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * d2 + j) * d3 + k];
  }

  std::array<std::size_t, 3> dims() const { return {d1, d2, d3}; }
  std::size_t size() const { return data.size(); }
};

// Mode-n matricization. Rows run over the chosen mode; columns run over the
// remaining modes in ascending mode order (earlier mode varies slower).
Mat unfold(const Tensor3& t, int mode);

// Inverse of unfold: rebuild a tensor with extents dims from its mode-n
// matricization. Throws on any shape inconsistency.
Tensor3 fold(const Mat& m, int mode, std::array<std::size_t, 3> dims);

// Mode-n product t x_n M: contracts mode n of t with the columns of M.
// Requires M.cols == extent of mode n; that extent becomes M.rows.
Tensor3 mode_product(const Tensor3& t, const Mat& m, int mode);

double frob_norm(const Tensor3& t);
double frob_dist(const Tensor3& a, const Tensor3& b);
bool all_finite(const Tensor3& t);

}  // namespace khan
