// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace khan {

// Dense row-major matrix of doubles. Entry (r, c) lives at data[r * cols + c].
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }

  double* row_ptr(std::size_t r) { return data.data() + r * cols; }
  const double* row_ptr(std::size_t r) const { return data.data() + r * cols; }

  static Mat identity(std::size_t n);
};

Mat matmul(const Mat& a, const Mat& b);
Mat transpose(const Mat& a);
Mat mat_add(const Mat& a, const Mat& b);
Mat mat_sub(const Mat& a, const Mat& b);
void mat_scale_inplace(Mat& a, double s);
void mat_add_inplace(Mat& a, const Mat& b);
double frob_norm(const Mat& a);
double max_abs_diff(const Mat& a, const Mat& b);
bool all_finite(const Mat& a);

// Gaussian elimination with partial pivoting for small square systems.
std::vector<double> solve_linear(Mat a, std::vector<double> b);

}  // namespace khan
