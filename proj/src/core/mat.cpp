// SPDX-License-Identifier: Apache-2.0
#include "core/mat.hpp"

#include <cmath>

#include "core/error.hpp"

namespace khan {

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, ErrorCode::DimMismatch,
          "matmul: inner dimensions disagree");
  Mat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.row_ptr(i);
    double* orow = out.row_ptr(i);
    for (std::size_t k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.row_ptr(k);
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Mat transpose(const Mat& a) {
  Mat out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

Mat mat_add(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::DimMismatch,
          "mat_add: shape mismatch");
  Mat out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Mat mat_sub(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::DimMismatch,
          "mat_sub: shape mismatch");
  Mat out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

void mat_scale_inplace(Mat& a, double s) {
  for (double& v : a.data) v *= s;
}

void mat_add_inplace(Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::DimMismatch,
          "mat_add_inplace: shape mismatch");
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

double frob_norm(const Mat& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs_diff(const Mat& a, const Mat& b) {
  require(a.rows == b.rows && a.cols == b.cols, ErrorCode::DimMismatch,
          "max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool all_finite(const Mat& a) {
  for (double v : a.data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::vector<double> solve_linear(Mat a, std::vector<double> b) {
  require(a.rows == a.cols && a.rows == b.size(), ErrorCode::DimMismatch,
          "solve_linear: system must be square");
  std::size_t n = a.rows;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
      std::swap(b[col], b[piv]);
    }
    double d = a(col, col);
    require(d != 0.0, ErrorCode::DegenerateInput, "solve_linear: singular system");
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a(r, col) / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double acc = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) acc -= a(ri, c) * x[c];
    x[ri] = acc / a(ri, ri);
  }
  return x;
}

}  // namespace khan
