// SPDX-License-Identifier: Apache-2.0
#include "core/tensor3.hpp"

#include <cmath>

#include "core/error.hpp"

namespace khan {

namespace {

void check_mode(int mode) {
  require(mode >= 1 && mode <= 3, ErrorCode::InvalidArgument,
          "tensor mode must be 1, 2 or 3");
}

}  // namespace

Mat unfold(const Tensor3& t, int mode) {
  check_mode(mode);
  Mat out;
  switch (mode) {
    case 1: {
      out = Mat(t.d1, t.d2 * t.d3);
      for (std::size_t i = 0; i < t.d1; ++i)
        for (std::size_t j = 0; j < t.d2; ++j)
          for (std::size_t k = 0; k < t.d3; ++k)
            out(i, j * t.d3 + k) = t(i, j, k);
      break;
    }
    case 2: {
      out = Mat(t.d2, t.d1 * t.d3);
      for (std::size_t i = 0; i < t.d1; ++i)
        for (std::size_t j = 0; j < t.d2; ++j)
          for (std::size_t k = 0; k < t.d3; ++k)
            out(j, i * t.d3 + k) = t(i, j, k);
      break;
    }
    default: {
      out = Mat(t.d3, t.d1 * t.d2);
      for (std::size_t i = 0; i < t.d1; ++i)
        for (std::size_t j = 0; j < t.d2; ++j)
          for (std::size_t k = 0; k < t.d3; ++k)
            out(k, i * t.d2 + j) = t(i, j, k);
      break;
    }
  }
  return out;
}

Tensor3 fold(const Mat& m, int mode, std::array<std::size_t, 3> dims) {
  check_mode(mode);
  std::size_t d1 = dims[0], d2 = dims[1], d3 = dims[2];
  std::size_t want_rows = mode == 1 ? d1 : mode == 2 ? d2 : d3;
  std::size_t want_cols = mode == 1 ? d2 * d3 : mode == 2 ? d1 * d3 : d1 * d2;
  require(m.rows == want_rows && m.cols == want_cols, ErrorCode::ShapeMismatch,
          "fold: matrix shape does not match requested tensor extents");
  Tensor3 t(d1, d2, d3);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j)
      for (std::size_t k = 0; k < d3; ++k) {
        switch (mode) {
          case 1: t(i, j, k) = m(i, j * d3 + k); break;
          case 2: t(i, j, k) = m(j, i * d3 + k); break;
          default: t(i, j, k) = m(k, i * d2 + j); break;
        }
      }
  return t;
}

Tensor3 mode_product(const Tensor3& t, const Mat& m, int mode) {
  check_mode(mode);
  std::size_t extent = mode == 1 ? t.d1 : mode == 2 ? t.d2 : t.d3;
  require(m.cols == extent, ErrorCode::DimMismatch,
          "mode_product: matrix columns must equal the tensor extent of the "
          "contracted mode");
  auto dims = t.dims();
  dims[static_cast<std::size_t>(mode - 1)] = m.rows;
  return fold(matmul(m, unfold(t, mode)), mode, dims);
}

double frob_norm(const Tensor3& t) {
  double s = 0.0;
  for (double v : t.data) s += v * v;
  return std::sqrt(s);
}

double frob_dist(const Tensor3& a, const Tensor3& b) {
  require(a.dims() == b.dims(), ErrorCode::DimMismatch,
          "frob_dist: tensors differ in shape");
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(const Tensor3& t) {
  for (double v : t.data)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace khan
