// SPDX-License-Identifier: Apache-2.0
#include "core/hosvd.hpp"

#include "core/error.hpp"

namespace khan {

namespace {

Mat leading_columns(const Mat& u, std::size_t r) {
  Mat out(u.rows, r);
  for (std::size_t i = 0; i < u.rows; ++i)
    for (std::size_t j = 0; j < r; ++j) out(i, j) = u(i, j);
  return out;
}

Mat mode_factor(const Tensor3& t, int mode, const TuckerRanks& ranks) {
  SvdResult s = svd(unfold(t, mode));
  std::size_t r;
  if (ranks.has_value()) {
    r = (*ranks)[static_cast<std::size_t>(mode - 1)];
    std::size_t extent = mode == 1 ? t.d1 : mode == 2 ? t.d2 : t.d3;
    require(r >= 1 && r <= extent, ErrorCode::InvalidArgument,
            "hosvd: requested rank outside [1, mode extent]");
  } else {
    r = numerical_rank(s.S);
    if (r == 0) r = 1;  // zero tensor still gets a well-formed factor
  }
  return leading_columns(s.U, r);
}

}  // namespace

TuckerResult hosvd(const Tensor3& t, const TuckerRanks& ranks) {
  require(t.size() > 0, ErrorCode::InvalidArgument, "hosvd: empty tensor");
  TuckerResult out;
  out.U1 = mode_factor(t, 1, ranks);
  out.U2 = mode_factor(t, 2, ranks);
  out.U3 = mode_factor(t, 3, ranks);
  Tensor3 g = mode_product(t, transpose(out.U1), 1);
  g = mode_product(g, transpose(out.U2), 2);
  g = mode_product(g, transpose(out.U3), 3);
  out.core = std::move(g);
  return out;
}

Tensor3 tucker_reconstruct(const TuckerResult& d) {
  Tensor3 t = mode_product(d.core, d.U1, 1);
  t = mode_product(t, d.U2, 2);
  t = mode_product(t, d.U3, 3);
  return t;
}

}  // namespace khan
