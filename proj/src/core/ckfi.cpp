// SPDX-License-Identifier: Apache-2.0
#include "core/ckfi.hpp"

#include <algorithm>
#include <cmath>

#include "core/bspline.hpp"
#include "core/error.hpp"
#include "core/hosvd.hpp"

namespace khan {

namespace {

constexpr double kRidge = 1e-12;

Tensor3 drop_mode2_slice(const Tensor3& t, std::size_t j) {
  Tensor3 out(t.d1, t.d2 - 1, t.d3);
  for (std::size_t i = 0; i < t.d1; ++i)
    for (std::size_t jj = 0; jj < t.d2; ++jj) {
      if (jj == j) continue;
      std::size_t dst = jj < j ? jj : jj - 1;
      for (std::size_t k = 0; k < t.d3; ++k) out(i, dst, k) = t(i, jj, k);
    }
  return out;
}

}  // namespace

std::vector<double> ckfi_second_order(const Tensor3& coeff,
                                      const TuckerRanks& ranks) {
  require(coeff.d2 >= 2, ErrorCode::InvalidArgument,
          "ckfi_second_order: needs at least two output features");
  require(all_finite(coeff), ErrorCode::InvalidArgument,
          "ckfi_second_order: coefficients must be finite");
  std::vector<double> delta(coeff.d2, 0.0);

  for (std::size_t j = 0; j < coeff.d2; ++j) {
    Tensor3 rest = drop_mode2_slice(coeff, j);
    TuckerResult tk = hosvd(rest, ranks);
    std::size_t r2 = tk.U2.cols;

    // Pattern tensor: contract the core back along modes 1 and 3 only, so
    // mode 2 stays in core coordinates. Slice s of P spans what one core
    // direction contributes in the original (d_in, d_c) space.
    Tensor3 p = mode_product(mode_product(tk.core, tk.U1, 1), tk.U3, 3);

    // Least squares: slice j of coeff against the r2 pattern slices.
    Mat gram(r2, r2);
    std::vector<double> rhs(r2, 0.0);
    for (std::size_t s = 0; s < r2; ++s) {
      for (std::size_t t2 = 0; t2 < r2; ++t2) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.d1; ++i)
          for (std::size_t k = 0; k < p.d3; ++k) acc += p(i, s, k) * p(i, t2, k);
        gram(s, t2) = acc;
      }
      double acc = 0.0;
      for (std::size_t i = 0; i < coeff.d1; ++i)
        for (std::size_t k = 0; k < coeff.d3; ++k)
          acc += coeff(i, j, k) * p(i, s, k);
      rhs[s] = acc;
    }
    for (std::size_t s = 0; s < r2; ++s) gram(s, s) += kRidge;
    std::vector<double> mix = solve_linear(gram, rhs);

    // Splice the fitted mixing coefficients back in as row j of the mode-2
    // factor and rebuild the full tensor.
    Mat u2(coeff.d2, r2);
    for (std::size_t jj = 0; jj < coeff.d2; ++jj)
      for (std::size_t s = 0; s < r2; ++s)
        u2(jj, s) = jj == j ? mix[s] : tk.U2(jj < j ? jj : jj - 1, s);

    Tensor3 rebuilt = mode_product(mode_product(mode_product(tk.core, tk.U1, 1), u2, 2), tk.U3, 3);
    delta[j] = frob_dist(rebuilt, coeff);
  }
  return delta;
}

std::vector<double> ckfi_first_order(const Tensor3& coeff) {
  require(all_finite(coeff), ErrorCode::InvalidArgument,
          "ckfi_first_order: coefficients must be finite");
  std::vector<double> rho(coeff.d2, 0.0);
  std::vector<double> row(coeff.d3);
  for (std::size_t j = 0; j < coeff.d2; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < coeff.d1; ++i) {
      for (std::size_t k = 0; k < coeff.d3; ++k) row[k] = coeff(i, j, k);
      acc += coeff_variance(row);
    }
    rho[j] = acc / static_cast<double>(coeff.d1);
  }
  return rho;
}

void normalize_scores(std::vector<double>& scores) {
  double mx = 0.0;
  for (double s : scores) mx = std::max(mx, s);
  if (mx > 0.0)
    for (double& s : scores) s /= mx;
}

CkfiScores ckfi_scores(const Tensor3& coeff, bool normalize) {
  CkfiScores out;
  out.delta = ckfi_second_order(coeff);
  out.rho = ckfi_first_order(coeff);
  if (normalize) {
    normalize_scores(out.delta);
    normalize_scores(out.rho);
  }
  return out;
}

}  // namespace khan
