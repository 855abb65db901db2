// SPDX-License-Identifier: Apache-2.0
#include "core/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace khan {

namespace {

constexpr double kPairTol = 1e-12;

double col_dot(const Mat& a, std::size_t p, std::size_t q) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i) s += a(i, p) * a(i, q);
  return s;
}

void rotate_cols(Mat& a, std::size_t p, std::size_t q, double c, double s) {
  for (std::size_t i = 0; i < a.rows; ++i) {
    double ap = a(i, p), aq = a(i, q);
    a(i, p) = c * ap - s * aq;
    a(i, q) = s * ap + c * aq;
  }
}

// Hestenes on a tall-or-square matrix (rows >= cols). Returns U (rows x cols,
// orthonormal columns, zero columns completed), S (cols, descending) and
// V (cols x cols, orthogonal). No sign convention applied here.
void hestenes(const Mat& input, int max_sweeps, Mat& u_out,
              std::vector<double>& s_out, Mat& v_out) {
  Mat a = input;
  std::size_t n = a.cols;
  Mat v = Mat::identity(n);

  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double gpp = col_dot(a, p, p);
        double gqq = col_dot(a, q, q);
        double gpq = col_dot(a, p, q);
        if (std::fabs(gpq) <= kPairTol * std::sqrt(gpp * gqq)) continue;
        ++rotations;
        double tau = (gqq - gpp) / (2.0 * gpq);
        double t = (tau >= 0.0 ? 1.0 : -1.0) /
                   (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        rotate_cols(a, p, q, c, s);
        rotate_cols(v, p, q, c, s);
      }
    }
    converged = rotations == 0;
  }
  require(converged, ErrorCode::NonConvergence,
          "svd: Jacobi sweeps did not converge within the sweep budget");

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(a, j, j));

  // Stable descending order by singular value.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  Mat u(a.rows, n);
  Mat vp(n, n);
  s_out.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t src = order[j];
    s_out[j] = sigma[src];
    for (std::size_t i = 0; i < n; ++i) vp(i, j) = v(i, src);
    if (sigma[src] > 0.0) {
      for (std::size_t i = 0; i < a.rows; ++i) u(i, j) = a(i, src) / sigma[src];
    }
  }

  // Deterministic orthonormal completion for exactly-zero columns.
  for (std::size_t j = 0; j < n; ++j) {
    if (s_out[j] > 0.0) continue;
    std::vector<double> cand(a.rows);
    bool placed = false;
    for (std::size_t e = 0; e < a.rows && !placed; ++e) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[e] = 1.0;
      for (std::size_t c2 = 0; c2 < n; ++c2) {
        if (c2 == j) continue;
        if (s_out[c2] == 0.0 && c2 > j) continue;  // not yet filled
        double d = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) d += cand[i] * u(i, c2);
        for (std::size_t i = 0; i < a.rows; ++i) cand[i] -= d * u(i, c2);
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        for (std::size_t i = 0; i < a.rows; ++i) u(i, j) = cand[i] / nrm;
        placed = true;
      }
    }
    require(placed, ErrorCode::NonConvergence,
            "svd: failed to complete an orthonormal basis");
  }

  u_out = std::move(u);
  v_out = std::move(vp);
}

void apply_sign_convention(Mat& u, Mat& v) {
  for (std::size_t j = 0; j < u.cols; ++j) {
    std::size_t imax = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < u.rows; ++i) {
      double mag = std::fabs(u(i, j));
      if (mag > best) {
        best = mag;
        imax = i;
      }
    }
    if (u(imax, j) < 0.0) {
      for (std::size_t i = 0; i < u.rows; ++i) u(i, j) = -u(i, j);
      for (std::size_t i = 0; i < v.rows; ++i) v(i, j) = -v(i, j);
    }
  }
}

}  // namespace

SvdResult svd(const Mat& a, int max_sweeps) {
  require(a.rows > 0 && a.cols > 0, ErrorCode::InvalidArgument,
          "svd: matrix must be non-empty");
  require(all_finite(a), ErrorCode::InvalidArgument,
          "svd: matrix entries must be finite");

  SvdResult r;
  if (a.rows >= a.cols) {
    hestenes(a, max_sweeps, r.U, r.S, r.V);
  } else {
    // Work on the transpose, then swap the factor roles.
    Mat up;
    Mat vp;
    std::vector<double> s;
    hestenes(transpose(a), max_sweeps, up, s, vp);
    r.U = std::move(vp);
    r.S = std::move(s);
    r.V = std::move(up);
  }
  apply_sign_convention(r.U, r.V);
  return r;
}

std::size_t numerical_rank(const std::vector<double>& s, double rel_tol) {
  if (s.empty() || s.front() <= 0.0) return 0;
  double thr = rel_tol * s.front();
  std::size_t r = 0;
  for (double v : s)
    if (v >= thr) ++r;
  return r;
}

}  // namespace khan
