// SPDX-License-Identifier: Apache-2.0
#include "core/losses.hpp"

#include <cmath>
#include <vector>

#include "core/error.hpp"

namespace khan {

namespace {

double norm2(const double* u, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += u[i] * u[i];
  return std::sqrt(s);
}

}  // namespace

double cosine_sim(const double* u, const double* v, std::size_t d,
                  bool* degenerate) {
  double nu = norm2(u, d);
  double nv = norm2(v, d);
  if (nu == 0.0 || nv == 0.0) {
    if (degenerate) *degenerate = true;
    return 0.0;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < d; ++i) dot += u[i] * v[i];
  return dot / (nu * nv);
}

void cosine_sim_grad(const double* u, const double* v, std::size_t d,
                     double* out) {
  double nu = norm2(u, d);
  double nv = norm2(v, d);
  if (nu == 0.0 || nv == 0.0) {
    for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
    return;
  }
  // At v = u the analytic gradient vanishes identically; return the exact
  // zero instead of its rounding noise so a degenerate (unperturbed) pair
  // contributes nothing.
  bool same = true;
  for (std::size_t i = 0; i < d && same; ++i) same = u[i] == v[i];
  if (same) {
    for (std::size_t i = 0; i < d; ++i) out[i] = 0.0;
    return;
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < d; ++i) dot += u[i] * v[i];
  double s = dot / (nu * nv);
  // d/du [u.v / (|u||v|)] = v / (|u||v|) - s u / |u|^2
  for (std::size_t i = 0; i < d; ++i)
    out[i] = v[i] / (nu * nv) - s * u[i] / (nu * nu);
}

LossResult ntxent_loss(const Mat& v, double tau) {
  require(tau > 0.0, ErrorCode::InvalidArgument, "ntxent_loss: tau must be > 0");
  require(v.rows >= 2 && v.rows % 2 == 0, ErrorCode::InvalidArgument,
          "ntxent_loss: rows must form interleaved pairs");
  std::size_t m = v.rows;  // 2N
  std::size_t d = v.cols;

  Mat s(m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      double sim = cosine_sim(v.row_ptr(a), v.row_ptr(b), d);
      s(a, b) = sim;
      s(b, a) = sim;
    }

  double inv_m = 1.0 / static_cast<double>(m);
  double loss = 0.0;
  Mat d_s(m, m);  // dL / d s(a, b), a-row anchor contributions
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t partner = a % 2 == 0 ? a + 1 : a - 1;
    // log-sum-exp over every other row
    double mx = -1e300;
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) mx = std::max(mx, s(a, b) / tau);
    double z = 0.0;
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) z += std::exp(s(a, b) / tau - mx);
    double lse = mx + std::log(z);
    loss += inv_m * (lse - s(a, partner) / tau);
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      double p = std::exp(s(a, b) / tau - mx) / z;
      d_s(a, b) = inv_m * (p - (b == partner ? 1.0 : 0.0)) / tau;
    }
  }

  LossResult out;
  out.value = loss;
  out.d_v = Mat(m, d);
  std::vector<double> g(d);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      if (b == a) continue;
      double coef = d_s(a, b);
      if (coef == 0.0) continue;
      // s(a, b) depends on rows a and b
      cosine_sim_grad(v.row_ptr(a), v.row_ptr(b), d, g.data());
      for (std::size_t i = 0; i < d; ++i) out.d_v(a, i) += coef * g[i];
      cosine_sim_grad(v.row_ptr(b), v.row_ptr(a), d, g.data());
      for (std::size_t i = 0; i < d; ++i) out.d_v(b, i) += coef * g[i];
    }
  return out;
}

LossResult hard_negative_loss(const Mat& v, const Mat& v_hard) {
  require(v.rows == v_hard.rows && v.cols == v_hard.cols, ErrorCode::DimMismatch,
          "hard_negative_loss: shape mismatch");
  require(v.rows >= 1, ErrorCode::InvalidArgument, "hard_negative_loss: empty");
  std::size_t m = v.rows, d = v.cols;
  double inv_m = 1.0 / static_cast<double>(m);
  LossResult out;
  out.d_v = Mat(m, d);
  std::vector<double> g(d);
  for (std::size_t j = 0; j < m; ++j) {
    out.value += inv_m * cosine_sim(v.row_ptr(j), v_hard.row_ptr(j), d);
    cosine_sim_grad(v.row_ptr(j), v_hard.row_ptr(j), d, g.data());
    for (std::size_t i = 0; i < d; ++i) out.d_v(j, i) = inv_m * g[i];
  }
  return out;
}

}  // namespace khan
