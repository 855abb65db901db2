// SPDX-License-Identifier: Apache-2.0
#include "core/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "core/bspline.hpp"
#include "core/ckfi.hpp"
#include "core/encoder.hpp"
#include "core/error.hpp"
#include "core/hosvd.hpp"
#include "core/kan_layer.hpp"
#include "core/losses.hpp"
#include "core/synth.hpp"
#include "core/train.hpp"

namespace khan {

namespace {

struct Check {
  const char* name;
  std::function<void(std::ostringstream&)> body;  // throws CheckFail on failure
};

struct CheckFail {
  std::string message;
};

void expect(bool cond, const std::string& msg) {
  if (!cond) throw CheckFail{msg};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

Mat random_mat(Rng& rng, std::size_t r, std::size_t c) {
  Mat m(r, c);
  for (double& v : m.data) v = rng.normal(0.0, 1.0);
  return m;
}

Tensor3 random_tensor(Rng& rng, std::size_t a, std::size_t b, std::size_t c) {
  Tensor3 t(a, b, c);
  for (double& v : t.data) v = rng.normal(0.0, 1.0);
  return t;
}

// Relative agreement with an absolute floor, the contract used by every
// finite-difference suite here.
bool close_rel(double a, double b, double rel, double floor_abs) {
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + floor_abs;
}

double fd_central(const std::function<double()>& f, double& slot, double h) {
  double keep = slot;
  slot = keep + h;
  double up = f();
  slot = keep - h;
  double dn = f();
  slot = keep;
  return (up - dn) / (2.0 * h);
}

// ---------------------------------------------------------------- tensor --

void check_fold_roundtrip(std::ostringstream& detail) {
  Rng rng(101);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t a = 1 + rng.uniform_below(6);
    std::size_t b = 1 + rng.uniform_below(6);
    std::size_t c = 1 + rng.uniform_below(6);
    Tensor3 t = random_tensor(rng, a, b, c);
    for (int mode = 1; mode <= 3; ++mode) {
      Tensor3 back = fold(unfold(t, mode), mode, t.dims());
      expect(back.data == t.data, "fold(unfold) not the identity");
    }
  }
  // Pinned layout example: 2x2x2 stored (a..h) has mode-1 rows
  // (a,b,c,d) and (e,f,g,h).
  Tensor3 t(2, 2, 2);
  std::iota(t.data.begin(), t.data.end(), 1.0);
  Mat u = unfold(t, 1);
  expect(u(0, 0) == 1 && u(0, 1) == 2 && u(0, 2) == 3 && u(0, 3) == 4 &&
             u(1, 0) == 5 && u(1, 3) == 8,
         "mode-1 unfolding layout mismatch");
  Mat u2 = unfold(t, 2);
  expect(u2(0, 0) == 1 && u2(0, 1) == 2 && u2(0, 2) == 5 && u2(0, 3) == 6,
         "mode-2 unfolding layout mismatch");
  detail << "100 random round trips, fixed layout example";
}

void check_mode_product(std::ostringstream& detail) {
  Rng rng(102);
  Tensor3 t = random_tensor(rng, 4, 3, 5);
  Mat a = random_mat(rng, 2, 4);
  Mat b = random_mat(rng, 6, 3);
  Tensor3 ab = mode_product(mode_product(t, a, 1), b, 2);
  Tensor3 ba = mode_product(mode_product(t, b, 2), a, 1);
  expect(frob_dist(ab, ba) <= 1e-12 * std::max(1.0, frob_norm(ab)),
         "mode products along different modes must commute");
  for (int mode = 1; mode <= 3; ++mode) {
    std::size_t e = mode == 1 ? t.d1 : mode == 2 ? t.d2 : t.d3;
    Tensor3 same = mode_product(t, Mat::identity(e), mode);
    expect(frob_dist(same, t) == 0.0, "identity mode product must be exact");
  }
  detail << "commutation and identity contraction";
}

void check_svd(std::ostringstream& detail) {
  Rng rng(103);
  double worst_orth = 0.0, worst_rec = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t m = 1 + rng.uniform_below(12);
    std::size_t n = 1 + rng.uniform_below(12);
    Mat a = random_mat(rng, m, n);
    if (rep % 5 == 0 && m > 1 && n > 1) {
      // plant rank deficiency
      for (std::size_t j = 0; j < n; ++j) a(m - 1, j) = a(0, j);
    }
    SvdResult s = svd(a);
    std::size_t k = std::min(m, n);
    expect(s.U.rows == m && s.U.cols == k && s.V.rows == n && s.V.cols == k &&
               s.S.size() == k,
           "thin SVD shapes");
    for (std::size_t i = 0; i + 1 < k; ++i)
      expect(s.S[i] >= s.S[i + 1] && s.S[i + 1] >= 0.0,
             "singular values must be sorted, non-negative");
    Mat utu = matmul(transpose(s.U), s.U);
    Mat vtv = matmul(transpose(s.V), s.V);
    worst_orth = std::max(worst_orth, max_abs_diff(utu, Mat::identity(k)));
    worst_orth = std::max(worst_orth, max_abs_diff(vtv, Mat::identity(k)));
    Mat us(m, k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) us(i, j) = s.U(i, j) * s.S[j];
    Mat rec = matmul(us, transpose(s.V));
    double na = frob_norm(a);
    worst_rec = std::max(worst_rec, frob_norm(mat_sub(rec, a)) /
                                        std::max(na, 1e-300));
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t imax = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < m; ++i)
        if (std::fabs(s.U(i, j)) > best) {
          best = std::fabs(s.U(i, j));
          imax = i;
        }
      expect(s.U(imax, j) >= 0.0, "sign convention violated");
    }
  }
  expect(worst_orth <= 1e-10, "orthonormality error " + fmt(worst_orth));
  expect(worst_rec <= 1e-10, "reconstruction error " + fmt(worst_rec));
  detail << "50 matrices, worst orthonormality " << fmt(worst_orth)
         << ", worst reconstruction " << fmt(worst_rec);
}

void check_hosvd(std::ostringstream& detail) {
  Rng rng(104);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t a = 1 + rng.uniform_below(8);
    std::size_t b = 1 + rng.uniform_below(8);
    std::size_t c = 1 + rng.uniform_below(8);
    Tensor3 t = random_tensor(rng, a, b, c);
    TuckerResult d = hosvd(t);
    Tensor3 rec = tucker_reconstruct(d);
    worst = std::max(worst, frob_dist(rec, t) / std::max(frob_norm(t), 1e-300));
  }
  expect(worst <= 1e-10, "full-rank reconstruction error " + fmt(worst));

  // rank-1 tensor: outer product of three vectors
  Tensor3 r1(5, 4, 3);
  Rng rng2(105);
  std::vector<double> x(5), y(4), z(3);
  for (auto* v : {&x, &y, &z})
    for (double& e : *v) e = rng2.normal(0.0, 1.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 3; ++k) r1(i, j, k) = x[i] * y[j] * z[k];
  TuckerResult d1 = hosvd(r1);
  expect(d1.core.d1 == 1 && d1.core.d2 == 1 && d1.core.d3 == 1,
         "rank-1 tensor must give a 1x1x1 core");
  expect(frob_dist(tucker_reconstruct(d1), r1) <= 1e-12 * frob_norm(r1),
         "rank-1 reconstruction must be exact");

  // truncation error bounded by the energy of the dropped singular values
  Tensor3 t = random_tensor(rng, 6, 6, 6);
  double tail = 0.0;
  for (int mode = 1; mode <= 3; ++mode) {
    SvdResult s = svd(unfold(t, mode));
    for (std::size_t i = 2; i < s.S.size(); ++i) tail += s.S[i] * s.S[i];
  }
  TuckerResult trunc = hosvd(t, TuckerRanks{{2, 2, 2}});
  double err = frob_dist(tucker_reconstruct(trunc), t);
  expect(err * err <= tail + 1e-9, "truncation bound violated: err^2 " +
                                       fmt(err * err) + " > tail " + fmt(tail));
  detail << "50 tensors, worst relative error " << fmt(worst)
         << "; rank-1 exact; truncation bound holds";
}

void check_tensor_determinism(std::ostringstream& detail) {
  Rng rng(106);
  Mat a = random_mat(rng, 9, 6);
  SvdResult s1 = svd(a);
  SvdResult s2 = svd(a);
  expect(s1.U.data == s2.U.data && s1.S == s2.S && s1.V.data == s2.V.data,
         "repeated SVD must be bit-identical");
  Tensor3 t = random_tensor(rng, 5, 4, 3);
  TuckerResult d1 = hosvd(t);
  TuckerResult d2 = hosvd(t);
  expect(d1.core.data == d2.core.data && d1.U1.data == d2.U1.data &&
             d1.U2.data == d2.U2.data && d1.U3.data == d2.U3.data,
         "repeated HOSVD must be bit-identical");
  detail << "bit-identical repeated decompositions";
}

// --------------------------------------------------------------- bspline --

void check_partition_of_unity(std::ostringstream& detail) {
  SplineGrid g = make_grid();
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    double x = g.a + (g.b - g.a) * static_cast<double>(i) / 999.0;
    auto v = basis_eval(g, x);
    double sum = 0.0;
    std::size_t nonzero = 0;
    for (double e : v) {
      expect(e >= 0.0 && e <= 1.0, "basis value outside [0, 1]");
      if (e != 0.0) ++nonzero;
      sum += e;
    }
    expect(nonzero <= g.degree + 1, "more than degree+1 active bases");
    worst = std::max(worst, std::fabs(sum - 1.0));
  }
  expect(worst <= 1e-12, "partition of unity max deviation " + fmt(worst));
  // clamping
  auto lo = basis_eval(g, g.a - 10.0);
  auto at_a = basis_eval(g, g.a);
  expect(lo == at_a, "clamping must evaluate at the endpoint");
  detail << "1000 points, max |sum - 1| = " << fmt(worst);
}

void check_variance_bound(std::ostringstream& detail) {
  // Claimed bound: integral variance of the spline over the domain is at
  // most M(0) times the population variance of its coefficients. Checked
  // on 1000 standard-normal coefficient draws.
  SplineGrid g = make_grid();
  auto m = basis_l2_products(g);
  Rng rng(107);
  std::size_t violations = 0;
  double worst_excess = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> c(g.basis_count());
    for (double& e : c) e = rng.normal(0.0, 1.0);
    double lhs = spline_variance(g, c);
    double rhs = m[0] * coeff_variance(c);
    double excess = lhs - rhs;
    if (excess > 1e-9) {
      ++violations;
      worst_excess = std::max(worst_excess, excess);
    }
  }
  detail << violations << "/1000 draws violate, worst excess "
         << fmt(worst_excess);
  expect(violations == 0, "variance bound failed on " +
                              std::to_string(violations) +
                              "/1000 draws (worst excess " + fmt(worst_excess) +
                              "); see README, the claimed inequality is not "
                              "satisfied by this basis");
}

void check_variance_rowsum_bound(std::ostringstream& detail) {
  // Provable variant: Var[phi] <= (M(0) + 2M(1) + 2M(2) + 2M(3)) * sum of
  // squared centered coefficients, by the Gershgorin row-sum bound on the
  // basis Gram matrix.
  SplineGrid g = make_grid();
  auto m = basis_l2_products(g);
  double row_sum = m[0] + 2.0 * (m[1] + m[2] + m[3]);
  Rng rng(108);
  double worst = -1e300;
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<double> c(g.basis_count());
    for (double& e : c) e = rng.normal(0.0, 1.0);
    double mean = 0.0;
    for (double e : c) mean += e;
    mean /= static_cast<double>(c.size());
    double ss = 0.0;
    for (double e : c) ss += (e - mean) * (e - mean);
    double lhs = spline_variance(g, c);
    double excess = lhs - row_sum * ss;
    worst = std::max(worst, excess);
    expect(excess <= 1e-9, "row-sum variance bound violated by " + fmt(excess));
  }
  detail << "1000 draws, worst slack " << fmt(-worst);
}

void check_support(std::ostringstream& detail) {
  SplineGrid g = make_grid();
  for (int i = 0; i <= 500; ++i) {
    double x = g.a + (g.b - g.a) * static_cast<double>(i) / 500.0;
    auto v = basis_eval(g, x);
    for (std::size_t k = 0; k < v.size(); ++k) {
      expect(v[k] >= 0.0, "negative basis value");
      double lo = g.knots[k];
      double hi = g.knots[k + g.degree + 1];
      if (x < lo || x > hi)
        expect(v[k] == 0.0, "basis " + std::to_string(k) +
                                " nonzero outside its support at x=" + fmt(x));
    }
  }
  detail << "non-negativity and compact support on 501 points";
}

void check_deriv_fd(std::ostringstream& detail) {
  SplineGrid g = make_grid();
  double worst = 0.0, worst_sum = 0.0;
  for (int i = 0; i < 100; ++i) {
    double x = g.a + (g.b - g.a) * (0.01 + 0.98 * static_cast<double>(i) / 99.0);
    auto d = basis_deriv(g, x);
    double h = 1e-6;
    auto up = basis_eval(g, x + h);
    auto dn = basis_eval(g, x - h);
    double sum = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      double fd = (up[k] - dn[k]) / (2.0 * h);
      worst = std::max(worst, std::fabs(fd - d[k]));
      sum += d[k];
    }
    worst_sum = std::max(worst_sum, std::fabs(sum));
  }
  expect(worst <= 1e-6, "derivative finite-difference error " + fmt(worst));
  expect(worst_sum <= 1e-10, "derivatives must sum to zero, got " + fmt(worst_sum));
  auto outside = basis_deriv(g, g.b + 1.0);
  for (double e : outside) expect(e == 0.0, "derivative outside domain must be 0");
  detail << "100 interior points, worst fd error " << fmt(worst);
}

// ------------------------------------------------------------- kan layer --

void check_kan_linearity(std::ostringstream& detail) {
  Rng rng(109);
  SplineGrid g = make_grid();
  KanLayer l1 = make_kan_layer(3, 4, g);
  KanLayer l2 = make_kan_layer(3, 4, g);
  kan_init(l1, rng);
  kan_init(l2, rng);
  Mat x = random_mat(rng, 5, 3);
  Mat y1 = kan_forward(l1, x);
  Mat y2 = kan_forward(l2, x);
  KanLayer sum = l1;
  for (std::size_t i = 0; i < sum.coeff.data.size(); ++i)
    sum.coeff.data[i] += l2.coeff.data[i];
  Mat ys = kan_forward(sum, x);
  expect(max_abs_diff(ys, mat_add(y1, y2)) <= 1e-12,
         "output must be linear in the coefficients");
  KanLayer zero = make_kan_layer(3, 4, g);
  Mat y0 = kan_forward(zero, x);
  expect(frob_norm(y0) == 0.0, "zero coefficients must give zero output");
  detail << "additivity in coefficients, zero map";
}

void check_kan_output_span(std::ostringstream& detail) {
  // Plant output j* as a fixed linear combination of the other outputs:
  // the layer then reproduces that combination for every input.
  Rng rng(110);
  SplineGrid g = make_grid();
  KanLayer l = make_kan_layer(4, 5, g);
  kan_init(l, rng);
  std::vector<double> a = {0.7, -1.3, 0.25, 2.0};  // weights for outputs 0..3
  std::size_t target = 4;
  for (std::size_t i = 0; i < l.d_in; ++i)
    for (std::size_t k = 0; k < l.grid.basis_count(); ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 4; ++j) acc += a[j] * l.coeff(i, j, k);
      l.coeff(i, target, k) = acc;
    }
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    Mat x = random_mat(rng, 1, 4);
    Mat y = kan_forward(l, x);
    double want = 0.0;
    for (std::size_t j = 0; j < 4; ++j) want += a[j] * y(0, j);
    worst = std::max(worst, std::fabs(y(0, target) - want));
  }
  expect(worst <= 1e-9, "planted output combination error " + fmt(worst));
  detail << "100 inputs, worst error " << fmt(worst);
}

void check_kan_gradient(std::ostringstream& detail) {
  Rng rng(111);
  SplineGrid g = make_grid();
  KanLayer l = make_kan_layer(3, 2, g);
  kan_init(l, rng, 0.5);
  Mat x = random_mat(rng, 4, 3);
  Mat wts = random_mat(rng, 4, 2);  // random linear functional of Y

  auto loss = [&]() {
    Mat y = kan_forward(l, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * wts.data[i];
    return s;
  };

  KanCache cache;
  kan_forward(l, x, &cache);
  KanGrads grads;
  Mat dx = kan_backward(l, cache, wts, grads);

  double worst = 0.0;
  for (std::size_t i = 0; i < l.coeff.data.size(); ++i) {
    double fd = fd_central(loss, l.coeff.data[i], 1e-5);
    expect(close_rel(grads.coeff.data[i], fd, 1e-4, 1e-8),
           "coefficient gradient mismatch at " + std::to_string(i));
    worst = std::max(worst, std::fabs(grads.coeff.data[i] - fd));
  }
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    double fd = fd_central(loss, x.data[i], 1e-5);
    expect(close_rel(dx.data[i], fd, 1e-4, 1e-8),
           "input gradient mismatch at " + std::to_string(i));
    worst = std::max(worst, std::fabs(dx.data[i] - fd));
  }
  detail << "all coefficient and input grads, worst abs diff " << fmt(worst);
}

void check_kan_permutation(std::ostringstream& detail) {
  Rng rng(112);
  SplineGrid g = make_grid();
  KanLayer l = make_kan_layer(4, 4, g);
  kan_init(l, rng);
  Mat x = random_mat(rng, 3, 4);
  Mat y = kan_forward(l, x);

  std::vector<std::size_t> perm = {2, 0, 3, 1};
  KanLayer lp = make_kan_layer(4, 4, g);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < g.basis_count(); ++k)
        lp.coeff(i, j, k) = l.coeff(i, perm[j], k);
  Mat yp = kan_forward(lp, x);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t j = 0; j < 4; ++j)
      expect(yp(s, j) == y(s, perm[j]), "output permutation equivariance");
  detail << "permuting coefficient slices permutes outputs exactly";
}

// ------------------------------------------------------------------ ckfi --

double slice_residual_oracle(const Tensor3& c, std::size_t j) {
  // distance from slice j to the span of the other slices, via SVD basis
  std::size_t d = c.d1 * c.d3;
  Mat rest(d, c.d2 - 1);
  std::vector<double> target(d);
  std::size_t col = 0;
  for (std::size_t jj = 0; jj < c.d2; ++jj) {
    std::size_t row = 0;
    for (std::size_t i = 0; i < c.d1; ++i)
      for (std::size_t k = 0; k < c.d3; ++k) {
        double v = c(i, jj, k);
        if (jj == j)
          target[row] = v;
        else
          rest(row, col) = v;
        ++row;
      }
    if (jj != j) ++col;
  }
  SvdResult s = svd(rest);
  std::size_t r = numerical_rank(s.S);
  std::vector<double> resid = target;
  for (std::size_t q = 0; q < r; ++q) {
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += s.U(i, q) * target[i];
    for (std::size_t i = 0; i < d; ++i) resid[i] -= dot * s.U(i, q);
  }
  double nrm = 0.0;
  for (double v : resid) nrm += v * v;
  return std::sqrt(nrm);
}

void check_ckfi_oracle(std::ostringstream& detail) {
  Rng rng(113);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t a = 2 + rng.uniform_below(5);  // up to 6
    std::size_t b = 2 + rng.uniform_below(7);  // up to 8
    std::size_t c = 2 + rng.uniform_below(7);
    Tensor3 t = random_tensor(rng, a, b, c);
    auto delta = ckfi_second_order(t);
    for (std::size_t j = 0; j < b; ++j) {
      double oracle = slice_residual_oracle(t, j);
      worst = std::max(worst, std::fabs(delta[j] - oracle));
    }
  }
  expect(worst <= 1e-8, "leave-one-out score deviates from the projection "
                        "oracle by " + fmt(worst));

  // mutually orthogonal slices with norms 1, 2, 3: nothing of slice j lies
  // in the others' span, so the scores are exactly those norms
  Tensor3 t(3, 3, 3);
  t(0, 0, 0) = 1.0;
  t(1, 1, 1) = 2.0;
  t(2, 2, 2) = 3.0;
  auto delta = ckfi_second_order(t);
  expect(std::fabs(delta[0] - 1.0) <= 1e-8 && std::fabs(delta[1] - 2.0) <= 1e-8 &&
             std::fabs(delta[2] - 3.0) <= 1e-8,
         "orthogonal-slice scores must equal slice norms");
  detail << "50 tensors, worst |delta - oracle| = " << fmt(worst);
}

void check_ckfi_planted(std::ostringstream& detail) {
  Rng rng(114);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    std::size_t a = 3 + rng.uniform_below(3);
    std::size_t b = 4 + rng.uniform_below(4);
    std::size_t c = 4 + rng.uniform_below(4);
    Tensor3 t = random_tensor(rng, a, b, c);
    std::size_t j = rng.uniform_below(b);
    // plant slice j as a combination of two other slices
    std::size_t l1 = (j + 1) % b;
    std::size_t l2 = (j + 2) % b;
    double a1 = rng.normal(0.0, 2.0);
    double a2 = rng.normal(0.0, 2.0);
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t k = 0; k < c; ++k)
        t(i, j, k) = a1 * t(i, l1, k) + a2 * t(i, l2, k);
    auto delta = ckfi_second_order(t);
    worst = std::max(worst, delta[j] / std::max(1.0, frob_norm(t)));
  }
  expect(worst <= 1e-8, "planted dependent slice scored " + fmt(worst));
  detail << "20 plants, worst relative score " << fmt(worst);
}

void check_ckfi_scaling(std::ostringstream& detail) {
  Rng rng(115);
  Tensor3 t = random_tensor(rng, 4, 5, 6);
  auto rho = ckfi_first_order(t);
  auto delta = ckfi_second_order(t);

  Tensor3 shifted = t;
  for (std::size_t k = 0; k < t.d3; ++k) shifted(2, 3, k) += 7.5;
  auto rho_s = ckfi_first_order(shifted);
  for (std::size_t j = 0; j < t.d2; ++j)
    expect(close_rel(rho_s[j], rho[j], 1e-9, 1e-12),
           "constant shift of one spline must not change the variance score");

  double alpha = -2.5;
  Tensor3 scaled = t;
  for (double& v : scaled.data) v *= alpha;
  auto rho_a = ckfi_first_order(scaled);
  auto delta_a = ckfi_second_order(scaled);
  for (std::size_t j = 0; j < t.d2; ++j) {
    expect(close_rel(rho_a[j], alpha * alpha * rho[j], 1e-9, 1e-12),
           "variance score must scale quadratically");
    expect(close_rel(delta_a[j], std::fabs(alpha) * delta[j], 1e-7, 1e-9),
           "leave-one-out score must scale linearly");
  }
  detail << "shift invariance and alpha^2 / |alpha| scaling";
}

void check_normalize_order(std::ostringstream& detail) {
  Rng rng(116);
  std::vector<double> s(16);
  for (double& v : s) v = std::fabs(rng.normal(1.0, 2.0));
  s[3] = 0.0;
  std::vector<double> n = s;
  normalize_scores(n);
  double mx = *std::max_element(n.begin(), n.end());
  expect(std::fabs(mx - 1.0) <= 1e-15, "max after normalization must be 1");
  auto rank = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    return idx;
  };
  expect(rank(s) == rank(n), "normalization must preserve the argsort");
  std::vector<double> again = n;
  normalize_scores(again);
  expect(again == n, "normalization must be idempotent");
  std::vector<double> zeros(5, 0.0);
  normalize_scores(zeros);
  expect(std::all_of(zeros.begin(), zeros.end(), [](double v) { return v == 0.0; }),
         "zero vector must pass through unchanged");
  detail << "argsort preserved, idempotent, zero-safe";
}

// ----------------------------------------------------------------- graph --

Graph random_graph(Rng& rng, int n, double density, std::size_t feat_width) {
  Graph g;
  g.n = n;
  for (int u = 0; u + 1 < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.uniform01() < density) g.edges.emplace_back(u, v);
  g.x = Mat(static_cast<std::size_t>(n), feat_width);
  for (double& v : g.x.data) v = rng.normal(0.0, 1.0);
  g.label = static_cast<int>(rng.uniform_below(2));
  g.has_label = true;
  return g;
}

void verify_graph_invariants(const Graph& g) {
  expect(g.n >= 1, "graph must keep at least one node");
  expect(g.x.rows == static_cast<std::size_t>(g.n), "feature rows != node count");
  std::set<std::pair<int, int>> seen;
  for (auto [u, v] : g.edges) {
    expect(u >= 0 && v >= 0 && u < g.n && v < g.n, "edge index out of range");
    expect(u < v, "edges must be stored with u < v");
    expect(seen.insert({u, v}).second, "duplicate edge");
  }
}

void check_augment_invariants(std::ostringstream& detail) {
  Rng rng(117);
  const AugmentKind kinds[] = {AugmentKind::NodeDrop, AugmentKind::EdgePerturb,
                               AugmentKind::AttrMask, AugmentKind::Identity};
  for (int rep = 0; rep < 10000; ++rep) {
    int n = 1 + static_cast<int>(rng.uniform_below(12));
    Graph g = random_graph(rng, n, 0.4, 3);
    AugmentConfig cfg;
    cfg.kind = kinds[rng.uniform_below(4)];
    cfg.ratio = rng.uniform(0.0, 0.95);
    Graph h = augment(g, cfg, rng);
    verify_graph_invariants(h);
    switch (cfg.kind) {
      case AugmentKind::NodeDrop: {
        std::size_t drop = std::min<std::size_t>(
            static_cast<std::size_t>(std::floor(cfg.ratio * n)),
            static_cast<std::size_t>(n - 1));
        expect(h.n == n - static_cast<int>(drop), "node_drop count");
        break;
      }
      case AugmentKind::EdgePerturb:
        expect(h.edges.size() == g.edges.size() || g.edges.empty(),
               "edge_perturb must preserve |E|");
        expect(h.n == g.n, "edge_perturb must not touch nodes");
        break;
      case AugmentKind::AttrMask:
        expect(h.edges == g.edges && h.n == g.n,
               "attr_mask must leave structure untouched");
        break;
      case AugmentKind::Identity:
        expect(h.edges == g.edges && h.x.data == g.x.data, "identity must copy");
        break;
    }
  }
  detail << "10000 randomized applications";
}

void check_batch_roundtrip(std::ostringstream& detail) {
  Rng rng(118);
  std::vector<Graph> graphs;
  for (int i = 0; i < 6; ++i)
    graphs.push_back(random_graph(rng, 3 + static_cast<int>(rng.uniform_below(5)),
                                  0.5, 4));
  GraphBatch b = make_batch(graphs);
  expect(std::is_sorted(b.indicator.begin(), b.indicator.end()),
         "indicator must be non-decreasing");
  // split back
  std::vector<int> offset(graphs.size() + 1, 0);
  for (std::size_t i = 0; i < graphs.size(); ++i)
    offset[i + 1] = offset[i] + graphs[i].n;
  std::vector<std::vector<std::pair<int, int>>> back(graphs.size());
  for (auto [u, v] : b.edges) {
    int gi = b.indicator[static_cast<std::size_t>(u)];
    expect(gi == b.indicator[static_cast<std::size_t>(v)],
           "batched edge crosses graphs");
    back[static_cast<std::size_t>(gi)].emplace_back(u - offset[gi], v - offset[gi]);
  }
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    std::vector<std::pair<int, int>> want = graphs[i].edges;
    std::sort(want.begin(), want.end());
    std::sort(back[i].begin(), back[i].end());
    expect(back[i] == want, "per-graph edges must survive the round trip");
  }
  detail << "6-graph disjoint union splits back exactly";
}

void check_augment_determinism(std::ostringstream& detail) {
  Rng rng(119);
  Graph g = random_graph(rng, 10, 0.4, 3);
  for (AugmentKind k : {AugmentKind::NodeDrop, AugmentKind::EdgePerturb,
                        AugmentKind::AttrMask}) {
    AugmentConfig cfg{k, 0.3};
    Rng r1 = Rng::stream(42, "aug-test", 0);
    Rng r2 = Rng::stream(42, "aug-test", 0);
    Graph h1 = augment(g, cfg, r1);
    Graph h2 = augment(g, cfg, r2);
    expect(h1.n == h2.n && h1.edges == h2.edges && h1.x.data == h2.x.data,
           "same-seed augmentation must be bit-identical");
  }
  detail << "same-seed draws reproduce bit-for-bit";
}

// --------------------------------------------------------------- encoder --

Encoder tiny_encoder(Rng& rng, std::size_t f_in, std::size_t width,
                     std::size_t depth) {
  SplineGrid g = make_grid();
  std::vector<std::size_t> hidden(depth, width);
  return make_encoder(f_in, hidden, {width}, HeadKind::Kan, Pool::Add, g, rng,
                      0.5);
}

void check_encoder_permutation(std::ostringstream& detail) {
  Rng rng(120);
  Encoder enc = tiny_encoder(rng, 3, 5, 2);
  Graph g = random_graph(rng, 8, 0.4, 3);

  std::vector<int> perm(8);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  Graph gp;
  gp.n = g.n;
  gp.x = Mat(8, 3);
  for (int i = 0; i < 8; ++i)
    for (std::size_t c = 0; c < 3; ++c)
      gp.x(static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]), c) =
          g.x(static_cast<std::size_t>(i), c);
  for (auto [u, v] : g.edges) {
    int pu = perm[static_cast<std::size_t>(u)];
    int pv = perm[static_cast<std::size_t>(v)];
    if (pu > pv) std::swap(pu, pv);
    gp.edges.emplace_back(pu, pv);
  }
  std::sort(gp.edges.begin(), gp.edges.end());

  Mat z1 = encoder_forward(enc, make_batch({g}));
  Mat z2 = encoder_forward(enc, make_batch({gp}));
  expect(max_abs_diff(z1, z2) <= 1e-10,
         "pooled embedding must be isomorphism invariant, diff " +
             fmt(max_abs_diff(z1, z2)));
  detail << "relabeled graph embeds identically within 1e-10";
}

void check_encoder_batch_independence(std::ostringstream& detail) {
  Rng rng(121);
  Encoder enc = tiny_encoder(rng, 3, 5, 2);
  std::vector<Graph> graphs;
  for (int i = 0; i < 4; ++i)
    graphs.push_back(random_graph(rng, 4 + static_cast<int>(rng.uniform_below(4)),
                                  0.5, 3));
  Mat z_all = encoder_forward(enc, make_batch(graphs));
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    Mat z_single = encoder_forward(enc, make_batch({graphs[i]}));
    for (std::size_t c = 0; c < z_all.cols; ++c)
      expect(std::fabs(z_all(i, c) - z_single(0, c)) <= 1e-12,
             "batching must not change a graph's embedding");
  }
  detail << "4 graphs, alone vs batched within 1e-12";
}

void check_encoder_gradient(std::ostringstream& detail) {
  Rng rng(122);
  Encoder enc = tiny_encoder(rng, 3, 4, 3);
  std::vector<Graph> graphs;
  for (int i = 0; i < 4; ++i)
    graphs.push_back(random_graph(rng, 3 + static_cast<int>(rng.uniform_below(3)),
                                  0.5, 3));
  GraphBatch batch = make_batch(graphs);
  Mat wts = random_mat(rng, graphs.size(), 4);

  auto loss = [&]() {
    Mat z = encoder_forward(enc, batch);
    double s = 0.0;
    for (std::size_t i = 0; i < z.data.size(); ++i) s += z.data[i] * wts.data[i];
    return s;
  };

  EncoderCache cache;
  encoder_forward(enc, batch, &cache);
  EncoderGrads grads;
  encoder_backward(enc, cache, wts, grads);

  double worst = 0.0;
  for (std::size_t l = 0; l < enc.layers.size(); ++l)
    for (std::size_t i = 0; i < enc.layers[l].coeff.data.size(); ++i) {
      double fd = fd_central(loss, enc.layers[l].coeff.data[i], 1e-5);
      double an = grads.layers[l].coeff.data[i];
      expect(close_rel(an, fd, 1e-4, 1e-8),
             "encoder gradient mismatch, layer " + std::to_string(l));
      worst = std::max(worst, std::fabs(an - fd));
    }
  detail << "3-layer encoder, every coefficient, worst abs diff " << fmt(worst);
}

// ---------------------------------------------------------------- losses --

void check_ntxent_structure(std::ostringstream& detail) {
  Rng rng(123);
  Mat v = random_mat(rng, 8, 5);
  double base = ntxent_loss(v, 0.2).value;

  // swapping the two views of each pair leaves the loss unchanged
  Mat sw(8, 5);
  for (std::size_t p = 0; p < 4; ++p)
    for (std::size_t c = 0; c < 5; ++c) {
      sw(2 * p, c) = v(2 * p + 1, c);
      sw(2 * p + 1, c) = v(2 * p, c);
    }
  expect(std::fabs(ntxent_loss(sw, 0.2).value - base) <= 1e-12,
         "view-swap symmetry violated");

  // orthogonal transform of all rows preserves cosine similarities
  Mat q = svd(random_mat(rng, 5, 5)).U;
  expect(std::fabs(ntxent_loss(matmul(v, q), 0.2).value - base) <= 1e-10,
         "orthogonal invariance violated");

  // positive rescaling of one row
  Mat sc = v;
  for (std::size_t c = 0; c < 5; ++c) sc(3, c) *= 7.0;
  expect(std::fabs(ntxent_loss(sc, 0.2).value - base) <= 1e-10,
         "scale invariance violated");

  // single pair: only the positive appears in the denominator
  Mat two = random_mat(rng, 2, 5);
  expect(std::fabs(ntxent_loss(two, 0.2).value) <= 1e-12,
         "single-pair loss must vanish");

  // finite differences on the analytic gradient
  LossResult lr = ntxent_loss(v, 0.2);
  double worst = 0.0;
  auto loss = [&]() { return ntxent_loss(v, 0.2).value; };
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    double fd = fd_central(loss, v.data[i], 1e-6);
    expect(close_rel(lr.d_v.data[i], fd, 1e-4, 1e-8), "ntxent gradient mismatch");
    worst = std::max(worst, std::fabs(lr.d_v.data[i] - fd));
  }
  detail << "symmetries, degenerate pair, gradient (worst abs diff " << fmt(worst)
         << ")";
}

void check_stop_gradient(std::ostringstream& detail) {
  Rng rng(124);
  Mat v = random_mat(rng, 6, 4);
  Mat vh = random_mat(rng, 6, 4);
  LossResult lr = hard_negative_loss(v, vh);

  auto loss = [&]() { return hard_negative_loss(v, vh).value; };
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    double fd = fd_central(loss, v.data[i], 1e-6);
    expect(close_rel(lr.d_v.data[i], fd, 1e-4, 1e-8),
           "hard-negative gradient mismatch");
  }
  // perturbing the frozen branch changes the value but the implementation
  // exposes no gradient path for it
  double before = lr.value;
  vh(2, 1) += 0.37;
  double after = hard_negative_loss(v, vh).value;
  expect(std::fabs(after - before) > 1e-9,
         "the frozen branch must still affect the value");

  // identical branches: value exactly 1, gradient exactly zero
  LossResult same = hard_negative_loss(v, v);
  expect(std::fabs(same.value - 1.0) <= 1e-12, "self-similarity must be 1");
  expect(frob_norm(same.d_v) == 0.0,
         "gradient must vanish exactly when the branches coincide");
  detail << "gradient matches fd; frozen branch affects value only";
}

void check_sign_symmetry(std::ostringstream& detail) {
  TrainConfig cfg;
  std::vector<double> delta = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> rho = {1.0, 0.75, 0.5, 0.25, 0.0};
  Rng rng = Rng::stream(7, "sign-symmetry");
  const int draws = 100000;
  std::vector<int> pos_d(5, 0), pos_r(5, 0);
  std::vector<double> abs_d(5, 0.0);
  for (int it = 0; it < draws; ++it) {
    PerturbationPair p = sample_perturbations(delta, rho, cfg, rng);
    for (std::size_t i = 0; i < 5; ++i) {
      if (p.p_delta[i] > 0.0) ++pos_d[i];
      if (p.p_rho[i] > 0.0) ++pos_r[i];
      abs_d[i] += std::fabs(p.p_delta[i]);
    }
  }
  for (std::size_t i = 0; i < 5; ++i) {
    double fd = static_cast<double>(pos_d[i]) / draws;
    double fr = static_cast<double>(pos_r[i]) / draws;
    expect(fd >= 0.494 && fd <= 0.506, "sign balance off for delta coord " +
                                           std::to_string(i) + ": " + fmt(fd));
    expect(fr >= 0.494 && fr <= 0.506, "sign balance off for rho coord " +
                                           std::to_string(i) + ": " + fmt(fr));
  }
  // folded-normal mean oracle: E|N(m, s^2)| for m = eps * delta_i, s = sigma
  for (std::size_t i = 0; i < 5; ++i) {
    double m = cfg.eps_delta * delta[i];
    double s = cfg.sigma_delta;
    double expct = s * std::sqrt(2.0 / 3.14159265358979323846) *
                       std::exp(-m * m / (2.0 * s * s)) +
                   m * std::erf(m / (s * std::sqrt(2.0)));
    double got = abs_d[i] / draws;
    expect(std::fabs(got - expct) <= 0.02 * std::max(expct, 1e-12),
           "folded-normal mean off at coord " + std::to_string(i) + ": got " +
               fmt(got) + " want " + fmt(expct));
  }
  detail << "100000 draws, balance and folded-normal mean within bounds";
}

void check_monotone_scale(std::ostringstream& detail) {
  TrainConfig cfg;
  std::vector<double> delta = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> rho(5, 0.0);
  Rng rng = Rng::stream(8, "monotone");
  const int draws = 100000;
  std::vector<double> mean_abs(5, 0.0);
  for (int it = 0; it < draws; ++it) {
    PerturbationPair p = sample_perturbations(delta, rho, cfg, rng);
    for (std::size_t i = 0; i < 5; ++i) mean_abs[i] += std::fabs(p.p_delta[i]);
  }
  for (double& v : mean_abs) v /= draws;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j)
      if (delta[j] - delta[i] >= 0.2)
        expect(mean_abs[j] > mean_abs[i],
               "larger scores must yield larger expected magnitudes");
  detail << "expected |p| ordering follows the scores";
}

void check_pipeline_gradient(std::ostringstream& detail) {
  Rng rng(125);
  Encoder enc = tiny_encoder(rng, 3, 4, 2);
  std::vector<Graph> v1, v2;
  for (int i = 0; i < 3; ++i) {
    v1.push_back(random_graph(rng, 4, 0.5, 3));
    v2.push_back(random_graph(rng, 4, 0.5, 3));
  }
  GraphBatch b1 = make_batch(v1);
  GraphBatch b2 = make_batch(v2);
  double tau = 0.2;

  // Frozen hard negatives: the stop-gradient branch is evaluated once at
  // the base point and held fixed for both the analytic and fd paths.
  Mat z1_base = encoder_forward(enc, b1);
  Mat z2_base = encoder_forward(enc, b2);
  Rng prng = Rng::stream(9, "pipeline-perturb");
  auto jitter = [&](const Mat& z) {
    Mat out = z;
    for (double& x : out.data) x += prng.normal(0.0, 0.05);
    return out;
  };
  Mat vh1 = head_forward(enc, jitter(z1_base));
  Mat vh2 = head_forward(enc, jitter(z2_base));
  Mat vh(vh1.rows * 2, vh1.cols);
  for (std::size_t r = 0; r < vh1.rows; ++r)
    for (std::size_t c = 0; c < vh1.cols; ++c) {
      vh(2 * r, c) = vh1(r, c);
      vh(2 * r + 1, c) = vh2(r, c);
    }

  auto loss = [&]() {
    Mat z1 = encoder_forward(enc, b1);
    Mat z2 = encoder_forward(enc, b2);
    Mat p1 = head_forward(enc, z1);
    Mat p2 = head_forward(enc, z2);
    Mat v(p1.rows * 2, p1.cols);
    for (std::size_t r = 0; r < p1.rows; ++r)
      for (std::size_t c = 0; c < p1.cols; ++c) {
        v(2 * r, c) = p1(r, c);
        v(2 * r + 1, c) = p2(r, c);
      }
    return ntxent_loss(v, tau).value + hard_negative_loss(v, vh).value;
  };

  // analytic gradient
  EncoderCache c1, c2;
  Mat z1 = encoder_forward(enc, b1, &c1);
  Mat z2 = encoder_forward(enc, b2, &c2);
  HeadCache h1, h2;
  Mat p1 = head_forward(enc, z1, &h1);
  Mat p2 = head_forward(enc, z2, &h2);
  Mat v(p1.rows * 2, p1.cols);
  for (std::size_t r = 0; r < p1.rows; ++r)
    for (std::size_t c = 0; c < p1.cols; ++c) {
      v(2 * r, c) = p1(r, c);
      v(2 * r + 1, c) = p2(r, c);
    }
  LossResult cl = ntxent_loss(v, tau);
  LossResult hn = hard_negative_loss(v, vh);
  Mat dv1(p1.rows, p1.cols), dv2(p1.rows, p1.cols);
  for (std::size_t r = 0; r < p1.rows; ++r)
    for (std::size_t c = 0; c < p1.cols; ++c) {
      dv1(r, c) = cl.d_v(2 * r, c) + hn.d_v(2 * r, c);
      dv2(r, c) = cl.d_v(2 * r + 1, c) + hn.d_v(2 * r + 1, c);
    }
  HeadGrads hg;
  Mat dz1 = head_backward(enc, h1, dv1, hg);
  Mat dz2 = head_backward(enc, h2, dv2, hg);
  EncoderGrads eg;
  encoder_backward(enc, c1, dz1, eg);
  encoder_backward(enc, c2, dz2, eg);

  double worst = 0.0;
  auto check_block = [&](double* data, const double* an, std::size_t size,
                         const char* what) {
    for (std::size_t i = 0; i < size; ++i) {
      double fd = fd_central(loss, data[i], 1e-5);
      expect(close_rel(an[i], fd, 1e-4, 1e-8),
             std::string("pipeline gradient mismatch in ") + what);
      worst = std::max(worst, std::fabs(an[i] - fd));
    }
  };
  for (std::size_t l = 0; l < enc.layers.size(); ++l)
    check_block(enc.layers[l].coeff.data.data(), eg.layers[l].coeff.data.data(),
                enc.layers[l].coeff.data.size(), "encoder layer");
  for (std::size_t l = 0; l < enc.head_kan.size(); ++l)
    check_block(enc.head_kan[l].coeff.data.data(), hg.kan[l].coeff.data.data(),
                enc.head_kan[l].coeff.data.size(), "head layer");
  detail << "every parameter, worst abs diff " << fmt(worst);
}

const Check kChecks[] = {
    {"tensor.fold_roundtrip", check_fold_roundtrip},
    {"tensor.mode_product", check_mode_product},
    {"tensor.svd", check_svd},
    {"tensor.hosvd", check_hosvd},
    {"tensor.determinism", check_tensor_determinism},
    {"bspline.partition_of_unity", check_partition_of_unity},
    {"bspline.variance_bound", check_variance_bound},
    {"bspline.variance_rowsum_bound", check_variance_rowsum_bound},
    {"bspline.support", check_support},
    {"bspline.deriv_fd", check_deriv_fd},
    {"kan.linearity", check_kan_linearity},
    {"kan.output_span", check_kan_output_span},
    {"kan.gradient_fd", check_kan_gradient},
    {"kan.permutation", check_kan_permutation},
    {"ckfi.delta_oracle", check_ckfi_oracle},
    {"ckfi.planted_dependency", check_ckfi_planted},
    {"ckfi.scaling", check_ckfi_scaling},
    {"ckfi.normalize_order", check_normalize_order},
    {"graph.augment_invariants", check_augment_invariants},
    {"graph.batch_roundtrip", check_batch_roundtrip},
    {"graph.augment_determinism", check_augment_determinism},
    {"encoder.permutation_invariance", check_encoder_permutation},
    {"encoder.batch_independence", check_encoder_batch_independence},
    {"encoder.gradient_fd", check_encoder_gradient},
    {"loss.ntxent_structure", check_ntxent_structure},
    {"loss.stop_gradient", check_stop_gradient},
    {"perturb.sign_symmetry", check_sign_symmetry},
    {"perturb.monotone_scale", check_monotone_scale},
    {"train.pipeline_gradient", check_pipeline_gradient},
};

}  // namespace

std::vector<std::string> selfcheck_names() {
  std::vector<std::string> names;
  for (const auto& c : kChecks) names.emplace_back(c.name);
  return names;
}

std::vector<CheckResult> run_selfchecks(const std::string& filter) {
  std::vector<CheckResult> results;
  for (const auto& c : kChecks) {
    if (!filter.empty() && std::string(c.name).find(filter) == std::string::npos)
      continue;
    CheckResult r;
    r.name = c.name;
    std::ostringstream detail;
    try {
      c.body(detail);
      r.passed = true;
      r.detail = detail.str();
    } catch (const CheckFail& f) {
      r.passed = false;
      r.detail = f.message;
    } catch (const Error& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace khan
