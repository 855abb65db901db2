// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/hosvd.hpp"
#include "core/mat.hpp"
#include "core/rng.hpp"
#include "core/svd.hpp"
#include "core/tensor3.hpp"

using namespace khan;

namespace {

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

// Entry-by-entry mode product, the slow reference the fast path must match.
Tensor3 mode_product_naive(const Tensor3& t, const Mat& m, int mode) {
  std::size_t d1 = mode == 1 ? m.rows : t.d1;
  std::size_t d2 = mode == 2 ? m.rows : t.d2;
  std::size_t d3 = mode == 3 ? m.rows : t.d3;
  Tensor3 out(d1, d2, d3);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j)
      for (std::size_t k = 0; k < d3; ++k) {
        double acc = 0.0;
        if (mode == 1)
          for (std::size_t s = 0; s < t.d1; ++s) acc += m(i, s) * t(s, j, k);
        else if (mode == 2)
          for (std::size_t s = 0; s < t.d2; ++s) acc += m(j, s) * t(i, s, k);
        else
          for (std::size_t s = 0; s < t.d3; ++s) acc += m(k, s) * t(i, j, s);
        out(i, j, k) = acc;
      }
  return out;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("matmul matches a hand-computed product") {
  Mat a(2, 3);
  a.data = {1, 2, 3, 4, 5, 6};
  Mat b(3, 2);
  b.data = {7, 8, 9, 10, 11, 12};
  Mat c = matmul(a, b);
  CHECK(c.rows == 2);
  CHECK(c.cols == 2);
  CHECK(c(0, 0) == doctest::Approx(58));
  CHECK(c(0, 1) == doctest::Approx(64));
  CHECK(c(1, 0) == doctest::Approx(139));
  CHECK(c(1, 1) == doctest::Approx(154));
  CHECK_THROWS_AS(matmul(a, a), Error);
}

TEST_CASE("solve_linear inverts a known system and flags singular input") {
  Mat a(2, 2);
  a.data = {2, 1, 1, 3};
  std::vector<double> rhs = {5, 10};
  std::vector<double> x = solve_linear(a, rhs);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(3.0));
  Mat sing(2, 2);
  sing.data = {1, 2, 2, 4};
  CHECK_THROWS_AS(solve_linear(sing, rhs), Error);
}

TEST_CASE("unfolding layouts are the documented ones") {
  Tensor3 t(2, 3, 2);
  std::iota(t.data.begin(), t.data.end(), 0.0);  // t(i,j,k) = 4i + 2j + k
  Mat m1 = unfold(t, 1);
  CHECK(m1.rows == 2);
  CHECK(m1.cols == 6);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 2; ++k) CHECK(m1(i, j * 2 + k) == t(i, j, k));
  Mat m2 = unfold(t, 2);
  CHECK(m2.rows == 3);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < 2; ++k) CHECK(m2(j, i * 2 + k) == t(i, j, k));
  Mat m3 = unfold(t, 3);
  CHECK(m3.rows == 2);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(m3(k, i * 3 + j) == t(i, j, k));
}

TEST_CASE("fold undoes unfold for every mode") {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    Tensor3 t = random_tensor(rng, 1 + rng.uniform_below(5),
                              1 + rng.uniform_below(5), 1 + rng.uniform_below(5));
    for (int mode = 1; mode <= 3; ++mode) {
      Tensor3 u = fold(unfold(t, mode), mode, t.dims());
      CHECK(u.data == t.data);
    }
  }
  Tensor3 t(2, 2, 2);
  CHECK_THROWS_AS(fold(Mat(3, 4), 1, t.dims()), Error);
}

TEST_CASE("mode product equals the naive contraction") {
  Rng rng(2);
  for (int mode = 1; mode <= 3; ++mode) {
    Tensor3 t = random_tensor(rng, 4, 3, 5);
    std::size_t e = mode == 1 ? t.d1 : mode == 2 ? t.d2 : t.d3;
    Mat m = random_mat(rng, 6, e);
    Tensor3 fast = mode_product(t, m, mode);
    Tensor3 slow = mode_product_naive(t, m, mode);
    CHECK(frob_dist(fast, slow) <= 1e-12 * std::max(1.0, frob_norm(slow)));
  }
}

}  // TEST_SUITE tensor

TEST_SUITE("svd") {

TEST_CASE("2x2 with known singular values") {
  // [[3, 0], [4, 5]]: gram eigenvalues 25 +- 20, singular values sqrt(45)
  // and sqrt(5)
  Mat a(2, 2);
  a.data = {3, 0, 4, 5};
  SvdResult s = svd(a);
  CHECK(s.S[0] == doctest::Approx(std::sqrt(45.0)).epsilon(1e-12));
  CHECK(s.S[1] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("orthonormal factors and exact reconstruction on random shapes") {
  Rng rng(3);
  for (int rep = 0; rep < 60; ++rep) {
    std::size_t m = 1 + rng.uniform_below(10);
    std::size_t n = 1 + rng.uniform_below(10);
    Mat a = random_mat(rng, m, n);
    SvdResult s = svd(a);
    std::size_t k = std::min(m, n);
    CHECK(max_abs_diff(matmul(transpose(s.U), s.U), Mat::identity(k)) <= 1e-10);
    CHECK(max_abs_diff(matmul(transpose(s.V), s.V), Mat::identity(k)) <= 1e-10);
    Mat us(m, k);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) us(i, j) = s.U(i, j) * s.S[j];
    CHECK(frob_norm(mat_sub(matmul(us, transpose(s.V)), a)) <=
          1e-10 * std::max(1.0, frob_norm(a)));
  }
}

TEST_CASE("zero matrix and rank-deficient matrix") {
  Mat z(3, 4);
  SvdResult s = svd(z);
  for (double v : s.S) CHECK(v == 0.0);
  CHECK(max_abs_diff(matmul(transpose(s.U), s.U), Mat::identity(3)) <= 1e-12);
  CHECK(numerical_rank(s.S) == 0);

  Rng rng(4);
  Mat a = random_mat(rng, 5, 3);
  for (std::size_t i = 0; i < 5; ++i) a(i, 2) = 2.0 * a(i, 0) - a(i, 1);
  SvdResult sd = svd(a);
  CHECK(sd.S[2] <= 1e-10 * sd.S[0]);
  CHECK(numerical_rank(sd.S) == 2);
}

TEST_CASE("orthogonal columns with known norms come back sorted") {
  // columns (0,0,5), (3,0,0) scaled: singular values must sort descending
  Mat a(3, 2);
  a.data = {0, 3, 0, 0, 5, 0};
  SvdResult s = svd(a);
  CHECK(s.S[0] == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(s.S[1] == doctest::Approx(3.0).epsilon(1e-12));
  // largest entry of each U column is non-negative
  for (std::size_t j = 0; j < 2; ++j) {
    double best = 0.0, val = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      if (std::fabs(s.U(i, j)) > best) {
        best = std::fabs(s.U(i, j));
        val = s.U(i, j);
      }
    CHECK(val >= 0.0);
  }
}

TEST_CASE("wide matrices go through the transpose path") {
  Rng rng(5);
  Mat a = random_mat(rng, 2, 7);
  SvdResult s = svd(a);
  CHECK(s.U.rows == 2);
  CHECK(s.V.rows == 7);
  Mat us(2, 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) us(i, j) = s.U(i, j) * s.S[j];
  CHECK(frob_norm(mat_sub(matmul(us, transpose(s.V)), a)) <= 1e-10);
}

}  // TEST_SUITE svd

TEST_SUITE("hosvd") {

TEST_CASE("full decomposition reconstructs exactly") {
  Rng rng(6);
  for (int rep = 0; rep < 30; ++rep) {
    Tensor3 t = random_tensor(rng, 1 + rng.uniform_below(8),
                              1 + rng.uniform_below(8), 1 + rng.uniform_below(8));
    TuckerResult d = hosvd(t);
    CHECK(frob_dist(tucker_reconstruct(d), t) <=
          1e-10 * std::max(1.0, frob_norm(t)));
  }
}

TEST_CASE("factor matrices have orthonormal columns") {
  Rng rng(7);
  Tensor3 t = random_tensor(rng, 5, 6, 4);
  TuckerResult d = hosvd(t);
  for (const Mat* u : {&d.U1, &d.U2, &d.U3})
    CHECK(max_abs_diff(matmul(transpose(*u), *u), Mat::identity(u->cols)) <=
          1e-10);
}

TEST_CASE("requested ranks bound the core and error decreases with rank") {
  Rng rng(8);
  Tensor3 t = random_tensor(rng, 6, 6, 6);
  double prev = 1e300;
  for (std::size_t r = 1; r <= 6; ++r) {
    TuckerResult d = hosvd(t, TuckerRanks{{r, r, r}});
    CHECK(d.core.d1 == r);
    CHECK(d.core.d2 == r);
    CHECK(d.core.d3 == r);
    double err = frob_dist(tucker_reconstruct(d), t);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
  CHECK(prev <= 1e-10 * frob_norm(t));  // full rank is exact
  CHECK_THROWS_AS(hosvd(t, TuckerRanks{{7, 1, 1}}), Error);
  CHECK_THROWS_AS(hosvd(t, TuckerRanks{{0, 1, 1}}), Error);
}

TEST_CASE("zero tensor decomposes without blowing up") {
  Tensor3 z(3, 4, 2);
  TuckerResult d = hosvd(z);
  CHECK(frob_norm(d.core) == 0.0);
  CHECK(frob_dist(tucker_reconstruct(d), z) == 0.0);
}

TEST_CASE("core energy equals tensor energy at full rank") {
  Rng rng(9);
  Tensor3 t = random_tensor(rng, 4, 5, 3);
  TuckerResult d = hosvd(t);
  CHECK(frob_norm(d.core) == doctest::Approx(frob_norm(t)).epsilon(1e-12));
}

}  // TEST_SUITE hosvd
