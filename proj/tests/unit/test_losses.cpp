// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <vector>

#include "core/error.hpp"
#include "core/losses.hpp"
#include "core/rng.hpp"

using namespace khan;

namespace {

Mat random_mat(Rng& rng, std::size_t r, std::size_t c) {
  Mat m(r, c);
  for (double& v : m.data) v = rng.normal(0.0, 1.0);
  return m;
}

double cos_ref(const std::vector<double>& u, const std::vector<double>& v) {
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return uv / (std::sqrt(uu) * std::sqrt(vv));
}

// Direct transliteration of the contrastive loss definition, evaluated with
// plain exp sums (safe at this scale), as an oracle for the implementation.
double ntxent_ref(const Mat& v, double tau) {
  std::size_t n = v.rows;
  auto sim = [&](std::size_t a, std::size_t b) {
    std::vector<double> x(v.data.begin() + static_cast<long>(a * v.cols),
                          v.data.begin() + static_cast<long>((a + 1) * v.cols));
    std::vector<double> y(v.data.begin() + static_cast<long>(b * v.cols),
                          v.data.begin() + static_cast<long>((b + 1) * v.cols));
    return cos_ref(x, y);
  };
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t partner = (a % 2 == 0) ? a + 1 : a - 1;
    double num = std::exp(sim(a, partner) / tau);
    double den = 0.0;
    for (std::size_t b = 0; b < n; ++b)
      if (b != a) den += std::exp(sim(a, b) / tau);
    total += -std::log(num / den);
  }
  return total / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("cosine similarity on known vectors") {
  std::vector<double> a = {1, 0, 0}, b = {0, 1, 0}, c = {1, 1, 0};
  CHECK(cosine_sim(a.data(), a.data(), 3) == doctest::Approx(1.0));
  CHECK(cosine_sim(a.data(), b.data(), 3) == doctest::Approx(0.0));
  CHECK(cosine_sim(a.data(), c.data(), 3) ==
        doctest::Approx(1.0 / std::sqrt(2.0)));
  std::vector<double> z = {0, 0, 0};
  bool degenerate = false;
  CHECK(cosine_sim(a.data(), z.data(), 3, &degenerate) == 0.0);
  CHECK(degenerate);
}

TEST_CASE("cosine gradient is orthogonal to u and matches fd") {
  Rng rng(81);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> u(5), v(5), grad(5);
    for (auto* vec : {&u, &v})
      for (double& e : *vec) e = rng.normal(0.0, 1.0);
    cosine_sim_grad(u.data(), v.data(), 5, grad.data());
    double dot = 0.0;
    for (std::size_t i = 0; i < 5; ++i) dot += grad[i] * u[i];
    CHECK(std::fabs(dot) <= 1e-12);  // sim is scale-free in u
    for (std::size_t i = 0; i < 5; ++i) {
      double keep = u[i];
      u[i] = keep + 1e-6;
      double up = cosine_sim(u.data(), v.data(), 5);
      u[i] = keep - 1e-6;
      double dn = cosine_sim(u.data(), v.data(), 5);
      u[i] = keep;
      CHECK(std::fabs(grad[i] - (up - dn) / 2e-6) <= 1e-6);
    }
  }
}

TEST_CASE("gradient at identical vectors is exactly zero") {
  std::vector<double> u = {0.3, -0.7, 0.2}, grad(3, 1.0);
  cosine_sim_grad(u.data(), u.data(), 3, grad.data());
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("contrastive loss matches a direct transliteration") {
  Rng rng(82);
  for (std::size_t pairs : {2, 3, 5}) {
    Mat v = random_mat(rng, 2 * pairs, 6);
    LossResult lr = ntxent_loss(v, 0.2);
    CHECK(lr.value == doctest::Approx(ntxent_ref(v, 0.2)).epsilon(1e-10));
  }
}

TEST_CASE("single pair gives exactly zero loss") {
  Rng rng(83);
  Mat v = random_mat(rng, 2, 4);
  CHECK(ntxent_loss(v, 0.5).value == 0.0);
}

TEST_CASE("perfect alignment against orthogonal negatives is near zero") {
  // two pairs: views identical within a pair, orthogonal across pairs
  Mat v(4, 2);
  v.data = {1, 0, 1, 0, 0, 1, 0, 1};
  double tau = 0.05;
  double loss = ntxent_loss(v, tau).value;
  // denominator has the positive (sim 1) and two negatives (sim 0):
  // -log(e^{1/tau} / (e^{1/tau} + 2)) per anchor
  double want = -std::log(std::exp(1.0 / tau) / (std::exp(1.0 / tau) + 2.0));
  CHECK(loss == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("contrastive gradient matches finite differences") {
  Rng rng(84);
  Mat v = random_mat(rng, 6, 4);
  LossResult lr = ntxent_loss(v, 0.2);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    double keep = v.data[i];
    v.data[i] = keep + 1e-6;
    double up = ntxent_loss(v, 0.2).value;
    v.data[i] = keep - 1e-6;
    double dn = ntxent_loss(v, 0.2).value;
    v.data[i] = keep;
    double fd = (up - dn) / 2e-6;
    CHECK(std::fabs(lr.d_v.data[i] - fd) <=
          1e-4 * std::max(std::fabs(fd), 1.0) + 1e-8);
  }
}

TEST_CASE("loss rejects bad shapes and temperatures") {
  Rng rng(85);
  CHECK_THROWS_AS(ntxent_loss(random_mat(rng, 3, 4), 0.2), Error);  // odd rows
  CHECK_THROWS_AS(ntxent_loss(random_mat(rng, 0, 4), 0.2), Error);
  CHECK_THROWS_AS(ntxent_loss(random_mat(rng, 4, 4), 0.0), Error);
  CHECK_THROWS_AS(ntxent_loss(random_mat(rng, 4, 4), -1.0), Error);
}

TEST_CASE("hard-negative penalty averages row similarities") {
  Mat v(2, 2), vh(2, 2);
  v.data = {1, 0, 0, 1};
  vh.data = {1, 0, 1, 0};  // row 0 aligned, row 1 orthogonal
  LossResult lr = hard_negative_loss(v, vh);
  CHECK(lr.value == doctest::Approx(0.5));
}

TEST_CASE("hard-negative gradient flows only through the live branch") {
  Rng rng(86);
  Mat v = random_mat(rng, 4, 5);
  Mat vh = random_mat(rng, 4, 5);
  LossResult lr = hard_negative_loss(v, vh);
  for (std::size_t i = 0; i < v.data.size(); ++i) {
    double keep = v.data[i];
    v.data[i] = keep + 1e-6;
    double up = hard_negative_loss(v, vh).value;
    v.data[i] = keep - 1e-6;
    double dn = hard_negative_loss(v, vh).value;
    v.data[i] = keep;
    CHECK(std::fabs(lr.d_v.data[i] - (up - dn) / 2e-6) <= 1e-6);
  }
  CHECK(lr.d_v.rows == 4);
  // identical branches: value 1, gradient identically zero
  LossResult same = hard_negative_loss(v, v);
  CHECK(same.value == doctest::Approx(1.0).epsilon(1e-14));
  for (double g : same.d_v.data) CHECK(g == 0.0);
}

TEST_CASE("hard-negative loss requires matching shapes") {
  Rng rng(87);
  CHECK_THROWS_AS(
      hard_negative_loss(random_mat(rng, 4, 5), random_mat(rng, 3, 5)), Error);
  CHECK_THROWS_AS(
      hard_negative_loss(random_mat(rng, 4, 5), random_mat(rng, 4, 6)), Error);
}

}  // TEST_SUITE losses
