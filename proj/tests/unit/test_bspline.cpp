// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "core/bspline.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"

using namespace khan;

namespace {

// 5-point Gauss-Legendre on [lo, hi]; exact for polynomials of degree <= 9,
// so exact (up to rounding) for products of two cubics. Independent of the
// Simpson code under test.
double gauss5(const std::function<double(double)>& f, double lo, double hi) {
  static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static const double ws[5] = {0.2369268850561891, 0.4786286704993665,
                               0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int i = 0; i < 5; ++i) acc += ws[i] * f(mid + half * xs[i]);
  return acc * half;
}

double gauss5_cells(const std::function<double(double)>& f, double lo,
                    double hi, int cells) {
  double acc = 0.0;
  for (int c = 0; c < cells; ++c) {
    double a = lo + (hi - lo) * c / cells;
    double b = lo + (hi - lo) * (c + 1) / cells;
    acc += gauss5(f, a, b);
  }
  return acc;
}

}  // namespace

TEST_SUITE("bspline") {

TEST_CASE("grid construction") {
  SplineGrid g = make_grid(-1.0, 1.0, 5, 3);
  CHECK(g.basis_count() == 8);
  CHECK(g.knots.size() == 12);  // intervals + 2 * degree + 1
  CHECK(g.cell_width() == doctest::Approx(0.4));
  CHECK(g.knots.front() == doctest::Approx(-1.0 - 3 * 0.4));
  CHECK(g.knots.back() == doctest::Approx(1.0 + 3 * 0.4));
  for (std::size_t i = 1; i < g.knots.size(); ++i)
    CHECK(g.knots[i] - g.knots[i - 1] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_THROWS_AS(make_grid(1.0, -1.0), Error);
  CHECK_THROWS_AS(make_grid(-1.0, 1.0, 0), Error);
}

TEST_CASE("partition of unity and non-negativity across the domain") {
  SplineGrid g = make_grid();
  for (int i = 0; i <= 1000; ++i) {
    double x = -1.0 + 2.0 * i / 1000.0;
    auto v = basis_eval(g, x);
    double sum = 0.0;
    for (double e : v) {
      CHECK(e >= 0.0);
      sum += e;
    }
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("known cubic values at a cell midpoint") {
  // With uniform knots the cubic basis at the middle of its central cell
  // takes the classic values (1/48, 23/48, 23/48, 1/48) for the four
  // active functions.
  SplineGrid g = make_grid();
  double h = g.cell_width();
  double x = -1.0 + 2.5 * h;  // midpoint of the third cell
  auto v = basis_eval(g, x);
  std::vector<double> active;
  for (double e : v)
    if (e > 1e-14) active.push_back(e);
  REQUIRE(active.size() == 4);
  CHECK(active[0] == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
  CHECK(active[1] == doctest::Approx(23.0 / 48.0).epsilon(1e-12));
  CHECK(active[2] == doctest::Approx(23.0 / 48.0).epsilon(1e-12));
  CHECK(active[3] == doctest::Approx(1.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("knot values of the uniform cubic are the 1/6, 4/6 pattern") {
  SplineGrid g = make_grid();
  double h = g.cell_width();
  double x = -1.0 + 2.0 * h;  // interior knot
  auto v = basis_eval(g, x);
  std::vector<double> active;
  for (double e : v)
    if (e > 1e-14) active.push_back(e);
  REQUIRE(active.size() == 3);
  CHECK(active[0] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  CHECK(active[1] == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK(active[2] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("inputs outside the domain clamp to the endpoints") {
  SplineGrid g = make_grid();
  CHECK(basis_eval(g, -5.0) == basis_eval(g, -1.0));
  CHECK(basis_eval(g, 5.0) == basis_eval(g, 1.0));
  auto d = basis_deriv(g, 5.0);
  for (double e : d) CHECK(e == 0.0);
}

TEST_CASE("derivatives match central differences and sum to zero") {
  SplineGrid g = make_grid();
  for (int i = 0; i < 200; ++i) {
    double x = -0.99 + 1.98 * i / 199.0;
    auto d = basis_deriv(g, x);
    auto up = basis_eval(g, x + 1e-6);
    auto dn = basis_eval(g, x - 1e-6);
    double sum = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      CHECK(std::fabs(d[k] - (up[k] - dn[k]) / 2e-6) <= 1e-6);
      sum += d[k];
    }
    CHECK(std::fabs(sum) <= 1e-10);
  }
}

TEST_CASE("spline_eval reproduces constants and spline_variance kills them") {
  SplineGrid g = make_grid();
  std::vector<double> c(g.basis_count(), 3.7);
  for (int i = 0; i <= 100; ++i) {
    double x = -1.0 + 2.0 * i / 100.0;
    CHECK(spline_eval(g, c, x) == doctest::Approx(3.7).epsilon(1e-12));
  }
  CHECK(spline_variance(g, c) <= 1e-12);
}

TEST_CASE("simpson integrates cubics exactly and converges on sin") {
  auto cubic = [](double x) { return x * x * x - 2 * x + 1; };
  // integral over [0, 2] = 4 - 4 + 2 = 2
  CHECK(integrate_simpson(cubic, 0.0, 2.0, 2) == doctest::Approx(2.0).epsilon(1e-14));
  auto s = [](double x) { return std::sin(x); };
  CHECK(integrate_simpson(s, 0.0, 3.141592653589793, 256) ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("spline_variance agrees with an independent quadrature") {
  SplineGrid g = make_grid();
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> c(g.basis_count());
    for (double& e : c) e = rng.normal(0.0, 1.0);
    double got = spline_variance(g, c);
    auto phi = [&](double x) { return spline_eval(g, c, x); };
    double len = 2.0;
    double mean = gauss5_cells(phi, -1.0, 1.0, 5) / len;
    auto sq = [&](double x) { return (phi(x) - mean) * (phi(x) - mean); };
    double want = gauss5_cells(sq, -1.0, 1.0, 5);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("overlap integrals match their closed forms") {
  // For a uniform cubic B-spline with cell width h the self- and
  // cross-products integrate to h * (151/315, 397/1680, 1/42, 1/5040).
  SplineGrid g = make_grid();
  double h = g.cell_width();
  auto m = basis_l2_products(g);
  CHECK(m[0] == doctest::Approx(h * 151.0 / 315.0).epsilon(1e-10));
  CHECK(m[1] == doctest::Approx(h * 397.0 / 1680.0).epsilon(1e-10));
  CHECK(m[2] == doctest::Approx(h * 1.0 / 42.0).epsilon(1e-10));
  CHECK(m[3] == doctest::Approx(h * 1.0 / 5040.0).epsilon(1e-10));
}

TEST_CASE("overlap integrals match Gauss-Legendre directly") {
  SplineGrid g = make_grid(-1.0, 1.0, 8, 3);  // more room, same conclusion
  auto m = basis_l2_products(g);
  std::size_t i0 = g.degree;  // interior basis, full support inside [a, b]
  for (std::size_t d = 0; d <= 3; ++d) {
    auto f = [&](double x) {
      auto v = basis_eval(g, x);
      return v[i0] * v[i0 + d];
    };
    double want = gauss5_cells(f, g.a, g.b, 64);
    CHECK(m[d] == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("bases four apart have disjoint support") {
  SplineGrid g = make_grid(-1.0, 1.0, 8, 3);
  std::size_t i0 = g.degree;
  auto f = [&](double x) {
    auto v = basis_eval(g, x);
    return v[i0] * v[i0 + 4];
  };
  CHECK(std::fabs(gauss5_cells(f, g.a, g.b, 64)) <= 1e-15);
}

TEST_CASE("overlap integrals scale linearly with the cell width") {
  auto m1 = basis_l2_products(make_grid(-1.0, 1.0, 5, 3));
  auto m2 = basis_l2_products(make_grid(-2.0, 2.0, 5, 3));  // h doubles
  for (std::size_t d = 0; d <= 3; ++d)
    CHECK(m2[d] == doctest::Approx(2.0 * m1[d]).epsilon(1e-10));
}

TEST_CASE("coeff_variance is the population variance") {
  std::vector<double> c = {1.0, 2.0, 3.0, 4.0};
  CHECK(coeff_variance(c) == doctest::Approx(1.25).epsilon(1e-15));
  std::vector<double> one = {5.0};
  CHECK(coeff_variance(one) == 0.0);
}

TEST_CASE("boundary self-product is smaller than the interior one") {
  // Near the ends part of the bump lies outside [a, b], so the truncated
  // self-product must drop below the interior closed-form value. Measured
  // here, not asserted against any claimed constant.
  SplineGrid g = make_grid();
  auto m = basis_l2_products(g);
  auto first = [&](double x) {
    auto v = basis_eval(g, x);
    return v[0] * v[0];
  };
  double boundary = gauss5_cells(first, g.a, g.b, 64);
  CHECK(boundary < m[0]);
  MESSAGE("interior self-product ", m[0], ", boundary self-product ", boundary,
          " (ratio ", boundary / m[0], ")");
}

}  // TEST_SUITE bspline
