// SPDX-License-Identifier: Apache-2.0
#include "core/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace khan {

namespace {

// Global index of the knot span containing x (after clamping):
// knots[span] <= x <= knots[span + 1], restricted to the in-domain cells.
std::size_t find_span(const SplineGrid& g, double x) {
  double h = g.cell_width();
  double rel = (x - g.a) / h;
  auto cell = static_cast<long>(std::floor(rel));
  cell = std::clamp<long>(cell, 0, static_cast<long>(g.intervals) - 1);
  return g.degree + static_cast<std::size_t>(cell);
}

// Triangular Cox-de Boor evaluation: values of the deg + 1 basis functions
// of the given degree that are nonzero on the span. out[r] is basis
// span - deg + r. Valid for x anywhere in the closed span because the knot
// vector has no repeats, so every denominator is positive.
void span_basis(const SplineGrid& g, std::size_t span, std::size_t deg, double x,
                std::vector<double>& out) {
  out.assign(deg + 1, 0.0);
  std::vector<double> left(deg + 1), right(deg + 1);
  out[0] = 1.0;
  for (std::size_t j = 1; j <= deg; ++j) {
    left[j] = x - g.knots[span + 1 - j];
    right[j] = g.knots[span + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
}

}  // namespace

SplineGrid make_grid(double a, double b, std::size_t intervals,
                     std::size_t degree) {
  require(b > a, ErrorCode::InvalidArgument, "make_grid: requires b > a");
  require(intervals >= 1, ErrorCode::InvalidArgument,
          "make_grid: requires at least one interval");
  require(degree >= 1, ErrorCode::InvalidArgument,
          "make_grid: requires degree >= 1");
  SplineGrid g;
  g.a = a;
  g.b = b;
  g.intervals = intervals;
  g.degree = degree;
  double h = g.cell_width();
  std::size_t count = intervals + 2 * degree + 1;
  g.knots.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    g.knots[i] = a + (static_cast<double>(i) - static_cast<double>(degree)) * h;
  return g;
}

std::vector<double> basis_eval(const SplineGrid& grid, double x) {
  double xc = std::clamp(x, grid.a, grid.b);
  std::size_t span = find_span(grid, xc);
  std::vector<double> local;
  span_basis(grid, span, grid.degree, xc, local);
  std::vector<double> out(grid.basis_count(), 0.0);
  std::size_t first = span - grid.degree;
  for (std::size_t r = 0; r <= grid.degree; ++r) out[first + r] = local[r];
  return out;
}

std::vector<double> basis_deriv(const SplineGrid& grid, double x) {
  std::vector<double> out(grid.basis_count(), 0.0);
  if (x < grid.a || x > grid.b) return out;
  std::size_t span = find_span(grid, x);
  std::size_t deg = grid.degree;
  // Degree-reduction identity: B'_{i,k} = k * (B_{i,k-1} / (t_{i+k} - t_i)
  // - B_{i+1,k-1} / (t_{i+k+1} - t_{i+1})).
  std::vector<double> lower;
  span_basis(grid, span, deg - 1, x, lower);
  // lower[r] is basis span - deg + 1 + r of degree deg - 1.
  std::size_t first = span - deg;
  auto lower_at = [&](std::size_t i) -> double {
    // degree deg - 1 basis index i
    std::size_t lo = span - deg + 1;
    if (i < lo || i > span) return 0.0;
    return lower[i - lo];
  };
  double k = static_cast<double>(deg);
  for (std::size_t r = 0; r <= deg; ++r) {
    std::size_t i = first + r;
    double d1 = grid.knots[i + deg] - grid.knots[i];
    double d2 = grid.knots[i + deg + 1] - grid.knots[i + 1];
    out[i] = k * (lower_at(i) / d1 - lower_at(i + 1) / d2);
  }
  return out;
}

double spline_eval(const SplineGrid& grid, const std::vector<double>& coeffs,
                   double x) {
  require(coeffs.size() == grid.basis_count(), ErrorCode::DimMismatch,
          "spline_eval: coefficient count must match basis count");
  double xc = std::clamp(x, grid.a, grid.b);
  std::size_t span = find_span(grid, xc);
  std::vector<double> local;
  span_basis(grid, span, grid.degree, xc, local);
  double s = 0.0;
  std::size_t first = span - grid.degree;
  for (std::size_t r = 0; r <= grid.degree; ++r) s += coeffs[first + r] * local[r];
  return s;
}

double integrate_simpson(const std::function<double(double)>& f, double lo,
                         double hi, std::size_t panels) {
  if (panels < 2) panels = 2;
  if (panels % 2 != 0) ++panels;
  double h = (hi - lo) / static_cast<double>(panels);
  double acc = f(lo) + f(hi);
  for (std::size_t i = 1; i < panels; ++i) {
    double x = lo + h * static_cast<double>(i);
    acc += f(x) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

double spline_variance(const SplineGrid& grid, const std::vector<double>& coeffs,
                       std::size_t panels_per_cell) {
  require(coeffs.size() == grid.basis_count(), ErrorCode::DimMismatch,
          "spline_variance: coefficient count must match basis count");
  panels_per_cell = std::max<std::size_t>(panels_per_cell, 512);
  auto phi = [&](double x) { return spline_eval(grid, coeffs, x); };
  double h = grid.cell_width();
  double total = 0.0;
  for (std::size_t c = 0; c < grid.intervals; ++c) {
    double lo = grid.a + h * static_cast<double>(c);
    total += integrate_simpson(phi, lo, lo + h, panels_per_cell);
  }
  double mean = total / (grid.b - grid.a);
  auto dev2 = [&](double x) {
    double d = phi(x) - mean;
    return d * d;
  };
  double var = 0.0;
  for (std::size_t c = 0; c < grid.intervals; ++c) {
    double lo = grid.a + h * static_cast<double>(c);
    var += integrate_simpson(dev2, lo, lo + h, panels_per_cell);
  }
  return var;
}

double coeff_variance(const std::vector<double>& coeffs) {
  require(!coeffs.empty(), ErrorCode::InvalidArgument,
          "coeff_variance: empty coefficient vector");
  double mean = 0.0;
  for (double c : coeffs) mean += c;
  mean /= static_cast<double>(coeffs.size());
  double var = 0.0;
  for (double c : coeffs) var += (c - mean) * (c - mean);
  return var / static_cast<double>(coeffs.size());
}

std::array<double, 4> basis_l2_products(const SplineGrid& grid,
                                        std::size_t panels_per_cell) {
  require(grid.degree == 3, ErrorCode::InvalidArgument,
          "basis_l2_products: defined for cubic grids");
  require(grid.intervals >= grid.degree + 1, ErrorCode::InvalidArgument,
          "basis_l2_products: needs at least degree + 1 intervals");
  panels_per_cell = std::max<std::size_t>(panels_per_cell, 512);
  // Basis `degree` paired with basis degree + d: their common support
  // sits inside [a, b], so the integral equals the full-line overlap.
  std::size_t i0 = grid.degree;
  std::array<double, 4> m{};
  double h = grid.cell_width();
  for (std::size_t d = 0; d < 4; ++d) {
    auto f = [&](double x) {
      auto vals = basis_eval(grid, x);
      return vals[i0] * vals[i0 + d];
    };
    double acc = 0.0;
    for (std::size_t c = 0; c < grid.intervals; ++c) {
      double lo = grid.a + h * static_cast<double>(c);
      acc += integrate_simpson(f, lo, lo + h, panels_per_cell);
    }
    m[d] = acc;
  }
  return m;
}

}  // namespace khan
