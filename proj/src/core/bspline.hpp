// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace khan {

// Uniform B-spline basis on [a, b] with `intervals` cells of width
// h = (b - a) / intervals and open uniform knots extended `degree` cells
// past each end: knots[i] = a + (i - degree) * h for
// i = 0 .. intervals + 2 * degree. There are intervals + degree basis
// functions; with no repeated knots every basis is a shifted copy of the
// same bump.
struct SplineGrid {
  double a = -1.0;
  double b = 1.0;
  std::size_t intervals = 5;
  std::size_t degree = 3;
  std::vector<double> knots;

  std::size_t basis_count() const { return intervals + degree; }
  double cell_width() const { return (b - a) / static_cast<double>(intervals); }
};

SplineGrid make_grid(double a = -1.0, double b = 1.0, std::size_t intervals = 5,
                     std::size_t degree = 3);

// All basis values at x. Inputs outside [a, b] are clamped to the nearest
// endpoint. At most degree + 1 entries are nonzero; they sum to one.
std::vector<double> basis_eval(const SplineGrid& grid, double x);

// All basis derivatives at x. Inputs strictly outside [a, b] give zeros;
// endpoints give the one-sided derivative.
std::vector<double> basis_deriv(const SplineGrid& grid, double x);

// phi(x) = sum_k coeffs[k] * B_k(x); coeffs must have basis_count entries.
double spline_eval(const SplineGrid& grid, const std::vector<double>& coeffs,
                   double x);

// Composite Simpson with `panels` subintervals (rounded up to even).
double integrate_simpson(const std::function<double(double)>& f, double lo,
                         double hi, std::size_t panels);

// Unnormalized integral of (phi - mean)^2 over [a, b], where mean is the
// average value of phi on [a, b]. Quadrature runs cell by cell with
// panels_per_cell Simpson panels (>= 64 enforced).
double spline_variance(const SplineGrid& grid, const std::vector<double>& coeffs,
                       std::size_t panels_per_cell = 64);

// Population variance of the coefficient vector: (1/n) * sum (c - mean)^2.
double coeff_variance(const std::vector<double>& coeffs);

// Overlap integrals M[d] = integral of B_i(x) * B_{i+d}(x) dx, d = 0..3, for
// a basis pair whose common support lies inside [a, b]. Requires cubic
// degree and at least degree + 1 intervals.
std::array<double, 4> basis_l2_products(const SplineGrid& grid,
                                        std::size_t panels_per_cell = 64);

}  // namespace khan
