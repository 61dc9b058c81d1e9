#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssns {

using RealFn = std::function<double(double)>;

struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct QuadOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-12;
  std::size_t workspace = 2000;
};

/// Adaptive Gauss-Kronrod (QUADPACK QAGS/QAGI via GSL) over [lo, hi]. Either
/// end may be infinite. The range is cut at every break point inside it so
/// kinks and jumps sit on segment boundaries.
double integrate(const RealFn& f, double lo, double hi, std::span<const double> breaks = {},
                 const QuadOptions& opts = {});

/// Locations in (lo, hi) where f changes sign, found by scanning `scan_points`
/// equispaced points and bisecting each bracket to `xtol`.
/// Values with |f| <= zero_tol count as zero and never start a bracket.
std::vector<double> sign_changes(const RealFn& f, double lo, double hi, std::size_t scan_points,
                                 double xtol = 1e-13, double zero_tol = 1e-14);

/// Integral of |f| over [lo, hi]. Sign changes are located on the finite part
/// of the range (clipped to [-window, window]) and added as break points, so
/// every segment sees a smooth integrand.
double integrate_abs(const RealFn& f, double lo, double hi, std::span<const double> breaks = {},
                     double window = 40.0, std::size_t scan_points = 4000,
                     const QuadOptions& opts = {});

/// Integral of |f| over [nodes.front(), nodes.back()] for an f that is smooth
/// inside each cell: 8-point Gauss-Legendre per cell, cells split where f
/// changes sign between their end points.
double integrate_abs_cellwise(const RealFn& f, std::span<const double> nodes);

/// E f(g) for g ~ N(0,1) with an n-point Gauss-Hermite rule.
double gauss_hermite_expect(const RealFn& f, std::size_t n);

/// Maximum of f on [lo, hi]: best point of an n-point grid, then golden-section
/// refinement of the bracketing cell to `xtol`.
double grid_golden_max(const RealFn& f, double lo, double hi, std::size_t n = 2001,
                       double xtol = 1e-10);

/// Sorted, de-duplicated copy of the points strictly inside (lo, hi).
std::vector<double> interior_points(std::span<const double> pts, double lo, double hi);

}  // namespace ssns
