#include "ssns/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>

namespace ssns {
namespace {

void silence_gsl() {
  static std::once_flag flag;
  std::call_once(flag, [] { gsl_set_error_handler_off(); });
}

double trampoline(double x, void* params) { return (*static_cast<const RealFn*>(params))(x); }

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double integrate_segment(const RealFn& f, double lo, double hi, const QuadOptions& opts,
                         gsl_integration_workspace* ws) {
  if (lo == hi) return 0.0;
  gsl_function fn{&trampoline, const_cast<RealFn*>(&f)};
  double result = 0.0;
  double abserr = 0.0;
  int status = 0;
  const bool lo_inf = std::isinf(lo);
  const bool hi_inf = std::isinf(hi);
  if (lo_inf && hi_inf) {
    status = gsl_integration_qagi(&fn, opts.abs_tol, opts.rel_tol, opts.workspace, ws, &result, &abserr);
  } else if (hi_inf) {
    status = gsl_integration_qagiu(&fn, lo, opts.abs_tol, opts.rel_tol, opts.workspace, ws, &result, &abserr);
  } else if (lo_inf) {
    status = gsl_integration_qagil(&fn, hi, opts.abs_tol, opts.rel_tol, opts.workspace, ws, &result, &abserr);
  } else {
    status = gsl_integration_qags(&fn, lo, hi, opts.abs_tol, opts.rel_tol, opts.workspace, ws, &result, &abserr);
  }
  if (!std::isfinite(result)) {
    throw QuadratureError("quadrature produced a non-finite value on [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  // Round-off limited results are accepted when the error estimate is still small.
  if (status != GSL_SUCCESS) {
    const double allowed = std::max(1e3 * opts.abs_tol, 1e-8 * std::abs(result));
    if (abserr > allowed) {
      throw QuadratureError(std::string("quadrature did not converge: ") + gsl_strerror(status) +
                            " (abserr " + std::to_string(abserr) + ")");
    }
  }
  return result;
}

}  // namespace

std::vector<double> interior_points(std::span<const double> pts, double lo, double hi) {
  std::vector<double> out;
  for (double p : pts) {
    if (std::isfinite(p) && p > lo && p < hi) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)); }),
            out.end());
  return out;
}

double integrate(const RealFn& f, double lo, double hi, std::span<const double> breaks,
                 const QuadOptions& opts) {
  silence_gsl();
  if (!(lo <= hi)) {
    if (lo > hi) return -integrate(f, hi, lo, breaks, opts);
    throw QuadratureError("integration limits are NaN");
  }
  std::vector<double> cuts = interior_points(breaks, lo, hi);
  // An infinite range with no interior cut gets one at 0 (or next to the finite end)
  // so the semi-infinite rules are used instead of the doubly infinite one.
  if (std::isinf(lo) && std::isinf(hi) && cuts.empty()) cuts.push_back(0.0);

  std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
      gsl_integration_workspace_alloc(opts.workspace));
  double total = 0.0;
  double a = lo;
  for (double c : cuts) {
    total += integrate_segment(f, a, c, opts, ws.get());
    a = c;
  }
  total += integrate_segment(f, a, hi, opts, ws.get());
  return total;
}

std::vector<double> sign_changes(const RealFn& f, double lo, double hi, std::size_t scan_points,
                                 double xtol, double zero_tol) {
  std::vector<double> roots;
  if (!(hi > lo) || scan_points < 2) return roots;
  const double h = (hi - lo) / static_cast<double>(scan_points - 1);
  double x_prev = lo;
  auto clean = [zero_tol](double v) { return std::abs(v) <= zero_tol ? 0.0 : v; };
  double f_prev = clean(f(lo));
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double x = (i + 1 == scan_points) ? hi : lo + h * static_cast<double>(i);
    const double fx = clean(f(x));
    if ((f_prev < 0.0 && fx > 0.0) || (f_prev > 0.0 && fx < 0.0)) {
      double a = x_prev;
      double b = x;
      double fa = f_prev;
      while (b - a > xtol) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = clean(f(mid));
        if ((fa < 0.0) == (fm < 0.0) && fm != 0.0) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    if (fx != 0.0) {
      x_prev = x;
      f_prev = fx;
    }
  }
  return roots;
}

double integrate_abs(const RealFn& f, double lo, double hi, std::span<const double> breaks,
                     double window, std::size_t scan_points, const QuadOptions& opts) {
  const double slo = std::max(lo, -window);
  const double shi = std::min(hi, window);
  std::vector<double> cuts(breaks.begin(), breaks.end());
  // Scan each piece between existing cuts separately so jumps do not hide roots.
  std::vector<double> edges = interior_points(cuts, slo, shi);
  edges.insert(edges.begin(), slo);
  edges.push_back(shi);
  const std::size_t per_piece = std::max<std::size_t>(64, scan_points / (edges.size() - 1));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    const double eps = 1e-12 * std::max(1.0, std::abs(edges[i + 1] - edges[i]));
    auto r = sign_changes(f, edges[i] + eps, edges[i + 1] - eps, per_piece);
    cuts.insert(cuts.end(), r.begin(), r.end());
  }
  RealFn absf = [&f](double x) { return std::abs(f(x)); };
  return integrate(absf, lo, hi, cuts, opts);
}

double integrate_abs_cellwise(const RealFn& f, std::span<const double> nodes) {
  static constexpr double xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static constexpr double wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  auto gl8 = [&f](double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += wg[i] * (std::abs(f(c - h * xg[i])) + std::abs(f(c + h * xg[i])));
    return s * h;
  };
  double total = 0.0;
  if (nodes.size() < 2) return total;
  double fa = f(nodes[0]);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double a = nodes[k];
    const double b = nodes[k + 1];
    const double fb = f(b);
    if ((fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0)) {
      double lo = a, hi = b, flo = fa;
      for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double r = 0.5 * (lo + hi);
      total += gl8(a, r) + gl8(r, b);
    } else {
      total += gl8(a, b);
    }
    fa = fb;
  }
  return total;
}

double gauss_hermite_expect(const RealFn& f, std::size_t n) {
  silence_gsl();
  // Weight exp(-b (x-a)^2) with a = 0, b = 1/2 is the unnormalized N(0,1) density.
  gsl_integration_fixed_workspace* w =
      gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0, 0.5, 0.0, 0.0);
  if (w == nullptr) throw QuadratureError("cannot build Gauss-Hermite rule");
  const double* nodes = gsl_integration_fixed_nodes(w);
  const double* weights = gsl_integration_fixed_weights(w);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += weights[i] * f(nodes[i]);
  gsl_integration_fixed_free(w);
  return sum / std::sqrt(2.0 * M_PI);
}

double grid_golden_max(const RealFn& f, double lo, double hi, std::size_t n, double xtol) {
  const double h = (hi - lo) / static_cast<double>(n - 1);
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(lo + h * static_cast<double>(i));
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double a = lo + h * static_cast<double>(best == 0 ? 0 : best - 1);
  double b = lo + h * static_cast<double>(std::min(best + 1, n - 1));
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > xtol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return std::max({best_val, fc, fd, f(0.5 * (a + b))});
}

}  // namespace ssns
