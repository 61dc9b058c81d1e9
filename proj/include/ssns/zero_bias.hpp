#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ssns/distributions.hpp"

namespace ssns {

/// The a-zero-biased law a*, characterized by E[a f(a)] = E[f'(a*)].
///
/// Its density is the partial expectation p*(y) = E[a 1(a > y)]; integrating
/// that against dy gives the distribution function in closed form,
/// F*(y) = E[a min(a, y)] = E[a^2 1(a <= y)] + y E[a 1(a > y)],
/// so no nested quadrature is needed for any built-in kind.
class ZeroBiasLaw {
 public:
  explicit ZeroBiasLaw(StandardizedDistribution base);

  const StandardizedDistribution& base() const { return base_; }
  double density(double y) const;
  double cdf(double y) const;
  /// Bisection on cdf to 1e-12; exact base quantile when the base is Gaussian.
  double quantile(double u) const;

 private:
  StandardizedDistribution base_;
};

ZeroBiasLaw zero_bias(const StandardizedDistribution& dist);

/// Wasserstein-1 distance d1(a, a*) = integral of |F - F*|.
double gamma(const StandardizedDistribution& dist);

/// Monotone coupling (quantile(u), quantile_star(u)) with shared uniforms.
std::vector<std::pair<double, double>> quantile_coupling_sample(const StandardizedDistribution& dist,
                                                                std::size_t n, std::uint64_t seed);

/// Pairs (Y, Y*) for Y = sum w_i a_i. Y* replaces the term of a random index
/// I, drawn with P[I = i] = w_i^2 / |w|^2, by w_I a_I*, where (a_I, a_I*) is
/// drawn from the monotone coupling. Throws on all-zero weights.
std::vector<std::pair<double, double>> zero_bias_of_weighted_sum(std::span<const double> weights,
                                                                 const StandardizedDistribution& dist,
                                                                 std::size_t n, std::uint64_t seed);

/// h(y) = p*(y) / p(y) on {p > 0}, zero elsewhere. Absent for laws with atoms.
std::optional<RealFn> stein_coefficient(const StandardizedDistribution& dist);

/// E|1 - h(a)| by quadrature against the law of a. Throws DistributionError
/// when no Stein coefficient exists; callers fall back to gamma().
double e_one_minus_t(const StandardizedDistribution& dist);

/// Integral of |p1 - p2| plus the atom mass difference (no 1/2 factor).
/// A purely discrete law against a continuous one gives 2.
double tv_distance(const StandardizedDistribution& d1, const StandardizedDistribution& d2);

/// Same convention, between a law and its zero-bias transform.
double tv_to_zero_bias(const StandardizedDistribution& dist);

/// Bounded solution of f'(x) - x f(x) = |x| - sqrt(2/pi) and its derivatives.
struct SteinSolution {
  double f = 0.0;
  double df = 0.0;
  double d2f = 0.0;
};

SteinSolution stein_solution_abs(double x);

/// e^{x^2/2} (1 - Phi(x)), switching to the asymptotic series for x > 8.
double scaled_normal_tail(double x);

struct DiscrepancyReport {
  double gamma_a = 0.0;
  std::optional<double> e_one_minus_t;
  double tv_a_astar = 0.0;
  double tv_a_g = 0.0;
  double third_abs_moment = 0.0;
};

DiscrepancyReport discrepancy_report(const StandardizedDistribution& dist);
void to_json(json& j, const DiscrepancyReport& r);

}  // namespace ssns
