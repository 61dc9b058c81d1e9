#include "ssns/zero_bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssns {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> table_nodes(const StandardizedDistribution& d) {
  std::vector<double> nodes;
  for (const auto& wp : d.parts()) {
    if (auto* t = std::get_if<detail::TablePart>(&wp.part)) nodes.insert(nodes.end(), t->x.begin(), t->x.end());
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

// Integral of |f| over [lo, hi]. Tabulated pieces are integrated cell by cell
// (their interpolant is only piecewise smooth); everything else goes through
// adaptive quadrature with sign changes cut out.
double abs_integral(const RealFn& f, double lo, double hi, std::vector<double> breaks,
                    const std::vector<double>& nodes) {
  if (nodes.empty()) return integrate_abs(f, lo, hi, breaks);
  // a coarse table can hide two sign changes in one cell; subdivide
  std::vector<double> fine;
  const std::size_t per = std::max<std::size_t>(1, 4096 / nodes.size());
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    for (std::size_t i = 0; i < per; ++i) fine.push_back(nodes[k] + (nodes[k + 1] - nodes[k]) * double(i) / double(per));
  }
  fine.push_back(nodes.back());
  double total = integrate_abs_cellwise(f, fine);
  if (lo < nodes.front()) total += integrate_abs(f, lo, nodes.front(), breaks);
  if (hi > nodes.back()) total += integrate_abs(f, nodes.back(), hi, breaks);
  return total;
}

std::vector<double> merged(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

ZeroBiasLaw::ZeroBiasLaw(StandardizedDistribution base) : base_(std::move(base)) {}

double ZeroBiasLaw::density(double y) const { return std::max(0.0, base_.upper_partial_mean(y)); }

double ZeroBiasLaw::cdf(double y) const {
  if (y <= base_.support_lo()) return 0.0;
  if (y >= base_.support_hi()) return 1.0;
  return std::clamp(base_.lower_partial_second(y) + y * base_.upper_partial_mean(y), 0.0, 1.0);
}

double ZeroBiasLaw::quantile(double u) const {
  if (base_.kind() == DistKind::gaussian) return base_.quantile(u);
  const double lo = base_.support_lo();
  const double hi = base_.support_hi();
  if (u <= 0.0) return lo;
  if (u >= 1.0) return hi;
  double a = std::isfinite(lo) ? lo : -1.0;
  while (!std::isfinite(lo) && cdf(a) >= u) a *= 2.0;
  double b = std::isfinite(hi) ? hi : 1.0;
  while (!std::isfinite(hi) && cdf(b) < u) b *= 2.0;
  while (b - a > 1e-12) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (cdf(mid) < u) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return 0.5 * (a + b);
}

ZeroBiasLaw zero_bias(const StandardizedDistribution& dist) { return ZeroBiasLaw(dist); }

double gamma(const StandardizedDistribution& dist) {
  const ZeroBiasLaw star(dist);
  RealFn diff = [&](double t) { return dist.cdf(t) - star.cdf(t); };
  return abs_integral(diff, dist.support_lo(), dist.support_hi(), dist.break_points(), table_nodes(dist));
}

std::vector<std::pair<double, double>> quantile_coupling_sample(const StandardizedDistribution& dist,
                                                                std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DistributionError("sample size must be at least 1");
  const ZeroBiasLaw star(dist);
  Rng rng(seed);
  std::vector<std::pair<double, double>> out(n);
  for (auto& pr : out) {
    const double u = rng.uniform01();
    pr = {dist.quantile(u), star.quantile(u)};
  }
  return out;
}

std::vector<std::pair<double, double>> zero_bias_of_weighted_sum(std::span<const double> weights,
                                                                 const StandardizedDistribution& dist,
                                                                 std::size_t n, std::uint64_t seed) {
  double norm2 = 0.0;
  for (double w : weights) norm2 += w * w;
  if (!(norm2 > 0.0)) throw DistributionError("weights must not all be zero");
  std::vector<double> cum(weights.size());
  double c = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    c += weights[i] * weights[i] / norm2;
    cum[i] = c;
  }
  cum.back() = 1.0;

  const ZeroBiasLaw star(dist);
  Sampler sampler(dist, seed);
  std::vector<double> a(weights.size());
  std::vector<std::pair<double, double>> out(n);
  for (auto& pr : out) {
    sampler.fill(a);
    const double v = sampler.rng().uniform01();
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), v) - cum.begin()), weights.size() - 1);
    const double u = sampler.rng().uniform01();
    a[idx] = dist.quantile(u);
    const double a_star = star.quantile(u);
    double y = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) y += weights[i] * a[i];
    pr = {y, y - weights[idx] * a[idx] + weights[idx] * a_star};
  }
  return out;
}

std::optional<RealFn> stein_coefficient(const StandardizedDistribution& dist) {
  if (!dist.has_density_on_interval()) return std::nullopt;
  return RealFn([dist](double y) {
    const double p = dist.density(y);
    return p > 0.0 ? std::max(0.0, dist.upper_partial_mean(y)) / p : 0.0;
  });
}

double e_one_minus_t(const StandardizedDistribution& dist) {
  auto h = stein_coefficient(dist);
  if (!h) throw DistributionError("law '" + dist.name() + "' has no Stein coefficient (it has atoms)");
  const ZeroBiasLaw star(dist);
  // Kinks of |1 - h| sit where p = p*.
  const double lo = std::max(dist.support_lo(), -40.0);
  const double hi = std::min(dist.support_hi(), 40.0);
  std::vector<double> cuts = sign_changes([&](double y) { return dist.density(y) - star.density(y); }, lo, hi, 8000);
  const RealFn& hf = *h;
  return dist.expect([&hf](double y) { return std::abs(1.0 - hf(y)); }, cuts);
}

double tv_distance(const StandardizedDistribution& d1, const StandardizedDistribution& d2) {
  double atom_part = 0.0;
  {
    auto a1 = d1.atoms();
    auto a2 = d2.atoms();
    std::size_t i = 0, j = 0;
    while (i < a1.size() || j < a2.size()) {
      if (j == a2.size() || (i < a1.size() && a1[i].first < a2[j].first)) {
        atom_part += a1[i++].second;
      } else if (i == a1.size() || a2[j].first < a1[i].first) {
        atom_part += a2[j++].second;
      } else {
        atom_part += std::abs(a1[i++].second - a2[j++].second);
      }
    }
  }
  double cont_part = 0.0;
  const bool c1 = !d1.is_discrete();
  const bool c2 = !d2.is_discrete();
  if (c1 || c2) {
    RealFn diff = [&](double y) { return d1.density(y) - d2.density(y); };
    std::vector<double> nodes = merged(table_nodes(d1), table_nodes(d2));
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const double lo = std::min(c1 ? d1.support_lo() : kInf, c2 ? d2.support_lo() : kInf);
    const double hi = std::max(c1 ? d1.support_hi() : -kInf, c2 ? d2.support_hi() : -kInf);
    cont_part = abs_integral(diff, lo, hi, merged(d1.break_points(), d2.break_points()), nodes);
  }
  return atom_part + cont_part;
}

double tv_to_zero_bias(const StandardizedDistribution& dist) {
  const ZeroBiasLaw star(dist);
  double atom_part = 0.0;
  for (const auto& [v, p] : dist.atoms()) atom_part += p;
  RealFn diff = [&](double y) { return dist.density(y) - star.density(y); };
  return atom_part + abs_integral(diff, dist.support_lo(), dist.support_hi(), dist.break_points(), table_nodes(dist));
}

double scaled_normal_tail(double x) {
  if (x <= 8.0) return std::exp(0.5 * x * x) * 0.5 * std::erfc(x / std::sqrt(2.0));
  // e^{x^2/2}(1 - Phi(x)) ~ (1 / (x sqrt(2 pi))) sum_n (-1)^n (2n-1)!! / x^{2n}
  const double inv_x2 = 1.0 / (x * x);
  double term = 1.0;
  double sum = 1.0;
  for (int n = 1; n <= 20; ++n) {
    term *= -(2.0 * n - 1.0) * inv_x2;
    sum += term;
  }
  return sum / (x * std::sqrt(2.0 * M_PI));
}

SteinSolution stein_solution_abs(double x) {
  const double c = std::sqrt(2.0 / M_PI);
  const double ax = std::abs(x);
  SteinSolution s;
  s.f = -1.0 + 2.0 * scaled_normal_tail(ax);
  s.df = ax * s.f + ax - c;
  s.d2f = (1.0 + ax * ax) * s.f + ax * (ax - c) + 1.0;
  if (x < 0.0) {
    // -f(-x) solves the equation for |x|; f' is even and f, f'' are odd.
    s.f = -s.f;
    s.d2f = -s.d2f;
  }
  return s;
}

DiscrepancyReport discrepancy_report(const StandardizedDistribution& dist) {
  DiscrepancyReport r;
  r.gamma_a = gamma(dist);
  if (stein_coefficient(dist)) r.e_one_minus_t = e_one_minus_t(dist);
  r.tv_a_astar = tv_to_zero_bias(dist);
  r.tv_a_g = tv_distance(dist, make_distribution("gaussian"));
  r.third_abs_moment = abs_moment(dist, 3.0);
  return r;
}

void to_json(json& j, const DiscrepancyReport& r) {
  j = json{{"gamma_a", r.gamma_a},
           {"e_one_minus_t", r.e_one_minus_t ? json(*r.e_one_minus_t) : json(nullptr)},
           {"tv_a_astar", r.tv_a_astar},
           {"tv_a_g", r.tv_a_g},
           {"third_abs_moment", r.third_abs_moment}};
}

}  // namespace ssns
