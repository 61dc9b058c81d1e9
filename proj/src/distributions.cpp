#include "ssns/distributions.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace ssns {
namespace {

using detail::AtomPart;
using detail::GaussianPart;
using detail::LaplacePart;
using detail::Part;
using detail::TablePart;
using detail::UniformPart;
using detail::WeightedPart;

constexpr double kInf = std::numeric_limits<double>::infinity();

// 8-point Gauss-Legendre rule on [-1, 1].
constexpr double kGlNodes[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                0.9602898564975363};
constexpr double kGlWeights[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                  0.1012285362903763};

template <class F>
double gauss_legendre8(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    s += kGlWeights[i] * (f(c - h * kGlNodes[i]) + f(c + h * kGlNodes[i]));
  }
  return s * h;
}

double log_sum_exp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

// ---- per-part primitives -------------------------------------------------

double part_pdf(const GaussianPart& g, double y) { return normal_pdf(y / g.sigma) / g.sigma; }
double part_pdf(const UniformPart& u, double y) { return std::abs(y) <= u.half_width ? 0.5 / u.half_width : 0.0; }
double part_pdf(const LaplacePart& l, double y) { return std::exp(-std::abs(y) / l.scale) / (2.0 * l.scale); }
double part_pdf(const AtomPart&, double) { return 0.0; }
double part_pdf(const TablePart& t, double y) {
  if (y < t.x.front() || y > t.x.back()) return 0.0;
  const std::size_t k = t.cell(y);
  const double h = t.x[k + 1] - t.x[k];
  const double w = (y - t.x[k]) / h;
  return (1.0 - w) * t.pdf[k] + w * t.pdf[k + 1];
}

double part_cdf(const GaussianPart& g, double y) { return normal_cdf(y / g.sigma); }
double part_cdf(const UniformPart& u, double y) {
  return std::clamp((y + u.half_width) / (2.0 * u.half_width), 0.0, 1.0);
}
double part_cdf(const LaplacePart& l, double y) {
  return y < 0.0 ? 0.5 * std::exp(y / l.scale) : 1.0 - 0.5 * std::exp(-y / l.scale);
}
double part_cdf(const AtomPart& a, double y) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size() && a.values[i] <= y; ++i) s += a.probs[i];
  return s;
}

// Local integrals over [x_k, x_k + tau] of t^j times the linear interpolant.
struct CellPoly {
  double xk, pk, s;
  double int0(double tau) const { return pk * tau + s * tau * tau / 2.0; }
  double int1(double tau) const {
    return xk * pk * tau + (xk * s + pk) * tau * tau / 2.0 + s * tau * tau * tau / 3.0;
  }
  double int2(double tau) const {
    const double t2 = tau * tau;
    return xk * xk * pk * tau + (xk * xk * s + 2.0 * xk * pk) * t2 / 2.0 +
           (2.0 * xk * s + pk) * t2 * tau / 3.0 + s * t2 * t2 / 4.0;
  }
};

CellPoly cell_poly(const TablePart& t, std::size_t k) {
  return {t.x[k], t.pdf[k], (t.pdf[k + 1] - t.pdf[k]) / (t.x[k + 1] - t.x[k])};
}

double part_cdf(const TablePart& t, double y) {
  if (y <= t.x.front()) return 0.0;
  if (y >= t.x.back()) return t.cdf.back();
  const std::size_t k = t.cell(y);
  return t.cdf[k] + cell_poly(t, k).int0(y - t.x[k]);
}

double part_upper_mean(const GaussianPart& g, double y) {
  if (std::isinf(y)) return 0.0;
  return g.sigma * normal_pdf(y / g.sigma);
}
double part_upper_mean(const UniformPart& u, double y) {
  const double c = u.half_width;
  if (y <= -c || y >= c) return 0.0;
  return (c * c - y * y) / (4.0 * c);
}
double part_upper_mean(const LaplacePart& l, double y) {
  if (std::isinf(y)) return 0.0;
  const double a = std::abs(y);
  return 0.5 * (a + l.scale) * std::exp(-a / l.scale);
}
double part_upper_mean(const AtomPart& a, double y) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] > y) s += a.probs[i] * a.values[i];
  }
  return s;
}
double part_upper_mean(const TablePart& t, double y) {
  if (y <= t.x.front()) return t.upper_mean.front();
  if (y >= t.x.back()) return 0.0;
  const std::size_t k = t.cell(y);
  return t.upper_mean[k] - cell_poly(t, k).int1(y - t.x[k]);
}

double part_lower_sq(const GaussianPart& g, double y) {
  if (y == -kInf) return 0.0;
  if (y == kInf) return g.sigma * g.sigma;
  const double z = y / g.sigma;
  return g.sigma * g.sigma * (normal_cdf(z) - z * normal_pdf(z));
}
double part_lower_sq(const UniformPart& u, double y) {
  const double c = u.half_width;
  if (y <= -c) return 0.0;
  if (y >= c) return c * c / 3.0;
  return (y * y * y + c * c * c) / (6.0 * c);
}
double part_lower_sq(const LaplacePart& l, double y) {
  const double b = l.scale;
  auto tail = [b](double s) { return 0.5 * std::exp(-s / b) * (s * s + 2.0 * b * s + 2.0 * b * b); };
  if (y == -kInf) return 0.0;
  if (y == kInf) return 2.0 * b * b;
  return y <= 0.0 ? tail(-y) : 2.0 * b * b - tail(y);
}
double part_lower_sq(const AtomPart& a, double y) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size() && a.values[i] <= y; ++i) s += a.probs[i] * a.values[i] * a.values[i];
  return s;
}
double part_lower_sq(const TablePart& t, double y) {
  if (y <= t.x.front()) return 0.0;
  if (y >= t.x.back()) return t.lower_sq.back();
  const std::size_t k = t.cell(y);
  return t.lower_sq[k] + cell_poly(t, k).int2(y - t.x[k]);
}

double part_mean(const Part& p) {
  if (auto* a = std::get_if<AtomPart>(&p)) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->values.size(); ++i) s += a->probs[i] * a->values[i];
    return s;
  }
  if (auto* t = std::get_if<TablePart>(&p)) return t->upper_mean.front();
  return 0.0;
}

double part_second(const Part& p) {
  return std::visit([](const auto& q) { return part_lower_sq(q, kInf); }, p);
}

double part_log_abs_moment(const GaussianPart& g, double p) {
  return p * std::log(g.sigma) + 0.5 * p * std::log(2.0) + std::lgamma(0.5 * (p + 1.0)) - 0.5 * std::log(M_PI);
}
double part_log_abs_moment(const UniformPart& u, double p) { return p * std::log(u.half_width) - std::log1p(p); }
double part_log_abs_moment(const LaplacePart& l, double p) { return p * std::log(l.scale) + std::lgamma(p + 1.0); }
double part_log_abs_moment(const AtomPart& a, double p) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] != 0.0 && a.probs[i] > 0.0) terms.push_back(std::log(a.probs[i]) + p * std::log(std::abs(a.values[i])));
  }
  return terms.empty() ? -kInf : log_sum_exp(terms);
}
double part_log_abs_moment(const TablePart& t, double p) {
  std::vector<double> terms;
  terms.reserve(8 * t.x.size());
  auto add_segment = [&](double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    for (int i = 0; i < 4; ++i) {
      for (double sgn : {-1.0, 1.0}) {
        const double y = c + sgn * h * kGlNodes[i];
        const double dens = part_pdf(t, y);
        if (dens > 0.0 && y != 0.0) terms.push_back(std::log(kGlWeights[i] * h * dens) + p * std::log(std::abs(y)));
      }
    }
  };
  for (std::size_t k = 0; k + 1 < t.x.size(); ++k) {
    const double a = t.x[k];
    const double b = t.x[k + 1];
    if (a < 0.0 && b > 0.0) {
      add_segment(a, 0.0);
      add_segment(0.0, b);
    } else {
      add_segment(a, b);
    }
  }
  return terms.empty() ? -kInf : log_sum_exp(terms);
}

double part_expect(const Part& part, const RealFn& f, const std::vector<double>& breaks) {
  if (auto* a = std::get_if<AtomPart>(&part)) {
    double s = 0.0;
    for (std::size_t i = 0; i < a->values.size(); ++i) s += a->probs[i] * f(a->values[i]);
    return s;
  }
  if (auto* t = std::get_if<TablePart>(&part)) {
    const std::vector<double> cuts = interior_points(breaks, t->x.front(), t->x.back());
    auto integrand = [&](double y) { return f(y) * part_pdf(*t, y); };
    // coarse tables: adaptive per cell; fine ones (convolutions) use a fixed rule
    if (t->x.size() <= 257) {
      std::vector<double> all = cuts;
      all.insert(all.end(), t->x.begin() + 1, t->x.end() - 1);
      return integrate(integrand, t->x.front(), t->x.back(), all);
    }
    double s = 0.0;
    std::size_t ci = 0;
    for (std::size_t k = 0; k + 1 < t->x.size(); ++k) {
      double a = t->x[k];
      const double b = t->x[k + 1];
      while (ci < cuts.size() && cuts[ci] <= a) ++ci;
      std::size_t cj = ci;
      while (cj < cuts.size() && cuts[cj] < b) {
        s += gauss_legendre8(integrand, a, cuts[cj]);
        a = cuts[cj];
        ++cj;
      }
      s += gauss_legendre8(integrand, a, b);
    }
    return s;
  }
  std::vector<double> cuts = breaks;
  cuts.push_back(0.0);
  double lo = -kInf;
  double hi = kInf;
  if (auto* u = std::get_if<UniformPart>(&part)) {
    lo = -u->half_width;
    hi = u->half_width;
  }
  if (auto* g = std::get_if<GaussianPart>(&part)) {
    for (double k : {-8.0, -3.0, -1.0, 1.0, 3.0, 8.0}) cuts.push_back(k * g->sigma);
  }
  if (auto* l = std::get_if<LaplacePart>(&part)) {
    for (double k : {-20.0, -5.0, 5.0, 20.0}) cuts.push_back(k * l->scale);
  }
  RealFn integrand = [&](double y) {
    const double dens = std::visit([y](const auto& q) { return part_pdf(q, y); }, part);
    return dens == 0.0 ? 0.0 : f(y) * dens;
  };
  return integrate(integrand, lo, hi, cuts);
}

std::pair<double, double> part_support(const Part& p) {
  return std::visit(
      [](const auto& q) -> std::pair<double, double> {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, UniformPart>) {
          return {-q.half_width, q.half_width};
        } else if constexpr (std::is_same_v<T, AtomPart>) {
          return {q.values.front(), q.values.back()};
        } else if constexpr (std::is_same_v<T, TablePart>) {
          return {q.x.front(), q.x.back()};
        } else {
          return {-kInf, kInf};
        }
      },
      p);
}

bool part_symmetric(const Part& p) {
  if (auto* a = std::get_if<AtomPart>(&p)) {
    const std::size_t n = a->values.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(a->values[i] + a->values[n - 1 - i]) > 1e-12 || std::abs(a->probs[i] - a->probs[n - 1 - i]) > 1e-12) {
        return false;
      }
    }
    return true;
  }
  if (auto* t = std::get_if<TablePart>(&p)) {
    if (std::abs(t->x.front() + t->x.back()) > 1e-9) return false;
    double peak = *std::max_element(t->pdf.begin(), t->pdf.end());
    for (std::size_t k = 0; k < t->x.size(); ++k) {
      if (std::abs(part_pdf(*t, -t->x[k]) - t->pdf[k]) > 1e-9 * peak) return false;
    }
    return true;
  }
  return true;
}

double part_quantile(const Part& p, double u) {
  if (auto* g = std::get_if<GaussianPart>(&p)) return g->sigma * normal_quantile(u);
  if (auto* un = std::get_if<UniformPart>(&p)) return un->half_width * (2.0 * u - 1.0);
  if (auto* l = std::get_if<LaplacePart>(&p)) {
    return u < 0.5 ? l->scale * std::log(2.0 * u) : -l->scale * std::log(2.0 * (1.0 - u));
  }
  if (auto* a = std::get_if<AtomPart>(&p)) {
    double c = 0.0;
    for (std::size_t i = 0; i < a->values.size(); ++i) {
      c += a->probs[i];
      if (u <= c) return a->values[i];
    }
    return a->values.back();
  }
  const auto& t = std::get<TablePart>(p);
  const double target = u * t.cdf.back();
  auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), target);
  if (it == t.cdf.begin()) return t.x.front();
  if (it == t.cdf.end()) return t.x.back();
  const std::size_t k = static_cast<std::size_t>(it - t.cdf.begin()) - 1;
  const CellPoly c = cell_poly(t, k);
  const double r = target - t.cdf[k];
  double tau = 0.0;
  const double disc = c.pk * c.pk + 2.0 * c.s * r;
  const double denom = c.pk + std::sqrt(std::max(0.0, disc));
  tau = denom > 0.0 ? 2.0 * r / denom : 0.0;
  return std::clamp(t.x[k] + tau, t.x[k], t.x[k + 1]);
}

AtomPart make_atoms(std::vector<double> values, std::vector<double> probs) {
  if (values.size() != probs.size() || values.empty()) {
    throw DistributionError("discrete law needs matching non-empty values and probs");
  }
  std::map<double, double> merged;
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(values[i])) throw DistributionError("invalid atom");
    total += probs[i];
    merged[values[i]] += probs[i];
  }
  if (!(total > 0.0)) throw DistributionError("atom probabilities sum to zero");
  AtomPart a;
  for (auto [v, p] : merged) {
    if (p > 0.0) {
      a.values.push_back(v);
      a.probs.push_back(p / total);
    }
  }
  return a;
}

// Affine standardization of an atom set.
AtomPart standardize_atoms(AtomPart a) {
  double mean = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) mean += a.probs[i] * a.values[i];
  double var = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) var += a.probs[i] * (a.values[i] - mean) * (a.values[i] - mean);
  if (!(var > 1e-300)) throw DistributionError("degenerate law: zero variance");
  const double sd = std::sqrt(var);
  for (double& v : a.values) v = (v - mean) / sd;
  return a;
}

std::vector<double> json_vector(const json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_array()) {
    throw DistributionError(std::string("missing array parameter '") + key + "'");
  }
  return params[key].get<std::vector<double>>();
}

double json_number(const json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_number()) {
    throw DistributionError(std::string("missing numeric parameter '") + key + "'");
  }
  return params[key].get<double>();
}

}  // namespace

// ---- TablePart -------------------------------------------------------------

std::size_t detail::TablePart::cell(double y) const {
  auto it = std::upper_bound(x.begin(), x.end(), y);
  std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(k, x.size() - 2);
}

detail::TablePart detail::TablePart::build(std::vector<double> grid, std::vector<double> dens) {
  if (grid.size() < 2 || grid.size() != dens.size()) {
    throw DistributionError("tabulated law needs a grid of at least two points and a matching pdf");
  }
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    if (!(grid[k + 1] > grid[k])) throw DistributionError("tabulated grid must be strictly increasing");
  }
  for (double& p : dens) {
    if (!std::isfinite(p)) throw DistributionError("tabulated pdf has non-finite values");
    p = std::max(p, 0.0);
  }
  TablePart t;
  t.x = std::move(grid);
  t.pdf = std::move(dens);
  const std::size_t n = t.x.size();

  double mass = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const CellPoly c = cell_poly(t, k);
    const double h = t.x[k + 1] - t.x[k];
    mass += c.int0(h);
    m1 += c.int1(h);
    m2 += c.int2(h);
  }
  if (!(mass > 0.0)) throw DistributionError("tabulated pdf has zero mass");
  const double mean = m1 / mass;
  const double var = m2 / mass - mean * mean;
  if (!(var > 1e-300)) throw DistributionError("degenerate law: zero variance");
  const double sd = std::sqrt(var);
  for (std::size_t k = 0; k < n; ++k) {
    t.x[k] = (t.x[k] - mean) / sd;
    t.pdf[k] = t.pdf[k] * sd / mass;
  }

  t.cdf.assign(n, 0.0);
  t.lower_sq.assign(n, 0.0);
  t.upper_mean.assign(n, 0.0);
  std::vector<double> cell_m1(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const CellPoly c = cell_poly(t, k);
    const double h = t.x[k + 1] - t.x[k];
    t.cdf[k + 1] = t.cdf[k] + c.int0(h);
    t.lower_sq[k + 1] = t.lower_sq[k] + c.int2(h);
    cell_m1[k] = c.int1(h);
  }
  for (std::size_t k = n - 1; k-- > 0;) t.upper_mean[k] = t.upper_mean[k + 1] + cell_m1[k];
  return t;
}

// ---- StandardizedDistribution ---------------------------------------------

std::string to_string(DistKind k) {
  switch (k) {
    case DistKind::gaussian: return "gaussian";
    case DistKind::rademacher: return "rademacher";
    case DistKind::uniform: return "uniform";
    case DistKind::laplace: return "laplace";
    case DistKind::scaled_bernoulli: return "scaled_bernoulli";
    case DistKind::two_point: return "two_point";
    case DistKind::discrete: return "discrete";
    case DistKind::tabulated: return "tabulated";
    case DistKind::mixture: return "mixture";
  }
  return "unknown";
}

void to_json(json& j, const DistributionSpec& s) { j = json{{"kind", s.kind}, {"params", s.params}}; }

void from_json(const json& j, DistributionSpec& s) {
  if (j.is_string()) {
    s.kind = j.get<std::string>();
    s.params = json::object();
    return;
  }
  if (!j.is_object() || !j.contains("kind")) throw DistributionError("distribution spec needs a \"kind\"");
  s.kind = j.at("kind").get<std::string>();
  s.params = j.value("params", json::object());
}

StandardizedDistribution::StandardizedDistribution(DistKind kind, DistributionSpec spec,
                                                   std::vector<WeightedPart> parts)
    : kind_(kind), spec_(std::move(spec)) {
  if (parts.empty()) throw DistributionError("law has no parts");
  double wsum = 0.0;
  for (const auto& p : parts) {
    if (!(p.weight > 0.0)) throw DistributionError("mixture weights must be positive");
    wsum += p.weight;
  }
  for (auto& p : parts) p.weight /= wsum;

  lo_ = kInf;
  hi_ = -kInf;
  symmetric_ = true;
  has_atoms_ = false;
  discrete_ = true;
  double c = 0.0;
  for (const auto& wp : parts) {
    c += wp.weight;
    part_cum_.push_back(c);
    auto [a, b] = part_support(wp.part);
    lo_ = std::min(lo_, a);
    hi_ = std::max(hi_, b);
    symmetric_ = symmetric_ && part_symmetric(wp.part);
    const bool atoms = std::holds_alternative<AtomPart>(wp.part);
    has_atoms_ = has_atoms_ || atoms;
    discrete_ = discrete_ && atoms;
    std::visit(
        [this](const auto& q) {
          using T = std::decay_t<decltype(q)>;
          if constexpr (std::is_same_v<T, UniformPart>) {
            breaks_.push_back(-q.half_width);
            breaks_.push_back(q.half_width);
          } else if constexpr (std::is_same_v<T, AtomPart>) {
            breaks_.insert(breaks_.end(), q.values.begin(), q.values.end());
          } else if constexpr (std::is_same_v<T, TablePart>) {
            breaks_.push_back(q.x.front());
            breaks_.push_back(q.x.back());
          } else if constexpr (std::is_same_v<T, LaplacePart>) {
            breaks_.push_back(0.0);
          }
        },
        wp.part);
  }
  part_cum_.back() = 1.0;
  density_on_interval_ = !has_atoms_;
  std::sort(breaks_.begin(), breaks_.end());
  breaks_.erase(std::unique(breaks_.begin(), breaks_.end()), breaks_.end());
  parts_ = std::make_shared<const std::vector<WeightedPart>>(std::move(parts));

  const double m = mean();
  const double v = second_moment() - m * m;
  if (!(v > 1e-300)) throw DistributionError("degenerate law: zero variance");
  if (std::abs(m) > 1e-10 || std::abs(v - 1.0) > 1e-10) {
    throw DistributionError("law is not standardized (mean " + std::to_string(m) + ", variance " +
                            std::to_string(v) + ")");
  }
}

std::string StandardizedDistribution::name() const {
  if (spec_.params.empty()) return spec_.kind;
  return spec_.kind + spec_.params.dump();
}

double StandardizedDistribution::density(double y) const {
  double s = 0.0;
  for (const auto& wp : *parts_) s += wp.weight * std::visit([y](const auto& q) { return part_pdf(q, y); }, wp.part);
  return s;
}

double StandardizedDistribution::cdf(double y) const {
  double s = 0.0;
  for (const auto& wp : *parts_) s += wp.weight * std::visit([y](const auto& q) { return part_cdf(q, y); }, wp.part);
  return std::clamp(s, 0.0, 1.0);
}

double StandardizedDistribution::upper_partial_mean(double y) const {
  double s = 0.0;
  for (const auto& wp : *parts_) {
    s += wp.weight * std::visit([y](const auto& q) { return part_upper_mean(q, y); }, wp.part);
  }
  return s;
}

double StandardizedDistribution::lower_partial_second(double y) const {
  double s = 0.0;
  for (const auto& wp : *parts_) {
    s += wp.weight * std::visit([y](const auto& q) { return part_lower_sq(q, y); }, wp.part);
  }
  return s;
}

double StandardizedDistribution::quantile(double u) const {
  if (u <= 0.0) return lo_;
  if (u >= 1.0) return hi_;
  if (parts_->size() == 1) return part_quantile(parts_->front().part, u);
  double a = std::isfinite(lo_) ? lo_ : -1.0;
  while (!std::isfinite(lo_) && cdf(a) >= u) a *= 2.0;
  double b = std::isfinite(hi_) ? hi_ : 1.0;
  while (!std::isfinite(hi_) && cdf(b) < u) b *= 2.0;
  if (cdf(a) >= u) return a;
  for (int it = 0; it < 200 && b - a > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
    const double mid = 0.5 * (a + b);
    if (cdf(mid) < u) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return b;
}

std::vector<std::pair<double, double>> StandardizedDistribution::atoms() const {
  std::map<double, double> merged;
  for (const auto& wp : *parts_) {
    if (auto* a = std::get_if<AtomPart>(&wp.part)) {
      for (std::size_t i = 0; i < a->values.size(); ++i) merged[a->values[i]] += wp.weight * a->probs[i];
    }
  }
  return {merged.begin(), merged.end()};
}

double StandardizedDistribution::expect(const RealFn& f, std::span<const double> extra_breaks) const {
  std::vector<double> breaks(extra_breaks.begin(), extra_breaks.end());
  breaks.insert(breaks.end(), breaks_.begin(), breaks_.end());
  double s = 0.0;
  for (const auto& wp : *parts_) s += wp.weight * part_expect(wp.part, f, breaks);
  return s;
}

double StandardizedDistribution::log_abs_moment(double p) const {
  std::vector<double> terms;
  for (const auto& wp : *parts_) {
    const double lm = std::visit([p](const auto& q) { return part_log_abs_moment(q, p); }, wp.part);
    terms.push_back(std::log(wp.weight) + lm);
  }
  return log_sum_exp(terms);
}

double StandardizedDistribution::mean() const {
  double s = 0.0;
  for (const auto& wp : *parts_) s += wp.weight * part_mean(wp.part);
  return s;
}

double StandardizedDistribution::second_moment() const {
  double s = 0.0;
  for (const auto& wp : *parts_) s += wp.weight * part_second(wp.part);
  return s;
}

// ---- factories ----------------------------------------------------------------

StandardizedDistribution make_distribution(const std::string& kind, json params) {
  return make_distribution(DistributionSpec{kind, std::move(params)});
}

StandardizedDistribution make_distribution(const DistributionSpec& spec) {
  const std::string& k = spec.kind;
  const json& p = spec.params;
  auto single = [&](DistKind kind, Part part) {
    std::vector<WeightedPart> parts;
    parts.push_back({1.0, std::move(part)});
    return StandardizedDistribution(kind, spec, std::move(parts));
  };
  if (k == "gaussian" || k == "normal") return single(DistKind::gaussian, GaussianPart{1.0});
  if (k == "rademacher") return single(DistKind::rademacher, make_atoms({-1.0, 1.0}, {0.5, 0.5}));
  if (k == "uniform") return single(DistKind::uniform, UniformPart{std::sqrt(3.0)});
  if (k == "laplace") return single(DistKind::laplace, LaplacePart{1.0 / std::sqrt(2.0)});
  if (k == "scaled_bernoulli") {
    const double q = json_number(p, "p");
    if (!(q > 0.0 && q < 1.0)) throw DistributionError("scaled_bernoulli needs p in (0,1)");
    const double sd = std::sqrt(q * (1.0 - q));
    return single(DistKind::scaled_bernoulli, make_atoms({-q / sd, (1.0 - q) / sd}, {1.0 - q, q}));
  }
  if (k == "two_point") {
    const double w = json_number(p, "w");
    if (!(w > 0.0) || !std::isfinite(w)) throw DistributionError("two_point needs w > 0");
    return single(DistKind::two_point, standardize_atoms(make_atoms({-1.0, w}, {w / (1.0 + w), 1.0 / (1.0 + w)})));
  }
  if (k == "discrete") {
    return single(DistKind::discrete, standardize_atoms(make_atoms(json_vector(p, "values"), json_vector(p, "probs"))));
  }
  if (k == "tabulated") {
    return single(DistKind::tabulated, TablePart::build(json_vector(p, "grid"), json_vector(p, "pdf")));
  }
  if (k == "mixture") {
    if (!p.contains("components") || !p["components"].is_array() || p["components"].empty()) {
      throw DistributionError("mixture needs a non-empty \"components\" array");
    }
    std::vector<std::pair<double, StandardizedDistribution>> comps;
    for (const auto& c : p["components"]) {
      comps.emplace_back(json_number(c, "weight"), make_distribution(c.at("dist").get<DistributionSpec>()));
    }
    return make_mixture(comps);
  }
  throw DistributionError("unknown distribution kind '" + k + "'");
}

StandardizedDistribution make_tabulated(std::vector<double> grid, std::vector<double> pdf, json provenance) {
  DistributionSpec spec{"tabulated", json::object()};
  if (provenance.is_null()) {
    spec.params["grid"] = grid;
    spec.params["pdf"] = pdf;
  } else {
    spec.params["source"] = std::move(provenance);
  }
  std::vector<WeightedPart> parts;
  parts.push_back({1.0, TablePart::build(std::move(grid), std::move(pdf))});
  return StandardizedDistribution(DistKind::tabulated, std::move(spec), std::move(parts));
}

StandardizedDistribution make_mixture(const std::vector<std::pair<double, StandardizedDistribution>>& comps) {
  if (comps.empty()) throw DistributionError("mixture needs components");
  double total = 0.0;
  for (const auto& [w, d] : comps) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DistributionError("mixture weight must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw DistributionError("mixture weights sum to zero");
  DistributionSpec spec{"mixture", json::object()};
  spec.params["components"] = json::array();
  std::vector<WeightedPart> parts;
  for (const auto& [w, d] : comps) {
    if (w == 0.0) continue;
    spec.params["components"].push_back({{"weight", w / total}, {"dist", d.spec()}});
    for (const auto& wp : d.parts()) parts.push_back({w / total * wp.weight, wp.part});
  }
  return StandardizedDistribution(DistKind::mixture, std::move(spec), std::move(parts));
}

// ---- sampling -------------------------------------------------------------------

Sampler::Sampler(const StandardizedDistribution& dist, std::uint64_t seed)
    : dist_(&dist), rng_(seed), normal_(0.0, 1.0) {}

double Sampler::draw_part(const Part& part) {
  if (auto* g = std::get_if<GaussianPart>(&part)) return g->sigma * normal_(rng_);
  if (auto* u = std::get_if<UniformPart>(&part)) return u->half_width * (2.0 * rng_.uniform01() - 1.0);
  if (auto* l = std::get_if<LaplacePart>(&part)) {
    const double e = -l->scale * std::log(rng_.uniform01());
    return (rng_() >> 63) ? e : -e;
  }
  if (auto* a = std::get_if<AtomPart>(&part)) {
    if (a->values.size() == 2) return rng_.uniform01() <= a->probs[0] ? a->values[0] : a->values[1];
    return part_quantile(part, rng_.uniform01());
  }
  return part_quantile(part, rng_.uniform01());
}

double Sampler::operator()() {
  const auto& parts = dist_->parts();
  if (parts.size() == 1) return draw_part(parts.front().part);
  const double u = rng_.uniform01();
  const auto& cum = dist_->part_cum_;
  const std::size_t i = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  return draw_part(parts[std::min(i, parts.size() - 1)].part);
}

void Sampler::fill(std::span<double> out) {
  for (double& v : out) v = (*this)();
}

std::vector<double> sample(const StandardizedDistribution& dist, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DistributionError("sample size must be at least 1");
  std::vector<double> out(n);
  Sampler s(dist, seed);
  s.fill(out);
  return out;
}

// ---- moments ----------------------------------------------------------------------

double abs_moment(const StandardizedDistribution& dist, double k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DistributionError("absolute moment order must be a positive real");
  const double zero = 0.0;
  const double v = dist.expect([k](double y) { return std::pow(std::abs(y), k); }, std::span<const double>(&zero, 1));
  if (!std::isfinite(v)) throw DistributionError("absolute moment is not finite");
  return v;
}

std::vector<double> default_p_grid(std::size_t n, double pmax) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = n == 1 ? 1.0 : std::exp(std::log(pmax) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return g;
}

namespace {

template <class LogMoment>
PsiNormEstimate psi_from_log_moments(int q, std::span<const double> p_grid, const LogMoment& log_moment) {
  if (q != 1 && q != 2) throw DistributionError("psi norm order must be 1 or 2");
  if (p_grid.empty()) throw DistributionError("p grid must be non-empty");
  PsiNormEstimate est;
  est.value = -kInf;
  std::size_t best = 0;
  for (std::size_t i = 0; i < p_grid.size(); ++i) {
    const double p = p_grid[i];
    if (!(p >= 1.0)) throw DistributionError("p grid values must be >= 1");
    const double lm = log_moment(p);
    if (!std::isfinite(lm) && lm > 0.0) throw DistributionError("moment of order " + std::to_string(p) + " is infinite");
    const double v = std::exp(lm / p - std::log(p) / q);
    if (v > est.value) {
      est.value = v;
      est.argmax_p = p;
      best = i;
    }
  }
  const double pmax = *std::max_element(p_grid.begin(), p_grid.end());
  est.at_grid_end = p_grid.size() > 1 && (best + 1 == p_grid.size() || p_grid[best] == pmax);
  return est;
}

}  // namespace

PsiNormEstimate psi_norm(const StandardizedDistribution& dist, int q, std::span<const double> p_grid) {
  return psi_from_log_moments(q, p_grid, [&dist](double p) { return dist.log_abs_moment(p); });
}

PsiNormEstimate psi_norm_from_sample(std::span<const double> xs, int q, std::span<const double> p_grid) {
  if (xs.empty()) throw DistributionError("empty sample");
  std::vector<double> logs;
  logs.reserve(xs.size());
  for (double x : xs) {
    if (x != 0.0) logs.push_back(std::log(std::abs(x)));
  }
  const double logn = std::log(static_cast<double>(xs.size()));
  std::vector<double> terms(logs.size());
  return psi_from_log_moments(q, p_grid, [&](double p) {
    for (std::size_t i = 0; i < logs.size(); ++i) terms[i] = p * logs[i];
    return (terms.empty() ? -kInf : log_sum_exp(terms)) - logn;
  });
}

MomentReport moment_report(const StandardizedDistribution& dist) {
  MomentReport r;
  r.abs_moment_3 = abs_moment(dist, 3.0);
  r.abs_moment_4 = abs_moment(dist, 4.0);
  r.abs_moment_6 = abs_moment(dist, 6.0);
  const auto grid = default_p_grid();
  const auto p2 = psi_norm(dist, 2, grid);
  const auto p1 = psi_norm(dist, 1, grid);
  r.psi2 = p2.value;
  r.psi1 = p1.value;
  r.psi2_at_grid_end = p2.at_grid_end;
  r.psi1_at_grid_end = p1.at_grid_end;
  return r;
}

void to_json(json& j, const MomentReport& r) {
  j = json{{"abs_moment_3", r.abs_moment_3}, {"abs_moment_4", r.abs_moment_4}, {"abs_moment_6", r.abs_moment_6},
           {"psi2", r.psi2}, {"psi1", r.psi1}, {"psi2_at_grid_end", r.psi2_at_grid_end},
           {"psi1_at_grid_end", r.psi1_at_grid_end}, {"psi_grid_approximation", true}};
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_quantile(double u) { return gsl_cdf_ugaussian_Pinv(u); }

}  // namespace ssns
