#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ssns/zero_bias.hpp"

using namespace ssns;

namespace {

std::vector<StandardizedDistribution> continuous_laws() {
  return {make_distribution("gaussian"), make_distribution("uniform"), make_distribution("laplace"),
          make_tabulated({-1.0, 0.0, 2.0}, {0.0, 2.0 / 3.0, 0.0}),
          make_mixture({{0.6, make_distribution("uniform")}, {0.4, make_distribution("laplace")}})};
}

std::vector<StandardizedDistribution> all_laws() {
  auto v = continuous_laws();
  v.push_back(make_distribution("rademacher"));
  v.push_back(make_distribution("scaled_bernoulli", {{"p", 0.3}}));
  v.push_back(make_distribution("two_point", {{"w", 2.5}}));
  return v;
}

}  // namespace

TEST_CASE("zero-bias densities") {
  const ZeroBiasLaw g(make_distribution("gaussian"));
  for (double y : {-3.0, -0.5, 0.0, 1.2}) CHECK(g.density(y) == doctest::Approx(normal_pdf(y)).epsilon(1e-12));

  const ZeroBiasLaw r(make_distribution("rademacher"));
  CHECK(r.density(-0.99) == doctest::Approx(0.5));
  CHECK(r.density(0.5) == doctest::Approx(0.5));
  CHECK(r.density(1.0) == 0.0);
  CHECK(r.density(-1.5) == 0.0);
  CHECK(r.cdf(0.0) == doctest::Approx(0.5));

  const ZeroBiasLaw u(make_distribution("uniform"));
  for (double y : {-1.5, 0.0, 0.8, 1.7}) {
    CHECK(u.density(y) == doctest::Approx((3 - y * y) / (4 * std::sqrt(3.0))).epsilon(1e-12));
  }
}

TEST_CASE("zero-bias density is a unimodal probability density") {
  for (const auto& d : all_laws()) {
    CAPTURE(d.name());
    const ZeroBiasLaw s(d);
    const double lo = std::max(d.support_lo(), -40.0), hi = std::min(d.support_hi(), 40.0);
    CHECK(integrate([&](double y) { return s.density(y); }, lo, hi, d.break_points()) ==
          doctest::Approx(1.0).epsilon(1e-8));
    bool descending = false;
    double prev = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double y = lo + (hi - lo) * i / 2000.0;
      const double p = s.density(y);
      CHECK(p >= 0.0);
      if (p < prev - 1e-12) descending = true;
      if (descending) CHECK(p <= prev + 1e-12);
      prev = p;
    }
  }
}

TEST_CASE("zero-bias characterization E[a f(a)] = E[f'(a*)]") {
  struct Pair {
    RealFn f, df;
  };
  std::vector<Pair> family = {
      {[](double x) { return std::sin(x); }, [](double x) { return std::cos(x); }},
      {[](double x) { return std::tanh(x); }, [](double x) { return 1 - std::tanh(x) * std::tanh(x); }},
      {[](double x) { return std::clamp(x, -0.5, 0.5); }, [](double x) { return std::abs(x) < 0.5 ? 1.0 : 0.0; }}};
  for (const auto& d : all_laws()) {
    CAPTURE(d.name());
    const ZeroBiasLaw s(d);
    const double lo = std::max(d.support_lo(), -40.0), hi = std::min(d.support_hi(), 40.0);
    std::vector<double> cuts = d.break_points();
    cuts.push_back(-0.5);
    cuts.push_back(0.5);
    for (const auto& p : family) {
      const double lhs = d.expect([&](double a) { return a * p.f(a); });
      const double rhs = integrate([&](double y) { return p.df(y) * s.density(y); }, lo, hi, cuts);
      CHECK(std::abs(lhs - rhs) <= 1e-6);
    }
  }
}

TEST_CASE("gamma") {
  CHECK(gamma(make_distribution("gaussian")) <= 1e-8);
  CHECK(gamma(make_distribution("rademacher")) == doctest::Approx(0.5).epsilon(1e-10));
  const double gl = gamma(make_distribution("laplace"));
  CHECK(gl > 0.0);
  CHECK(gl <= 0.5 * 3.0 / std::sqrt(2.0));
  for (const auto& d : all_laws()) {
    CAPTURE(d.name());
    CHECK(gamma(d) <= 0.5 * abs_moment(d, 3.0) + 1e-8);
  }
}

TEST_CASE("gamma agrees with the monotone coupling") {
  const std::size_t n = 1000000;
  auto pairs = quantile_coupling_sample(make_distribution("rademacher"), n, 17);
  double s = 0, ss = 0;
  for (auto [a, b] : pairs) {
    const double v = std::abs(b - a);
    s += v;
    ss += v * v;
  }
  const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
  CHECK(std::abs(mean - 0.5) <= 3 * sd / std::sqrt(double(n)));

  for (auto [a, b] : quantile_coupling_sample(make_distribution("gaussian"), 1000, 3)) CHECK(a == b);
}

TEST_CASE("Monte Carlo zero-bias identity with f = sin") {
  const std::size_t n = 400000;
  for (const auto& d : all_laws()) {
    CAPTURE(d.name());
    auto pairs = quantile_coupling_sample(d, n, 23);
    double l = 0, ll = 0, r = 0, rr = 0;
    for (auto [a, b] : pairs) {
      const double u = a * std::sin(a), v = std::cos(b);
      l += u;
      ll += u * u;
      r += v;
      rr += v * v;
    }
    const double sd = std::sqrt((ll / n - (l / n) * (l / n)) + (rr / n - (r / n) * (r / n)));
    CHECK(std::abs(l / n - r / n) <= 4 * sd / std::sqrt(double(n)));
  }
}

TEST_CASE("zero bias of a weighted sum") {
  const auto rad = make_distribution("rademacher");
  SUBCASE("single coordinate reduces to the coupling") {
    const double w[] = {1.0, 0.0, 0.0};
    auto pairs = zero_bias_of_weighted_sum(w, rad, 20000, 5);
    double s = 0;
    for (auto [y, ys] : pairs) {
      CHECK(std::abs(y) == 1.0);
      CHECK(std::abs(ys) <= 1.0);
      s += std::abs(ys - y);
    }
    CHECK(std::abs(s / 20000 - 0.5) <= 0.02);
  }
  SUBCASE("E|Y* - Y| = gamma |w|_3^3") {
    std::vector<double> w = {0.6, 0.48, 0.64};
    const double n3 = 0.216 + 0.110592 + 0.262144;
    const std::size_t n = 400000;
    auto pairs = zero_bias_of_weighted_sum(w, rad, n, 6);
    double s = 0, ss = 0;
    for (auto [y, ys] : pairs) {
      s += std::abs(ys - y);
      ss += (ys - y) * (ys - y);
    }
    const double mean = s / n, sd = std::sqrt(ss / n - mean * mean);
    CHECK(std::abs(mean - 0.5 * n3) <= 4 * sd / std::sqrt(double(n)));
  }
  SUBCASE("Gaussian entries: Y* and Y share the law (two-sample KS)") {
    std::vector<double> w = {1.0, -2.0, 0.5};
    const std::size_t n = 100000;
    auto pairs = zero_bias_of_weighted_sum(w, make_distribution("gaussian"), n, 8);
    std::vector<double> a, b;
    for (auto [y, ys] : pairs) {
      a.push_back(y);
      b.push_back(ys);
    }
    // Y* taken from an independent run
    auto other = zero_bias_of_weighted_sum(w, make_distribution("gaussian"), n, 9);
    for (std::size_t i = 0; i < n; ++i) b[i] = other[i].second;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double dmax = 0;
    std::size_t i = 0, j = 0;
    while (i < n && j < n) {
      if (a[i] <= b[j]) {
        ++i;
      } else {
        ++j;
      }
      dmax = std::max(dmax, std::abs(double(i) - double(j)) / n);
    }
    CHECK(dmax <= 1.63 * std::sqrt(2.0 / n));  // alpha = 0.01
  }
  CHECK_THROWS(zero_bias_of_weighted_sum(std::vector<double>{0.0, 0.0}, rad, 10, 1));
}

TEST_CASE("Stein coefficients") {
  auto h = stein_coefficient(make_distribution("laplace"));
  REQUIRE(h);
  for (double y : {-2.0, -0.3, 0.0, 1.1}) CHECK((*h)(y) == doctest::Approx(0.5 * (1 + std::sqrt(2.0) * std::abs(y))));
  auto hg = stein_coefficient(make_distribution("gaussian"));
  for (double y : {-5.0, 0.0, 2.0}) CHECK((*hg)(y) == doctest::Approx(1.0).epsilon(1e-10));
  auto hu = stein_coefficient(make_distribution("uniform"));
  for (double y : {-1.5, 0.0, 1.0}) CHECK((*hu)(y) == doctest::Approx((3 - y * y) / 2));
  CHECK_FALSE(stein_coefficient(make_distribution("rademacher")));

  for (const auto& d : continuous_laws()) {
    CAPTURE(d.name());
    auto hd = stein_coefficient(d);
    REQUIRE(hd);
    CHECK(d.expect(*hd) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("E|1 - T| and total variation") {
  CHECK(e_one_minus_t(make_distribution("laplace")) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(e_one_minus_t(make_distribution("gaussian")) <= 1e-9);
  CHECK_THROWS_AS(e_one_minus_t(make_distribution("rademacher")), DistributionError);
  for (const auto& d : continuous_laws()) {
    CAPTURE(d.name());
    CHECK(std::abs(e_one_minus_t(d) - tv_to_zero_bias(d)) <= 1e-6);
  }
  const auto g = make_distribution("gaussian");
  CHECK(tv_distance(g, g) <= 1e-12);
  CHECK(tv_distance(make_distribution("rademacher"), g) == doctest::Approx(2.0));
  const auto lap = make_distribution("laplace");
  CHECK(tv_distance(lap, g) <= 2 * std::exp(-1.0));
  CHECK(tv_distance(lap, g) == doctest::Approx(tv_distance(g, lap)));
}

TEST_CASE("discrepancy relations between a, a* and g") {
  const auto g = make_distribution("gaussian");
  for (const auto& d : continuous_laws()) {
    CAPTURE(d.name());
    const double tvg = tv_distance(d, g);
    CHECK(tvg <= 2 * tv_to_zero_bias(d) + 1e-9);
    CHECK(tvg <= 2 * e_one_minus_t(d) + 1e-9);
  }
  // bounded support b: tv(a, a*) <= (1 + b^2) tv(a, g)
  const auto u = make_distribution("uniform");
  CHECK(tv_to_zero_bias(u) <= 4.0 * tv_distance(u, g));
  const auto tri = make_tabulated({-1.0, 0.0, 2.0}, {0.0, 2.0 / 3.0, 0.0});
  const double b = std::max(-tri.support_lo(), tri.support_hi());
  CHECK(tv_to_zero_bias(tri) <= (1 + b * b) * tv_distance(tri, g));
}

TEST_CASE("Stein equation solution for |x|") {
  const double c = std::sqrt(2 / M_PI);
  CHECK(std::abs(stein_solution_abs(0.0).f) <= 1e-15);
  CHECK(stein_solution_abs(1e-12).d2f == doctest::Approx(1.0).epsilon(1e-9));
  double max_d2 = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = i * 1e-3;
    const auto s = stein_solution_abs(x);
    CHECK(std::abs(s.df - x * s.f - (x - c)) <= 1e-8);
    max_d2 = std::max(max_d2, std::abs(s.d2f));
    if (i > 0 && i < 10000) {
      // finite-difference oracle for f'
      const double h = 1e-5;
      const double fd = (stein_solution_abs(x + h).f - stein_solution_abs(x - h).f) / (2 * h);
      CHECK(std::abs(fd - s.df) <= 1e-7);
    }
  }
  CHECK(max_d2 <= 1 + 1e-6);
  CHECK(max_d2 >= 0.999);
  // odd reflection: f and f'' odd, f' even
  for (double x : {0.3, 2.0, 9.5}) {
    CHECK(stein_solution_abs(-x).f == doctest::Approx(-stein_solution_abs(x).f));
    CHECK(stein_solution_abs(-x).df == doctest::Approx(stein_solution_abs(x).df));
    CHECK(stein_solution_abs(-x).d2f == doctest::Approx(-stein_solution_abs(x).d2f));
  }
  // the series and direct branches meet at 8
  CHECK(scaled_normal_tail(8.0 + 1e-9) == doctest::Approx(scaled_normal_tail(8.0)).epsilon(1e-10));
}

TEST_CASE("discrepancy report") {
  auto r = discrepancy_report(make_distribution("laplace"));
  REQUIRE(r.e_one_minus_t);
  CHECK(std::abs(*r.e_one_minus_t - r.tv_a_astar) <= 1e-6);
  CHECK(r.gamma_a <= 0.5 * r.third_abs_moment + 1e-8);
  auto rr = discrepancy_report(make_distribution("rademacher"));
  CHECK_FALSE(rr.e_one_minus_t);
  json j = rr;
  CHECK(j["e_one_minus_t"].is_null());
  CHECK(j["gamma_a"].get<double>() == doctest::Approx(0.5));
}
