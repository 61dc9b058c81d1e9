#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ssns/distributions.hpp"

using namespace ssns;

namespace {

const char* kKinds[] = {"gaussian", "rademacher", "uniform", "laplace"};

std::vector<StandardizedDistribution> builtins() {
  std::vector<StandardizedDistribution> out;
  for (const char* k : kKinds) out.push_back(make_distribution(k));
  out.push_back(make_distribution("scaled_bernoulli", {{"p", 0.2}}));
  out.push_back(make_distribution("two_point", {{"w", 3.0}}));
  out.push_back(make_distribution("discrete", {{"values", {-2.0, 0.0, 1.0, 5.0}}, {"probs", {0.3, 0.3, 0.3, 0.1}}}));
  // triangle density on [-1, 2], rescaled on construction
  out.push_back(make_tabulated({-1.0, 0.0, 2.0}, {0.0, 2.0 / 3.0, 0.0}));
  out.push_back(make_mixture({{0.7, make_distribution("gaussian")}, {0.3, make_distribution("laplace")}}));
  return out;
}

}  // namespace

TEST_CASE("built-in laws are standardized") {
  for (const auto& d : builtins()) {
    CAPTURE(d.name());
    CHECK(std::abs(d.expect([](double t) { return t; })) <= 1e-10);
    CHECK(std::abs(d.expect([](double t) { return t * t; }) - 1.0) <= 1e-10);
    CHECK(std::abs(d.mean()) <= 1e-10);
    CHECK(std::abs(d.second_moment() - 1.0) <= 1e-10);
  }
}

TEST_CASE("Lyapunov chain E|a| <= 1 <= E|a|^3") {
  for (const auto& d : builtins()) {
    CAPTURE(d.name());
    CHECK(abs_moment(d, 1.0) <= 1.0 + 1e-8);
    CHECK(abs_moment(d, 3.0) >= 1.0 - 1e-8);
  }
}

TEST_CASE("closed-form densities") {
  auto g = make_distribution("gaussian");
  CHECK(g.density(0.3) == doctest::Approx(std::exp(-0.045) / std::sqrt(2 * M_PI)).epsilon(1e-14));
  auto lap = make_distribution("laplace");
  for (double y : {-2.0, -0.1, 0.0, 0.7, 3.0}) {
    CHECK(lap.density(y) == doctest::Approx(std::exp(-std::sqrt(2.0) * std::abs(y)) / std::sqrt(2.0)).epsilon(1e-13));
  }
  auto r = make_distribution("rademacher");
  CHECK(r.is_discrete());
  CHECK(r.cdf(-1.0) == doctest::Approx(0.5));
  CHECK(r.cdf(-1.0 - 1e-12) == 0.0);
  auto u = make_distribution("uniform");
  CHECK(u.support_hi() == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("cdf is monotone and quantile inverts it") {
  for (const auto& d : builtins()) {
    if (d.is_discrete()) continue;
    CAPTURE(d.name());
    double prev = -1.0;
    for (int i = -400; i <= 400; ++i) {
      const double y = i * 0.01;
      const double c = d.cdf(y);
      CHECK(c >= prev - 1e-15);
      prev = c;
      if (c > 1e-6 && c < 1 - 1e-6 && d.density(y) > 1e-3) CHECK(std::abs(d.quantile(c) - y) <= 1e-8);
    }
  }
}

TEST_CASE("absolute moments") {
  CHECK(abs_moment(make_distribution("gaussian"), 1) == doctest::Approx(std::sqrt(2 / M_PI)).epsilon(1e-10));
  CHECK(abs_moment(make_distribution("gaussian"), 3) == doctest::Approx(std::sqrt(8 / M_PI)).epsilon(1e-10));
  CHECK(abs_moment(make_distribution("rademacher"), 3) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(abs_moment(make_distribution("laplace"), 3) == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-9));
  CHECK_THROWS(abs_moment(make_distribution("gaussian"), 0.0));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(make_distribution("scaled_bernoulli", {{"p", 1.5}}), DistributionError);
  CHECK_THROWS_AS(make_distribution("discrete", {{"values", {2.0, 2.0}}, {"probs", {0.5, 0.5}}}), DistributionError);
  CHECK_THROWS_AS(make_distribution("cauchy"), DistributionError);
}

TEST_CASE("spec JSON round trip") {
  for (const auto& d : builtins()) {
    if (d.kind() == DistKind::tabulated) continue;
    CAPTURE(d.name());
    json j = d.spec();
    auto back = make_distribution(j.get<DistributionSpec>());
    for (double y : {-1.3, 0.0, 0.4, 2.2}) CHECK(back.cdf(y) == doctest::Approx(d.cdf(y)).epsilon(1e-14));
  }
  CHECK(make_distribution(json("laplace").get<DistributionSpec>()).kind() == DistKind::laplace);
}

TEST_CASE("sampling") {
  auto r = sample(make_distribution("rademacher"), 4, 9);
  for (double v : r) CHECK(std::abs(v) == 1.0);

  const std::size_t n = 1000000;
  auto g = sample(make_distribution("gaussian"), n, 1);
  double m = 0.0;
  for (double v : g) m += v;
  CHECK(std::abs(m / n) <= 4.0 / std::sqrt(double(n)));

  auto u = sample(make_distribution("uniform"), n, 2);
  for (double v : u) {
    if (std::abs(v) > std::sqrt(3.0)) FAIL("uniform draw outside support");
  }
  CHECK(sample(make_distribution("laplace"), 100, 5) == sample(make_distribution("laplace"), 100, 5));
  CHECK(sample(make_distribution("laplace"), 100, 5) != sample(make_distribution("laplace"), 100, 6));
}

TEST_CASE("sampled moments match the law") {
  for (const auto& d : builtins()) {
    CAPTURE(d.name());
    const std::size_t n = 200000;
    auto xs = sample(d, n, 77);
    double s1 = 0, s2 = 0;
    for (double v : xs) {
      s1 += v;
      s2 += v * v;
    }
    const double m4 = std::max(abs_moment(d, 4.0), 1.0);
    CHECK(std::abs(s1 / n) <= 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(s2 / n - 1.0) <= 4.0 * std::sqrt((m4 - 1.0) / n) + 1e-12);
  }
}

TEST_CASE("psi norms") {
  auto grid = default_p_grid();
  auto r = psi_norm(make_distribution("rademacher"), 2, grid);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.argmax_p == doctest::Approx(1.0));

  // refine-the-grid oracle
  auto g = make_distribution("gaussian");
  std::vector<double> fine(640);
  for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = std::pow(200.0, double(i) / (fine.size() - 1));
  CHECK(std::abs(psi_norm(g, 2, grid).value - psi_norm(g, 2, fine).value) <= 1e-3);

  auto lap = make_distribution("laplace");
  auto l1 = psi_norm(lap, 1, grid);
  CHECK(std::isfinite(l1.value));
  CHECK_FALSE(l1.at_grid_end);
  auto l2 = psi_norm(lap, 2, grid);
  CHECK(l2.at_grid_end);
  CHECK(psi_norm(lap, 2, default_p_grid(64, 400)).value > l2.value);
}

TEST_CASE("product psi norm inequality") {
  // |XY|_psi1 <= 2 |X|_psi2 |Y|_psi2, Monte Carlo moments for the product
  auto grid = default_p_grid(32, 40);
  const std::size_t n = 1000000;
  auto x = sample(make_distribution("uniform"), n, 3);
  auto y = sample(make_distribution("rademacher"), n, 4);
  auto z = sample(make_distribution("gaussian"), n, 5);
  std::vector<double> xy(n), xz(n);
  for (std::size_t i = 0; i < n; ++i) {
    xy[i] = x[i] * y[i];
    xz[i] = x[i] * z[i];
  }
  const double ux = psi_norm(make_distribution("uniform"), 2, grid).value;
  const double ry = psi_norm(make_distribution("rademacher"), 2, grid).value;
  const double gz = psi_norm(make_distribution("gaussian"), 2, grid).value;
  CHECK(psi_norm_from_sample(xy, 1, grid).value <= 1.05 * 2 * ux * ry);
  CHECK(psi_norm_from_sample(xz, 1, grid).value <= 1.05 * 2 * ux * gz);
}

TEST_CASE("moment report") {
  auto rep = moment_report(make_distribution("gaussian"));
  CHECK(rep.abs_moment_3 >= 1.0);
  CHECK(rep.abs_moment_4 == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(rep.abs_moment_6 == doctest::Approx(15.0).epsilon(1e-9));
  CHECK(rep.psi2 > 0.0);
}
