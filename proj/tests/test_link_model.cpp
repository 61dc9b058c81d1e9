#include <cmath>

#include "doctest.h"
#include "ssns/link_model.hpp"
#include "ssns/zero_bias.hpp"

using namespace ssns;

namespace {

const double kC = std::sqrt(2 / M_PI);

std::vector<double> unit(std::vector<double> v) {
  const double n = norm2(v);
  for (double& e : v) e /= n;
  return v;
}

}  // namespace

TEST_CASE("link metadata") {
  const auto s = make_link("sign");
  CHECK(s.is_sign);
  CHECK(s(0.0) == 1.0);
  CHECK(s(-1e-300) == -1.0);
  for (const char* k : {"linear", "tanh", "relu", "logistic"}) {
    const auto l = make_link(k);
    REQUIRE(l.lipschitz_const);
    double worst = 0.0;
    for (int i = -2000; i < 2000; ++i) {
      const double a = i * 5e-3, b = a + 5e-3;
      worst = std::max(worst, std::abs(l(b) - l(a)) / (b - a));
    }
    CAPTURE(k);
    CHECK(worst <= *l.lipschitz_const * (1 + 1e-6));
  }
  CHECK(*make_link("tanh").second_deriv_bound == doctest::Approx(4 / (3 * std::sqrt(3.0))).epsilon(1e-12));
  // grid + refinement oracle for tanh''
  const double num = numeric_second_deriv_bound([](double w) {
    const double t = std::tanh(w);
    return -2 * t * (1 - t * t);
  });
  CHECK(num == doctest::Approx(4 / (3 * std::sqrt(3.0))).epsilon(1e-8));
  CHECK(*make_link("logistic").second_deriv_bound == doctest::Approx(0.25 * 4 / (3 * std::sqrt(3.0))).epsilon(1e-8));
  CHECK_FALSE(make_link("relu").second_deriv_bound);
  CHECK_THROWS(make_link("cubic"));
  CHECK(link_from_json(link_to_json(make_link("linear", {{"mu", 2.5}})))(2.0) == 5.0);
}

TEST_CASE("model validation") {
  const auto g = make_distribution("gaussian");
  CHECK_THROWS_AS(SensingModel(g, make_link("sign"), {1.0, 1.0}), ModelError);
  CHECK_THROWS_AS(SensingModel(g, make_link("tanh"), {1.0}, Channel{ChannelKind::bit_flip, 0.0, 0.1}), ModelError);
  CHECK_THROWS_AS(SensingModel(g, make_link("sign"), {1.0}, Channel{ChannelKind::bit_flip, 0.0, 0.5}), ModelError);
  const SensingModel m(g, make_link("sign"), {1.0}, Channel{ChannelKind::bit_flip, 0.0, 0.1});
  CHECK(m.link_scale() == doctest::Approx(0.8));
}

TEST_CASE("lambda") {
  const auto g = make_distribution("gaussian");
  SUBCASE("linear link gives mu for any law") {
    for (const char* k : {"gaussian", "uniform", "rademacher"}) {
      const SensingModel m(make_distribution(k), make_link("linear", {{"mu", 1.7}}), {1.0});
      CHECK(lambda_of(m, LambdaMethod::quadrature).value == doctest::Approx(1.7).epsilon(1e-10));
    }
    const SensingModel md(make_distribution("laplace"), make_link("linear", {{"mu", 1.7}}), unit({1, 2, 3}));
    const auto mc = lambda_of(md, LambdaMethod::monte_carlo, 200000, 3);
    CHECK(std::abs(mc.value - 1.7) <= 4 * mc.std_error);
    CHECK_FALSE(mc.low_sample_warning);
    CHECK(lambda_of(md, LambdaMethod::monte_carlo, 1000, 3).low_sample_warning);
    CHECK_THROWS_AS(lambda_of(md, LambdaMethod::quadrature), ModelError);
  }
  SUBCASE("sign link, gaussian") {
    const SensingModel m(g, make_link("sign"), unit({1, -1, 2}));
    CHECK(lambda_of(m, LambdaMethod::quadrature).value == doctest::Approx(kC).epsilon(1e-10));
    const SensingModel f(g, make_link("sign"), {1.0}, Channel{ChannelKind::bit_flip, 0.0, 0.1});
    CHECK(lambda_of(f, LambdaMethod::quadrature).value == doctest::Approx(0.8 * kC).epsilon(1e-10));
  }
  SUBCASE("tanh, Gauss-Hermite is stable across orders") {
    const auto t = make_link("tanh");
    CHECK(std::abs(gaussian_lambda_hermite(t, 64) - gaussian_lambda_hermite(t, 96)) <= 1e-9);
    const double adaptive = integrate([](double w) { return w * std::tanh(w) * normal_pdf(w); },
                                      -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
    CHECK(gaussian_lambda_hermite(t, 96) == doctest::Approx(adaptive).epsilon(1e-9));
  }
}

TEST_CASE("v_x") {
  const auto g = make_distribution("gaussian");
  const auto x = unit({0.5, -1.0, 2.0, 0.0});
  SUBCASE("linear link") {
    const SensingModel m(g, make_link("linear", {{"mu", 2.0}}), x);
    const auto v = v_x_of(m, 200000, 4);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(v.v[j] - 2.0 * x[j]) <= 4 * v.std_error[j]);
  }
  SUBCASE("sign link") {
    const SensingModel m(g, make_link("sign"), x);
    const auto v = v_x_of(m, 200000, 5);
    for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(v.v[j] - kC * x[j]) <= 4 * v.std_error[j]);
    CHECK(v_x_of(m, 1000, 5).v == v_x_of(m, 1000, 5).v);
  }
  SUBCASE("rademacher, sign, x = e1 is exact") {
    const SensingModel m(make_distribution("rademacher"), make_link("sign"), {1.0, 0.0, 0.0});
    auto e = enumerate_population(m);
    REQUIRE(e);
    CHECK(e->v_x[0] == doctest::Approx(1.0));
    CHECK(e->v_x[1] == 0.0);
    CHECK(e->alpha == doctest::Approx(0.0));
  }
}

TEST_CASE("population summary") {
  const auto x = unit({1, 2, -1, 0.5});
  const SensingModel m(make_distribution("uniform"), make_link("sign"), x);
  const auto s = population_summary(m, 200000, 7);
  CHECK(std::abs(dot(s.v_x, x) - s.lambda) <= 3 * s.mc_stderr + 1e-15);
  std::vector<double> w(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) w[j] = s.v_x[j] - s.lambda * x[j];
  CHECK(s.alpha == doctest::Approx(norm2(w)).epsilon(1e-14));
  CHECK(s.alpha_debiased <= s.alpha);
  CHECK(population_summary(m, 5000, 9).alpha == population_summary(m, 5000, 9).alpha);
}

TEST_CASE("alpha vanishes for gaussian sensing and for linear links") {
  const std::size_t d = 8, n = 200000;
  std::vector<double> x(d, 1 / std::sqrt(double(d)));
  const SensingModel gt(make_distribution("gaussian"), make_link("tanh"), x);
  CHECK(alpha_of(gt, n, 1) <= 4 * std::sqrt(double(d)) / std::sqrt(double(n)));
  const SensingModel ul(make_distribution("laplace"), make_link("linear"), x);
  const auto s = population_summary(ul, n, 2);
  CHECK(s.alpha_debiased <= 4 * s.alpha_stderr + 1e-12);
}

TEST_CASE("alpha by enumeration: rademacher, sign, x = (e1 + e2)/sqrt 2") {
  const SensingModel m(make_distribution("rademacher"), make_link("sign"), unit({1, 1}));
  auto e = enumerate_population(m);
  REQUIRE(e);
  // outcomes (1,1)->+1, (1,-1)->+1 (tie), (-1,1)->+1 (tie), (-1,-1)->-1
  // v = 1/4 [(1,1) + (1,-1) + (-1,1) + (1,1)] = (1/2, 1/2)
  CHECK(e->v_x[0] == doctest::Approx(0.5));
  CHECK(e->v_x[1] == doctest::Approx(0.5));
  CHECK(e->lambda == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(e->alpha == doctest::Approx(0.0).epsilon(1e-14));
  const auto s = population_summary(m, 100000, 3);
  CHECK(std::abs(s.alpha_debiased - e->alpha) <= 4 * s.alpha_stderr);
}

TEST_CASE("alpha identity: the sup over the unit ball is the norm") {
  const auto x = unit({1, 0.3, -0.2});
  const SensingModel m(make_distribution("rademacher"), make_link("sign"), x);
  const auto e = *enumerate_population(m);
  std::vector<double> w(3);
  for (int j = 0; j < 3; ++j) w[j] = e.v_x[j] - e.lambda * x[j];
  const double norm = norm2(w);
  REQUIRE(norm > 0.01);
  Rng rng(11);
  std::normal_distribution<double> nd;
  double best = 0.0;
  for (int i = 0; i < 1000000; ++i) {
    double t[3] = {nd(rng), nd(rng), nd(rng)};
    const double tn = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    best = std::max(best, std::abs(w[0] * t[0] + w[1] * t[1] + w[2] * t[2]) / tn);
  }
  CHECK(best <= norm + 1e-9);
  CHECK(best >= (1 - 1e-3) * norm);
}

TEST_CASE("alpha bounds") {
  CHECK(alpha_bound_lipschitz(make_distribution("laplace")) == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(alpha_bound_lipschitz(make_distribution("gaussian")) <= 1e-9);
  CHECK_THROWS(alpha_bound_lipschitz(make_distribution("rademacher")));
  CHECK(alpha_bound_c2(make_distribution("gaussian"), make_link("tanh")) <= 1e-8);
  CHECK(alpha_bound_c2(make_distribution("rademacher"), make_link("tanh")) ==
        doctest::Approx(0.5 * 4 / (3 * std::sqrt(3.0))).epsilon(1e-9));
  CHECK(alpha_bound_c2(make_distribution("uniform"), make_link("linear")) == 0.0);
  CHECK_THROWS_AS(alpha_bound_c2(make_distribution("uniform"), make_link("relu")), ModelError);

  std::vector<double> x16(16, 0.25);
  CHECK(alpha_bound_sign(make_distribution("rademacher"), x16) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-10));
  CHECK(alpha_bound_sign(make_distribution("gaussian"), x16) <= 1e-4);
  const std::vector<double> e1 = {1.0, 0.0};
  try {
    alpha_bound_sign(make_distribution("gaussian"), e1);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(e.condition == "x_sup_norm");
  }
  try {
    alpha_bound_sign(make_distribution("scaled_bernoulli", {{"p", 0.3}}), x16);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(e.condition == "symmetric");
  }
}

TEST_CASE("bounds dominate the Monte Carlo alpha") {
  const auto x = unit({1, 0.5, -0.7, 0.3, 0.2, -0.4});
  const std::size_t n = 200000;
  for (const char* k : {"uniform", "laplace"}) {
    const auto d = make_distribution(k);
    const auto s = population_summary(SensingModel(d, make_link("tanh"), x), n, 1);
    CHECK(s.alpha_debiased <= alpha_bound_lipschitz(d) + 4 * s.alpha_stderr);
    CHECK(s.alpha_debiased <= alpha_bound_c2(d, make_link("tanh")) + 4 * s.alpha_stderr);
  }
  // the sign bound needs a spread-out direction
  std::vector<double> xs(12);
  for (std::size_t j = 0; j < xs.size(); ++j) xs[j] = (j % 2 ? -1.0 : 1.0) * (1.0 + 0.1 * double(j));
  xs = unit(xs);
  for (const char* k : {"uniform", "laplace"}) {
    const auto d = make_distribution(k);
    const auto s = population_summary(SensingModel(d, make_link("sign"), xs), n, 2);
    CHECK(s.alpha_debiased <= alpha_bound_sign(d, xs) + 4 * s.alpha_stderr);
  }
  const auto r = make_distribution("rademacher");
  const auto e = *enumerate_population(SensingModel(r, make_link("tanh"), x));
  CHECK(e.alpha <= alpha_bound_c2(r, make_link("tanh")) + 1e-12);
  const auto es = *enumerate_population(SensingModel(r, make_link("sign"), xs));
  CHECK(es.alpha <= alpha_bound_sign(r, xs) + 1e-12);
}

TEST_CASE("excess loss inequality") {
  const auto x = unit({1, -0.6, 0.4});
  const SensingModel m(make_distribution("rademacher"), make_link("sign"), x);
  const auto e = *enumerate_population(m);
  Rng rng(5);
  std::normal_distribution<double> nd;
  std::vector<double> lx(3);
  for (int j = 0; j < 3; ++j) lx[j] = e.lambda * x[j];
  const double l0 = population_loss(e.v_x, lx);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> t = {nd(rng), nd(rng), nd(rng)};
    double dist2 = 0;
    for (int j = 0; j < 3; ++j) dist2 += (t[j] - lx[j]) * (t[j] - lx[j]);
    const double dist = std::sqrt(dist2);
    CHECK(population_loss(e.v_x, t) - l0 >= dist2 - 2 * e.alpha * dist - 1e-12);
  }
}

TEST_CASE("lemma checks") {
  SUBCASE("gaussian") {
    const auto rep = v_x_lemma_checks(make_distribution("gaussian"), unit({1, 2, -1, 0.5, 1}), 200000, 3);
    CHECK_FALSE(rep.exact);
    CHECK(rep.all_pass());
  }
  SUBCASE("rademacher, exact enumeration") {
    std::vector<double> x = unit({1, 2, 1, 1, 2, 1, 1, 1, 2, 1, 1, 1});
    const auto rep = v_x_lemma_checks(make_distribution("rademacher"), x, 1, 0);
    CHECK(rep.exact);
    CHECK(rep.n == 4096);
    CHECK(rep.all_pass());
  }
  SUBCASE("uniform, random x") {
    Rng rng(21);
    std::normal_distribution<double> nd;
    std::vector<double> x(10);
    do {
      for (double& e : x) e = nd(rng);
      x = unit(x);
    } while (norm_inf(x) > 0.5);
    const auto rep = v_x_lemma_checks(make_distribution("uniform"), x, 1000000, 4);
    CHECK(rep.all_pass());
    for (const auto& c : rep.checks) CHECK(c.applicable);
  }
  SUBCASE("inapplicable lemmas are reported, not fatal") {
    const auto rep = v_x_lemma_checks(make_distribution("rademacher"), std::vector<double>{1.0, 0.0}, 1, 0);
    bool saw = false;
    for (const auto& c : rep.checks) {
      if (!c.applicable) {
        saw = true;
        CHECK_FALSE(c.precondition.empty());
      }
    }
    CHECK(saw);
  }
}
