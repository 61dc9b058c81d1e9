#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ssns/bench.hpp"

using namespace ssns;

namespace {

json small_config() {
  return json{{"dist", "gaussian"},
              {"link", {{"kind", "linear"}}},
              {"x", {{"unit_sparse", {{"s", 2}, {"d", 32}, {"seed", 3}}}}},
              {"K", {{"kind", "sparse"}}},
              {"m_grid", {8, 128, 256, 512, 4096}},
              {"n_trials", 6},
              {"base_seed", 42},
              {"alpha_samples", 20000},
              {"width_samples", 2000},
              {"psi_samples", 20000}};
}

std::string csv_of(const SweepResult& r) {
  std::ostringstream os;
  write_csv(os, r.rows);
  return os.str();
}

TrialRow synthetic(std::size_t m, double eps, double err) {
  TrialRow r;
  r.m = m;
  r.eps = eps;
  r.err_scaled = err;
  r.lambda = 1.0;
  r.err_normalized = err;
  r.u = 2;
  r.c0 = 1;
  r.psi2_a = r.psi2_y = 1;
  return r;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(config_from_json(small_config()));
  auto bad = small_config();
  bad["u"] = 1.5;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["m_grid"] = {128, 64};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["n_trials"] = 0;
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["x"] = {{"vector", {1.0, 1.0}}};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["dist"] = "cauchy";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad.erase("x");
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = small_config();
  bad["eps_grid"] = {0.5, 1.2};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);

  const auto c = config_from_json(small_config());
  const auto again = config_from_json(config_to_json(c));
  CHECK(again.x == c.x);
  CHECK(again.m_grid == c.m_grid);
}

TEST_CASE("unit_sparse") {
  const auto x = unit_sparse(4, 50, 1);
  CHECK(norm2(x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::count_if(x.begin(), x.end(), [](double e) { return e != 0; }) == 4);
  CHECK(unit_sparse(4, 50, 1) == x);
}

TEST_CASE("csv round trip is lossless") {
  std::vector<TrialRow> rows;
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    TrialRow r;
    r.m = 1 + rng() % 100000;
    r.eps = rng.uniform01();
    r.trial = i;
    r.seed = rng();
    r.err_scaled = rng.uniform01() * 1e-7;
    r.err_normalized = i % 5 ? rng.uniform01() : std::numeric_limits<double>::quiet_NaN();
    r.lambda = std::sqrt(2 / M_PI);
    r.alpha_mc = rng.uniform01();
    r.alpha_bound = std::numeric_limits<double>::quiet_NaN();
    r.width_mean = 1e300 * rng.uniform01();
    r.bound_value = -rng.uniform01();
    r.psi2_a = M_PI;
    r.psi2_y = 1.0 / 3.0;
    r.u = 2;
    r.c0 = 0.1;
    rows.push_back(r);
  }
  std::stringstream ss;
  write_csv(ss, rows);
  const auto back = read_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].m == rows[i].m);
    CHECK(back[i].seed == rows[i].seed);
    CHECK(back[i].eps == rows[i].eps);
    CHECK(back[i].err_scaled == rows[i].err_scaled);
    CHECK(back[i].width_mean == rows[i].width_mean);
    CHECK(back[i].psi2_y == rows[i].psi2_y);
    CHECK(std::isnan(back[i].alpha_bound));
    CHECK(std::isnan(back[i].err_normalized) == std::isnan(rows[i].err_normalized));
  }
  std::stringstream bad("m,eps\n1,2\n");
  CHECK_THROWS_AS(read_csv(bad), ConfigError);
}

TEST_CASE("sweep") {
  const auto c = config_from_json(small_config());
  const auto r = run_sweep(c, 1);
  REQUIRE(r.rows.size() == 5 * 6);

  SUBCASE("rows are sorted canonically and seeds are derived") {
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      const auto& a = r.rows[i - 1];
      const auto& b = r.rows[i];
      CHECK((a.m < b.m || (a.m == b.m && a.trial < b.trial)));
    }
    for (const auto& row : r.rows) CHECK(row.seed == derive_seed(42, {row.m, double_bits(row.eps), row.trial}));
  }
  SUBCASE("bound_value is recomputable from the row") {
    for (const auto& row : r.rows) {
      CHECK(std::abs(row.bound_value - error_bound(row.alpha_mc, row.c0, row.psi2_a, row.psi2_y, row.width_mean,
                                                     row.u, row.m)) <= 1e-9);
    }
  }
  SUBCASE("alpha = 0 cell reduces to the rate term") {
    REQUIRE(r.cells.size() == 1);
    CHECK(r.cells[0].alpha_mc == 0.0);
    CHECK(r.cells[0].lambda == doctest::Approx(1.0).epsilon(1e-12));
    const auto& row = r.rows.front();
    CHECK(row.bound_value == doctest::Approx((row.psi2_a * row.psi2_a + row.psi2_y * row.psi2_y) *
                                             (row.width_mean + row.u) / std::sqrt(double(row.m))));
  }
  SUBCASE("error decreases with m") {
    CHECK(r.summary.back().err_scaled_mean < r.summary.front().err_scaled_mean);
  }
  SUBCASE("small m is flagged inadmissible") {
    const std::size_t need = min_samples(r.width);
    REQUIRE(need > 8);
    CHECK_FALSE(r.summary.front().admissible);
    CHECK(r.summary.back().admissible);
    CHECK(summary_to_json(r.summary.front())["flag"] == "inadmissible");
  }
  SUBCASE("parallel run is byte-identical") {
    CHECK(csv_of(run_sweep(c, 4)) == csv_of(r));
    CHECK(csv_of(run_sweep(c, 1)) == csv_of(r));
  }
  SUBCASE("summary json") {
    const auto j = sweep_summary_json(c, r);
    CHECK(j["schema"] == "ssns-1");
    CHECK(j["cells"].size() == 5);
    CHECK(j["fit"].is_array());
  }
}

TEST_CASE("negative lambda disables the normalized branch") {
  auto j = small_config();
  j["link"] = {{"kind", "linear"}, {"params", {{"mu", -1.0}}}};
  j["m_grid"] = {64, 128};
  j["n_trials"] = 2;
  const auto c = config_from_json(j);
  const auto r = run_sweep(c, 1);
  CHECK(r.cells[0].lambda < 0);
  for (const auto& s : r.summary) {
    CHECK_FALSE(s.normalized_bound);
    CHECK(summary_to_json(s)["normalized_bound"] == "N/A");
  }
}

TEST_CASE("bound report: violations and calibrated C0") {
  std::vector<TrialRow> rows;
  for (int t = 0; t < 10; ++t) {
    auto r = synthetic(100, 1.0, 0.1 * (t + 1));
    r.width_mean = 3;
    r.trial = t;
    r.bound_value = error_bound(0, 1, 1, 1, 3, 2, 100);  // = 1.0
    rows.push_back(r);
  }
  const auto s = summarize(rows);
  REQUIRE(s.size() == 1);
  CHECK(s[0].bound_value == doctest::Approx(1.0));
  CHECK(s[0].violations == 0);
  CHECK(s[0].calibrated_c0 == doctest::Approx(1.0));  // worst trial sits on the bound
  CHECK(s[0].allowed_rate == doctest::Approx(4 * std::exp(-2.0)));
  CHECK(*s[0].normalized_bound == doctest::Approx(2.0));
  CHECK(s[0].err_scaled_q50 == doctest::Approx(0.55));
}

TEST_CASE("fit_rate") {
  SUBCASE("constant error has zero slope") {
    std::vector<TrialRow> rows;
    for (std::size_t m : {100, 200, 400, 800, 1600}) rows.push_back(synthetic(m, 1.0, 0.3));
    const auto f = fit_rate(rows, {});
    REQUIRE(f.size() == 1);
    REQUIRE(f[0].slope);
    CHECK(std::abs(*f[0].slope) <= 1e-6);
  }
  SUBCASE("two groups give two labeled slopes") {
    std::vector<TrialRow> rows;
    for (std::size_t m : {100, 200, 400, 800}) {
      rows.push_back(synthetic(m, 0.5, 1 / std::sqrt(double(m))));
      rows.push_back(synthetic(m, 1.0, 1.0 / m));
    }
    const auto f = fit_rate(rows, {"eps"});
    REQUIRE(f.size() == 2);
    CHECK(f[0].group == "eps=0.5");
    CHECK(*f[0].slope == doctest::Approx(-0.5));
    CHECK(f[1].group == "eps=1");
    CHECK(*f[1].slope == doctest::Approx(-1.0));
  }
  SUBCASE("fewer than 4 m values is an error") {
    std::vector<TrialRow> rows;
    for (std::size_t m : {100, 200, 400}) rows.push_back(synthetic(m, 1.0, 0.3));
    CHECK_THROWS(fit_rate(rows, {}));
  }
  SUBCASE("nonpositive residuals are skipped with a reason") {
    std::vector<TrialRow> rows;
    for (std::size_t m : {100, 200, 400, 800}) {
      auto r = synthetic(m, 1.0, 0.1);
      r.alpha_mc = 0.2;
      rows.push_back(r);
    }
    const auto f = fit_rate(rows, {}, true);
    CHECK_FALSE(f[0].slope);
    CHECK_FALSE(f[0].skipped.empty());
  }
}
