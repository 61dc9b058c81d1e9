#include "ssns/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "ssns/zero_bias.hpp"

namespace ssns {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Stream tags for the per-config quantities (trial seeds use m >= 1 as first key).
constexpr std::uint64_t kTagAlpha = 0xa1fa;
constexpr std::uint64_t kTagWidth = 0x3d7;
constexpr std::uint64_t kTagPsi = 0x951;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double quantile_sorted(const std::vector<double>& xs, double q) {
  if (xs.empty()) return kNaN;
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

StandardizedDistribution cell_law(const ExperimentConfig& c, double eps) {
  ContaminationModel cm;
  cm.mode = c.contamination_mode;
  cm.eps = eps;
  cm.contaminant = make_distribution(c.contaminant ? *c.contaminant : c.dist);
  return contaminated_law(cm);
}

// Samples of y, streamed so A is never stored.
std::vector<double> sample_y(const SensingModel& model, std::size_t n, std::uint64_t seed) {
  Sampler sampler(model.dist(), derive_seed(seed, {0}));
  Rng noise(derive_seed(seed, {1}));
  std::normal_distribution<double> normal;
  std::vector<double> a(model.dim()), ys(n);
  for (auto& y : ys) {
    sampler.fill(a);
    y = model.link()(dot(a, model.x()));
    if (model.channel().kind == ChannelKind::additive_noise) y += model.channel().sigma_z * normal(noise);
    if (model.channel().kind == ChannelKind::bit_flip && noise.uniform01() < model.channel().q) y = -y;
  }
  return ys;
}

std::size_t support_size(const std::vector<double>& x) {
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [](double e) { return e != 0.0; }));
}

ConstraintSet make_k(const ExperimentConfig& c, double lambda) {
  const std::size_t d = c.x.size();
  const std::string kind = c.k_spec.value("kind", std::string("full_space"));
  const double scale = std::abs(lambda);
  if (kind == "sparse") return ConstraintSet::sparse(d, c.k_spec.value("s", support_size(c.x)));
  if (kind == "l1_ball") {
    double n1 = 0.0;
    for (double e : c.x) n1 += std::abs(e);
    return ConstraintSet::l1_ball(d, c.k_spec.value("radius", scale * n1));
  }
  if (kind == "l2_ball") return ConstraintSet::l2_ball(d, c.k_spec.value("radius", scale));
  if (kind == "full_space") return ConstraintSet::full_space(d);
  throw ConfigError("unknown K kind '" + kind + "'");
}

CellModel build_cell(const ExperimentConfig& c, double eps) {
  const SensingModel model = cell_model(c, eps);
  CellModel cell;
  cell.eps = eps;

  PopulationSummary pop;
  if (auto exact = enumerate_population(model)) {
    pop = *exact;
  } else {
    pop = population_summary(model, c.alpha_samples, derive_seed(c.base_seed, {kTagAlpha, double_bits(eps)}));
  }
  cell.alpha_mc = pop.exact ? pop.alpha : pop.alpha_debiased;
  cell.alpha_stderr = pop.alpha_stderr;
  cell.lambda = pop.lambda;
  if (!pop.exact && (model.dist().kind() == DistKind::gaussian || model.dim() == 1)) {
    cell.lambda = lambda_of(model, LambdaMethod::quadrature).value;
  }

  ContaminationModel cm{c.contamination_mode, eps, make_distribution(c.contaminant ? *c.contaminant : c.dist)};
  try {
    const BoundSet b = contaminated_alpha_bounds(cm, model.link(), model.x());
    cell.notes = b.notes;
    if (model.link().is_sign) {
      if (b.sign) {
        cell.alpha_bound = *b.sign * model.link_scale();
        cell.alpha_bound_kind = "sign";
      }
    } else if (b.lipschitz && (!b.c2 || *b.lipschitz <= *b.c2)) {
      cell.alpha_bound = b.lipschitz;
      cell.alpha_bound_kind = "lipschitz";
    } else if (b.c2) {
      cell.alpha_bound = b.c2;
      cell.alpha_bound_kind = "c2";
    }
  } catch (const std::exception& e) {
    cell.notes.push_back(std::string("alpha bound unavailable: ") + e.what());
  }
  // A proven bound beats a noisy estimate: alpha = 0 cells stay exactly 0.
  cell.alpha_raw = cell.alpha_mc;
  if (cell.alpha_bound && *cell.alpha_bound < cell.alpha_mc) {
    cell.alpha_mc = *cell.alpha_bound;
    cell.notes.push_back("alpha_mc capped at the proven alpha bound");
  }

  cell.psi2_a = psi_norm(model.dist(), 2, default_p_grid()).value;
  const auto ys = sample_y(model, c.psi_samples, derive_seed(c.base_seed, {kTagPsi, double_bits(eps)}));
  cell.psi2_y = psi_norm_from_sample(ys, 2, default_p_grid()).value;
  cell.k = make_k(c, cell.lambda);
  return cell;
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing key '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

std::vector<double> unit_sparse(std::size_t s, std::size_t d, std::uint64_t seed) {
  if (s < 1 || s > d) throw ConfigError("unit_sparse needs 1 <= s <= d");
  Rng rng(derive_seed(seed, {0}));
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (d - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<double> x(d, 0.0);
  const double v = 1.0 / std::sqrt(static_cast<double>(s));
  for (std::size_t i = 0; i < s; ++i) x[idx[i]] = (rng() >> 63) ? -v : v;
  return x;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    if (j.contains("dist")) c.dist = j.at("dist").get<DistributionSpec>();
    make_distribution(c.dist);
    if (j.contains("contamination")) {
      const json& cj = j.at("contamination");
      c.contamination_mode = contamination_mode_from_string(cj.value("mode", std::string("mixture")));
      if (cj.contains("contaminant")) {
        c.contaminant = cj.at("contaminant").get<DistributionSpec>();
        make_distribution(*c.contaminant);
      }
    }
    if (j.contains("link")) c.link = link_from_json(j.at("link"));
    if (j.contains("channel")) c.channel = channel_from_json(j.at("channel"));

    c.x_spec = required<json>(j, "x");
    if (c.x_spec.contains("unit_sparse")) {
      const json& us = c.x_spec.at("unit_sparse");
      c.x = unit_sparse(required<std::size_t>(us, "s"), required<std::size_t>(us, "d"), us.value("seed", std::uint64_t{0}));
    } else if (c.x_spec.contains("vector")) {
      c.x = c.x_spec.at("vector").get<std::vector<double>>();
    } else {
      throw ConfigError("x must be {\"unit_sparse\": {...}} or {\"vector\": [...]}");
    }
    if (j.contains("K")) c.k_spec = j.at("K");

    c.m_grid = required<std::vector<std::size_t>>(j, "m_grid");
    if (c.m_grid.empty()) throw ConfigError("m_grid must not be empty");
    for (std::size_t i = 0; i < c.m_grid.size(); ++i) {
      if (c.m_grid[i] < 1) throw ConfigError("m_grid entries must be >= 1");
      if (i > 0 && c.m_grid[i] <= c.m_grid[i - 1]) throw ConfigError("m_grid must be strictly ascending");
    }
    if (j.contains("eps_grid")) c.eps_grid = j.at("eps_grid").get<std::vector<double>>();
    if (c.eps_grid.empty()) throw ConfigError("eps_grid must not be empty");
    for (double e : c.eps_grid) {
      if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("eps values must lie in [0, 1]");
    }
    c.n_trials = j.value("n_trials", c.n_trials);
    if (c.n_trials < 1) throw ConfigError("n_trials must be >= 1");
    c.base_seed = j.value("base_seed", c.base_seed);
    c.u = j.value("u", c.u);
    if (!(c.u >= 2.0)) throw ConfigError("u must be >= 2");
    c.c0 = j.value("C0", c.c0);
    if (!(c.c0 > 0.0)) throw ConfigError("C0 must be > 0");
    c.alpha_samples = j.value("alpha_samples", c.alpha_samples);
    c.width_samples = j.value("width_samples", c.width_samples);
    c.psi_samples = j.value("psi_samples", c.psi_samples);
    if (c.alpha_samples < 2 || c.width_samples < 2 || c.psi_samples < 2) throw ConfigError("sample counts must be >= 2");
    const std::string off = j.value("fit_offset", std::string("none"));
    if (off != "none" && off != "two_alpha") throw ConfigError("fit_offset must be \"none\" or \"two_alpha\"");
    c.fit_two_alpha = off == "two_alpha";
    c.timing = j.value("timing", false);

    // Validates x, link and channel together.
    (void)SensingModel(make_distribution("gaussian"), c.link, c.x, c.channel);
    make_k(c, 1.0);
    return c;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

json config_to_json(const ExperimentConfig& c) {
  json j{{"dist", c.dist},
         {"link", link_to_json(c.link)},
         {"channel", channel_to_json(c.channel)},
         {"x", c.x_spec},
         {"K", c.k_spec},
         {"m_grid", c.m_grid},
         {"eps_grid", c.eps_grid},
         {"n_trials", c.n_trials},
         {"base_seed", c.base_seed},
         {"u", c.u},
         {"C0", c.c0},
         {"alpha_samples", c.alpha_samples},
         {"width_samples", c.width_samples},
         {"psi_samples", c.psi_samples},
         {"fit_offset", c.fit_two_alpha ? "two_alpha" : "none"},
         {"timing", c.timing}};
  j["contamination"] = {{"mode", to_string(c.contamination_mode)}};
  if (c.contaminant) j["contamination"]["contaminant"] = *c.contaminant;
  return j;
}

SensingModel cell_model(const ExperimentConfig& c, double eps) {
  return SensingModel(cell_law(c, eps), c.link, c.x, c.channel);
}

double error_bound(double alpha, double c0, double psi2_a, double psi2_y, double width, double u, std::size_t m) {
  return 2.0 * alpha + c0 * (psi2_a * psi2_a + psi2_y * psi2_y) * (width + u) / std::sqrt(static_cast<double>(m));
}

// ---- CSV ----------------------------------------------------------------------------

const std::string& csv_header() {
  static const std::string h =
      "m,eps,trial,seed,err_scaled,err_normalized,lambda,alpha_mc,alpha_bound,width_mean,bound_value,runtime_ms,"
      "psi2_a,psi2_y,u,c0";
  return h;
}

void write_csv(std::ostream& os, const std::vector<TrialRow>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) {
    os << r.m << ',' << fmt(r.eps) << ',' << r.trial << ',' << r.seed << ',' << fmt(r.err_scaled) << ','
       << fmt(r.err_normalized) << ',' << fmt(r.lambda) << ',' << fmt(r.alpha_mc) << ',' << fmt(r.alpha_bound) << ','
       << fmt(r.width_mean) << ',' << fmt(r.bound_value) << ',' << fmt(r.runtime_ms) << ',' << fmt(r.psi2_a) << ','
       << fmt(r.psi2_y) << ',' << fmt(r.u) << ',' << fmt(r.c0) << '\n';
  }
}

std::vector<TrialRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header()) throw ConfigError("unexpected CSV header");
  std::vector<TrialRow> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 16) throw ConfigError("CSV line " + std::to_string(lineno) + ": expected 16 fields");
    auto num = [&](std::size_t i) {
      char* end = nullptr;
      const double v = std::strtod(f[i].c_str(), &end);
      if (end == f[i].c_str() || *end != '\0') throw ConfigError("CSV line " + std::to_string(lineno) + ": bad number");
      return v;
    };
    auto whole = [&](std::size_t i) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(f[i].c_str(), &end, 10);
      if (end == f[i].c_str() || *end != '\0') throw ConfigError("CSV line " + std::to_string(lineno) + ": bad integer");
      return static_cast<std::uint64_t>(v);
    };
    TrialRow r;
    r.m = whole(0);
    r.eps = num(1);
    r.trial = whole(2);
    r.seed = whole(3);
    r.err_scaled = num(4);
    r.err_normalized = num(5);
    r.lambda = num(6);
    r.alpha_mc = num(7);
    r.alpha_bound = num(8);
    r.width_mean = num(9);
    r.bound_value = num(10);
    r.runtime_ms = num(11);
    r.psi2_a = num(12);
    r.psi2_y = num(13);
    r.u = num(14);
    r.c0 = num(15);
    rows.push_back(r);
  }
  return rows;
}

// ---- sweep --------------------------------------------------------------------------

SweepResult run_sweep(const ExperimentConfig& c, std::size_t threads) {
  SweepResult res;
  const std::size_t d = c.x.size();
  const std::string kind = c.k_spec.value("kind", std::string("full_space"));
  const std::uint64_t wseed = derive_seed(c.base_seed, {kTagWidth});
  if (kind == "sparse") {
    res.width = width_descent_cone_sparse_proxy(d, c.k_spec.value("s", support_size(c.x)), c.width_samples, wseed);
  } else {
    res.width = width_sparse_sphere(d, d, c.width_samples, wseed);
  }

  std::vector<SensingModel> models;
  for (double eps : c.eps_grid) {
    res.cells.push_back(build_cell(c, eps));
    models.push_back(cell_model(c, eps));
  }

  struct Task {
    std::size_t m, e, trial;
  };
  std::vector<Task> tasks;
  for (std::size_t m : c.m_grid) {
    for (std::size_t e = 0; e < c.eps_grid.size(); ++e) {
      for (std::size_t t = 0; t < c.n_trials; ++t) tasks.push_back({m, e, t});
    }
  }
  res.rows.resize(tasks.size());

  auto run_task = [&](std::size_t i) {
    const Task& tk = tasks[i];
    const CellModel& cell = res.cells[tk.e];
    const double eps = c.eps_grid[tk.e];
    TrialRow r;
    r.m = tk.m;
    r.eps = eps;
    r.trial = tk.trial;
    r.seed = derive_seed(c.base_seed, {tk.m, double_bits(eps), tk.trial});
    const auto start = std::chrono::steady_clock::now();
    const auto vh = generate_v_hat(models[tk.e], tk.m, r.seed);
    const auto xh = project(vh, cell.k);
    const RecoveryError err = recovery_error(xh, c.x, cell.lambda);
    r.err_scaled = err.err_scaled;
    r.err_normalized = err.err_normalized.value_or(kNaN);
    r.lambda = cell.lambda;
    r.alpha_mc = cell.alpha_mc;
    r.alpha_bound = cell.alpha_bound.value_or(kNaN);
    r.width_mean = res.width.mean;
    r.psi2_a = cell.psi2_a;
    r.psi2_y = cell.psi2_y;
    r.u = c.u;
    r.c0 = c.c0;
    r.bound_value = error_bound(r.alpha_mc, c.c0, r.psi2_a, r.psi2_y, r.width_mean, c.u, r.m);
    if (c.timing) {
      r.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    res.rows[i] = r;
  };

  threads = std::max<std::size_t>(1, std::min(threads, tasks.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) run_task(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = tasks.size();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::stable_sort(res.rows.begin(), res.rows.end(), [](const TrialRow& a, const TrialRow& b) {
    if (a.m != b.m) return a.m < b.m;
    if (a.eps != b.eps) return a.eps < b.eps;
    return a.trial < b.trial;
  });
  res.summary = summarize(res.rows);
  return res;
}

std::vector<CellSummary> summarize(const std::vector<TrialRow>& rows) {
  std::map<std::pair<std::size_t, double>, std::vector<const TrialRow*>> groups;
  for (const auto& r : rows) groups[{r.m, r.eps}].push_back(&r);
  std::vector<CellSummary> out;
  for (const auto& [key, rs] : groups) {
    CellSummary s;
    s.m = key.first;
    s.eps = key.second;
    s.n_trials = rs.size();
    const TrialRow& r0 = *rs.front();
    std::vector<double> es, ns;
    bool normalized = r0.lambda > 0.0;
    double need = 0.0;
    const double rate_term =
        (r0.psi2_a * r0.psi2_a + r0.psi2_y * r0.psi2_y) * (r0.width_mean + r0.u) / std::sqrt(static_cast<double>(s.m));
    for (const TrialRow* r : rs) {
      es.push_back(r->err_scaled);
      if (std::isnan(r->err_normalized)) {
        normalized = false;
      } else {
        ns.push_back(r->err_normalized);
      }
      if (r->err_scaled > r->bound_value) ++s.violations;
      if (rate_term > 0.0) need = std::max(need, (r->err_scaled - 2.0 * r->alpha_mc) / rate_term);
    }
    std::tie(s.err_scaled_mean, s.err_scaled_stderr) = mean_stderr(es);
    std::sort(es.begin(), es.end());
    s.err_scaled_q10 = quantile_sorted(es, 0.1);
    s.err_scaled_q50 = quantile_sorted(es, 0.5);
    s.err_scaled_q90 = quantile_sorted(es, 0.9);
    s.bound_value = r0.bound_value;
    s.violation_rate = static_cast<double>(s.violations) / static_cast<double>(s.n_trials);
    s.allowed_rate = 4.0 * std::exp(-r0.u);
    s.calibrated_c0 = need;
    if (normalized) {
      auto [mn, se] = mean_stderr(ns);
      s.err_normalized_mean = mn;
      s.err_normalized_stderr = se;
      s.normalized_bound = 2.0 * s.bound_value / r0.lambda;
      s.normalized_violations = static_cast<std::size_t>(
          std::count_if(ns.begin(), ns.end(), [&](double v) { return v > *s.normalized_bound; }));
    }
    s.min_samples = static_cast<std::size_t>(std::ceil(r0.width_mean * r0.width_mean));
    s.admissible = s.m >= s.min_samples;
    out.push_back(s);
  }
  return out;
}

std::vector<RateFit> fit_rate(const std::vector<TrialRow>& rows, const std::vector<std::string>& group_keys,
                              bool subtract_two_alpha) {
  bool by_eps = false;
  for (const auto& k : group_keys) {
    if (k == "eps") {
      by_eps = true;
    } else {
      throw std::invalid_argument("unsupported group key '" + k + "'");
    }
  }
  std::vector<std::size_t> ms;
  for (const auto& r : rows) ms.push_back(r.m);
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  if (ms.size() < 4) throw std::invalid_argument("fit_rate needs at least 4 distinct m values");

  // group -> m -> (sum err, sum alpha, count)
  std::map<double, std::map<std::size_t, std::array<double, 3>>> acc;
  for (const auto& r : rows) {
    auto& a = acc[by_eps ? r.eps : 0.0][r.m];
    a[0] += r.err_scaled;
    a[1] += r.alpha_mc;
    a[2] += 1.0;
  }
  std::vector<RateFit> out;
  for (const auto& [g, per_m] : acc) {
    RateFit f;
    f.group = by_eps ? "eps=" + fmt(g) : "all";
    std::vector<double> lx, ly;
    for (const auto& [m, a] : per_m) {
      const double resid = a[0] / a[2] - (subtract_two_alpha ? 2.0 * a[1] / a[2] : 0.0);
      if (resid > 0.0) {
        lx.push_back(std::log(static_cast<double>(m)));
        ly.push_back(std::log(resid));
      }
    }
    f.points = lx.size();
    if (lx.size() < 4) {
      f.skipped = "fewer than 4 m values with positive residual error";
    } else {
      const double n = static_cast<double>(lx.size());
      const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
      const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
      double sxy = 0.0, sxx = 0.0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
      }
      f.slope = sxy / sxx;
      f.intercept = my - *f.slope * mx;
    }
    out.push_back(f);
  }
  return out;
}

json summary_to_json(const CellSummary& s) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return json{{"m", s.m},
              {"eps", s.eps},
              {"n_trials", s.n_trials},
              {"err_scaled_mean", s.err_scaled_mean},
              {"err_scaled_stderr", s.err_scaled_stderr},
              {"err_scaled_q10", s.err_scaled_q10},
              {"err_scaled_q50", s.err_scaled_q50},
              {"err_scaled_q90", s.err_scaled_q90},
              {"err_normalized_mean", opt(s.err_normalized_mean)},
              {"err_normalized_stderr", opt(s.err_normalized_stderr)},
              {"bound_value", s.bound_value},
              {"violations", s.violations},
              {"violation_rate", s.violation_rate},
              {"allowed_rate", s.allowed_rate},
              {"calibrated_C0", s.calibrated_c0},
              {"normalized_bound", s.normalized_bound ? json(*s.normalized_bound) : json("N/A")},
              {"normalized_violations", opt(s.normalized_violations)},
              {"min_samples", s.min_samples},
              {"admissible", s.admissible},
              {"flag", s.admissible ? "" : "inadmissible"}};
}

json rate_fit_to_json(const RateFit& f) {
  json j{{"group", f.group}, {"points", f.points}};
  j["slope"] = f.slope ? json(*f.slope) : json(nullptr);
  j["intercept"] = f.intercept ? json(*f.intercept) : json(nullptr);
  if (!f.skipped.empty()) j["skipped"] = f.skipped;
  return j;
}

json sweep_summary_json(const ExperimentConfig& c, const SweepResult& r) {
  json j{{"schema", "ssns-1"}, {"config", config_to_json(c)}, {"width", r.width}, {"models", json::array()},
         {"cells", json::array()}};
  for (const auto& cell : r.cells) {
    j["models"].push_back({{"eps", cell.eps},
                           {"lambda", cell.lambda},
                           {"alpha_mc", cell.alpha_mc},
                           {"alpha_mc_raw", cell.alpha_raw},
                           {"alpha_stderr", cell.alpha_stderr},
                           {"alpha_bound", cell.alpha_bound ? json(*cell.alpha_bound) : json(nullptr)},
                           {"alpha_bound_kind", cell.alpha_bound_kind},
                           {"notes", cell.notes},
                           {"psi2_a", cell.psi2_a},
                           {"psi2_y", cell.psi2_y},
                           {"K", cell.k.describe()},
                           {"normalized_branch", cell.lambda > 0.0 ? "applies" : "N/A"}});
  }
  for (const auto& s : r.summary) j["cells"].push_back(summary_to_json(s));
  try {
    j["fit"] = json::array();
    for (const auto& f : fit_rate(r.rows, {"eps"}, c.fit_two_alpha)) j["fit"].push_back(rate_fit_to_json(f));
  } catch (const std::invalid_argument& e) {
    j["fit"] = json{{"skipped", e.what()}};
  }
  return j;
}

}  // namespace ssns
