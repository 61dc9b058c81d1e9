// stein-sense: command-line front end for the ssns library.
//
// Exit codes: 0 ok, 1 runtime failure, 2 config error, 3 precondition
// failure under --strict.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ssns/bench.hpp"
#include "ssns/zero_bias.hpp"

using namespace ssns;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kConfig = 2;
constexpr int kPrecondition = 3;

struct Common {
  std::string config_file;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string format = "json";
  bool strict = false;
};

struct StrictFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const Common& c) {
  if (c.config_file.empty()) return json::object();
  std::ifstream in(c.config_file);
  if (!in) throw ConfigError("cannot open config file '" + c.config_file + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

// Writes `body` to out_dir/name, or to stdout without --out.
void emit(const Common& c, const std::string& name, const std::string& body) {
  if (c.out_dir.empty()) {
    std::cout << body;
    if (!body.empty() && body.back() != '\n') std::cout << '\n';
    return;
  }
  fs::create_directories(c.out_dir);
  const fs::path p = fs::path(c.out_dir) / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << body;
  if (!body.empty() && body.back() != '\n') out << '\n';
  std::cerr << "wrote " << p.string() << '\n';
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flat JSON object -> two-line CSV (header, values).
std::string flat_csv(const json& j) {
  std::string head, vals;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.value().is_structured()) continue;
    if (!head.empty()) {
      head += ',';
      vals += ',';
    }
    head += it.key();
    if (it.value().is_number()) {
      vals += num(it.value().get<double>());
    } else if (it.value().is_null()) {
      vals += "nan";
    } else if (it.value().is_string()) {
      vals += it.value().get<std::string>();
    } else {
      vals += it.value().dump();
    }
  }
  return head + '\n' + vals + '\n';
}

json with_schema(json j) {
  json out{{"schema", "ssns-1"}};
  out.update(j);
  return out;
}

StandardizedDistribution dist_from(const json& cfg, const std::string& flag, const char* key = "dist") {
  if (!flag.empty()) {
    json j;
    try {
      j = json::parse(flag);
    } catch (const json::parse_error&) {
      j = flag;  // bare kind name
    }
    return make_distribution(j.get<DistributionSpec>());
  }
  if (cfg.contains(key)) return make_distribution(cfg.at(key).get<DistributionSpec>());
  return make_distribution("gaussian");
}

std::vector<double> x_from(const json& cfg, std::size_t default_d) {
  if (!cfg.contains("x")) {
    std::vector<double> x(default_d, 1.0 / std::sqrt(static_cast<double>(default_d)));
    return x;
  }
  const json& xs = cfg.at("x");
  if (xs.is_array()) return xs.get<std::vector<double>>();
  if (xs.contains("vector")) return xs.at("vector").get<std::vector<double>>();
  if (xs.contains("unit_sparse")) {
    const json& us = xs.at("unit_sparse");
    return unit_sparse(us.at("s").get<std::size_t>(), us.at("d").get<std::size_t>(), us.value("seed", std::uint64_t{0}));
  }
  throw ConfigError("x must be an array, {\"vector\": [...]} or {\"unit_sparse\": {...}}");
}

// ---- subcommands --------------------------------------------------------------------

int cmd_discrepancy(const Common& c, const std::string& dist_flag) {
  const json cfg = load_config(c);
  const auto dist = dist_from(cfg, dist_flag);
  json j = discrepancy_report(dist);
  j["dist"] = dist.spec();
  j["moments"] = moment_report(dist);
  j["symmetric"] = dist.is_symmetric();
  if (c.format == "csv") {
    json flat = j;
    flat.erase("dist");
    flat.erase("moments");
    flat["kind"] = dist.name();
    emit(c, "discrepancy.csv", flat_csv(flat));
  } else {
    emit(c, "discrepancy.json", with_schema(j).dump(2));
  }
  return kOk;
}

int cmd_contaminate(const Common& c, const std::string& mode_flag, std::optional<double> eps_flag,
                    const std::string& contaminant_flag) {
  json cfg = load_config(c);
  if (!mode_flag.empty()) cfg["mode"] = mode_flag;
  if (eps_flag) cfg["eps"] = *eps_flag;
  if (!contaminant_flag.empty()) cfg["contaminant"] = dist_from(json::object(), contaminant_flag).spec();
  ContaminationModel model;
  try {
    model = contamination_from_json(cfg);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const auto law = contaminated_law(model);
  const double g = gamma(law);
  const double ga = gamma(model.contaminant);
  const double bound = (model.mode == ContaminationMode::additive ? std::pow(model.eps, 1.5) : model.eps) * ga;
  const LinkFunction link = cfg.contains("link") ? link_from_json(cfg.at("link")) : make_link("sign");
  const auto x = x_from(cfg, 16);
  const BoundSet b = contaminated_alpha_bounds(model, link, x);
  if (c.strict && link.is_sign && !b.sign) throw StrictFailure("sign-link bound preconditions fail for this model");

  json j{{"model", contamination_to_json(model)},
         {"gamma", g},
         {"gamma_bound", bound},
         {"gamma_contaminant", ga},
         {"variance", law.second_moment()},
         {"link", link_to_json(link)},
         {"alpha_bounds", b}};
  if (c.format == "csv") {
    json flat{{"mode", to_string(model.mode)}, {"eps", model.eps},   {"gamma", g}, {"gamma_bound", bound},
              {"lipschitz", j["alpha_bounds"]["lipschitz"]},    {"c2", j["alpha_bounds"]["c2"]},
              {"sign", j["alpha_bounds"]["sign"]}};
    emit(c, "contaminate.csv", flat_csv(flat));
  } else {
    emit(c, "contaminate.json", with_schema(j).dump(2));
  }
  return kOk;
}

int cmd_alpha(const Common& c, std::size_t n_flag) {
  const json cfg = load_config(c);
  std::optional<SensingModel> model;
  try {
    const auto dist = dist_from(cfg, "");
    const LinkFunction link = cfg.contains("link") ? link_from_json(cfg.at("link")) : make_link("sign");
    const Channel ch = cfg.contains("channel") ? channel_from_json(cfg.at("channel")) : Channel{};
    model.emplace(dist, link, x_from(cfg, 16), ch);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  const std::size_t n = n_flag ? n_flag : cfg.value("n", std::size_t{200000});
  const std::uint64_t seed = c.seed.value_or(cfg.value("seed", std::uint64_t{0}));

  PopulationSummary s;
  if (auto exact = enumerate_population(*model)) {
    s = *exact;
  } else {
    s = population_summary(*model, n, seed);
  }
  json bounds = json::object();
  std::vector<std::string> failures;
  const auto& dist = model->dist();
  const auto& link = model->link();
  if (link.lipschitz_const) {
    try {
      bounds["lipschitz"] = *link.lipschitz_const * model->link_scale() * alpha_bound_lipschitz(dist);
    } catch (const std::exception& e) {
      bounds["lipschitz"] = nullptr;
      failures.push_back(std::string("lipschitz: ") + e.what());
    }
  }
  if (link.second_deriv_bound) bounds["c2"] = model->link_scale() * alpha_bound_c2(dist, link);
  if (link.is_sign) {
    try {
      bounds["sign"] = model->link_scale() * alpha_bound_sign(dist, model->x());
    } catch (const PreconditionError& e) {
      bounds["sign"] = nullptr;
      failures.push_back(std::string("sign: ") + e.what());
      if (c.strict) throw StrictFailure(e.what());
    }
  }
  json j{{"model", model->to_json()}, {"summary", s}, {"bounds", bounds}, {"notes", failures}};
  if (link.is_sign) j["lemmas"] = v_x_lemma_checks(dist, model->x(), n, seed);
  j["summary"].erase("v_x");
  j["summary"]["v_x_norm"] = norm2(s.v_x);
  if (c.format == "csv") {
    json flat{{"lambda", s.lambda}, {"alpha", s.alpha}, {"alpha_debiased", s.alpha_debiased},
              {"alpha_stderr", s.alpha_stderr}, {"n", s.n}, {"exact", s.exact}};
    for (auto it = bounds.begin(); it != bounds.end(); ++it) flat["bound_" + it.key()] = it.value();
    emit(c, "alpha.csv", flat_csv(flat));
  } else {
    emit(c, "alpha.json", with_schema(j).dump(2));
  }
  return kOk;
}

int cmd_recover(const Common& c, const std::string& save_dataset) {
  json cfg = load_config(c);
  if (!cfg.contains("m_grid")) cfg["m_grid"] = json::array({cfg.value("m", std::size_t{1000})});
  if (c.seed) cfg["base_seed"] = *c.seed;
  const ExperimentConfig ec = config_from_json(cfg);
  const SweepResult r = run_sweep(ec, c.threads);
  for (const auto& cell : r.cells) {
    if (c.strict && ec.link.is_sign && !cell.alpha_bound) throw StrictFailure("sign-link bound preconditions fail");
  }
  if (!save_dataset.empty()) {
    const Dataset data = generate(cell_model(ec, ec.eps_grid.front()), ec.m_grid.front(),
                                  derive_seed(ec.base_seed, {ec.m_grid.front(), double_bits(ec.eps_grid.front()), 0}));
    std::ofstream out(save_dataset, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + save_dataset + "'");
    write_dataset(out, data);
  }
  if (c.format == "json") {
    json j{{"cells", json::array()}};
    for (const auto& s : r.summary) j["cells"].push_back(summary_to_json(s));
    emit(c, "recover.json", with_schema(j).dump(2));
  } else {
    std::ostringstream os;
    write_csv(os, r.rows);
    emit(c, "recover.csv", os.str());
  }
  return kOk;
}

int cmd_width(const Common& c, std::optional<std::size_t> d_flag, std::optional<std::size_t> s_flag,
              std::optional<std::size_t> n_flag, bool cone) {
  const json cfg = load_config(c);
  const std::size_t d = d_flag.value_or(cfg.value("d", std::size_t{0}));
  const std::size_t s = s_flag.value_or(cfg.value("s", d));
  const std::size_t n = n_flag.value_or(cfg.value("n", std::size_t{10000}));
  const bool use_cone = cone || cfg.value("descent_cone", false);
  const std::uint64_t seed = c.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  if (d < 1 || s < 1 || s > d) throw ConfigError("width needs 1 <= s <= d");
  if (n < 2) throw ConfigError("width needs n >= 2");
  const WidthEstimate w = use_cone ? width_descent_cone_sparse_proxy(d, s, n, seed) : width_sparse_sphere(d, s, n, seed);
  json j = w;
  j["min_samples"] = min_samples(w);
  if (c.format == "csv") {
    emit(c, "width.csv", flat_csv(j));
  } else {
    emit(c, "width.json", with_schema(j).dump(2));
  }
  return kOk;
}

int cmd_sweep(const Common& c) {
  json cfg = load_config(c);
  if (c.seed) cfg["base_seed"] = *c.seed;
  const ExperimentConfig ec = config_from_json(cfg);
  const SweepResult r = run_sweep(ec, c.threads);
  std::ostringstream os;
  write_csv(os, r.rows);
  const json summary = sweep_summary_json(ec, r);
  if (c.out_dir.empty()) {
    std::cout << (c.format == "csv" ? os.str() : summary.dump(2) + "\n");
  } else {
    emit(c, "trials.csv", os.str());
    emit(c, "summary.json", summary.dump(2));
  }
  if (c.strict) {
    for (const auto& s : r.summary) {
      if (!s.admissible) throw StrictFailure("cell m=" + std::to_string(s.m) + " is inadmissible (m < width^2)");
    }
    for (const auto& cell : r.cells) {
      if (ec.link.is_sign && !cell.alpha_bound) throw StrictFailure("sign-link bound preconditions fail");
    }
  }
  return kOk;
}

int cmd_report(const Common& c, const std::string& csv_file) {
  if (csv_file.empty()) throw ConfigError("report needs --csv FILE");
  std::ifstream in(csv_file);
  if (!in) throw ConfigError("cannot open '" + csv_file + "'");
  const auto rows = read_csv(in);
  const auto cells = summarize(rows);
  const json cfg = load_config(c);
  const bool two_alpha = cfg.value("fit_offset", std::string("none")) == "two_alpha";
  json j{{"source", csv_file}, {"cells", json::array()}};
  for (const auto& s : cells) j["cells"].push_back(summary_to_json(s));
  try {
    j["fit"] = json::array();
    for (const auto& f : fit_rate(rows, {"eps"}, two_alpha)) j["fit"].push_back(rate_fit_to_json(f));
  } catch (const std::invalid_argument& e) {
    j["fit"] = json{{"skipped", e.what()}};
  }
  if (c.format == "csv") {
    std::string body = "m,eps,n_trials,err_scaled_mean,err_scaled_stderr,bound_value,violations,calibrated_C0,admissible\n";
    for (const auto& s : cells) {
      body += std::to_string(s.m) + ',' + num(s.eps) + ',' + std::to_string(s.n_trials) + ',' + num(s.err_scaled_mean) +
              ',' + num(s.err_scaled_stderr) + ',' + num(s.bound_value) + ',' + std::to_string(s.violations) + ',' +
              num(s.calibrated_c0) + ',' + (s.admissible ? "1" : "0") + '\n';
    }
    emit(c, "report.csv", body);
  } else {
    emit(c, "report.json", with_schema(j).dump(2));
  }
  if (c.strict) {
    for (const auto& s : cells) {
      if (!s.admissible) throw StrictFailure("cell m=" + std::to_string(s.m) + " is inadmissible (m < width^2)");
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stein-sense: single-index compressed sensing under non-Gaussian measurements"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config_file, "JSON config file");
    sub->add_option("--out", common.out_dir, "output directory (default: stdout)");
    sub->add_option("--seed", common.seed, "base seed (overrides the config)");
    sub->add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--format", common.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--strict", common.strict, "exit 3 when a precondition fails");
  };

  std::string dist_flag;
  auto* disc = app.add_subcommand("discrepancy", "gamma, E|1-T|, TV distances and moments of a law");
  add_common(disc);
  disc->add_option("--dist", dist_flag, "law: kind name or JSON spec");

  std::string mode_flag, contaminant_flag;
  std::optional<double> eps_flag;
  auto* cont = app.add_subcommand("contaminate", "contaminated law, its gamma and alpha bounds");
  add_common(cont);
  cont->add_option("--mode", mode_flag)->check(CLI::IsMember({"additive", "mixture"}));
  cont->add_option("--eps", eps_flag)->check(CLI::Range(0.0, 1.0));
  cont->add_option("--contaminant", contaminant_flag, "kind name or JSON spec");

  std::size_t alpha_n = 0;
  auto* alpha = app.add_subcommand("alpha", "lambda, v_x, alpha and the applicable bounds");
  add_common(alpha);
  alpha->add_option("-n,--samples", alpha_n, "Monte Carlo sample size");

  std::string save_dataset;
  auto* rec = app.add_subcommand("recover", "generate data and run the projection estimator");
  add_common(rec);
  rec->add_option("--save-dataset", save_dataset, "write the first trial's dataset (binary)");

  std::optional<std::size_t> wd, ws, wn;
  bool cone = false;
  auto* width = app.add_subcommand("width", "Gaussian mean width of sparse sets");
  add_common(width);
  width->add_option("-d,--dim", wd);
  width->add_option("-s,--sparsity", ws);
  width->add_option("-n,--samples", wn);
  width->add_flag("--descent-cone", cone, "2s-sparse proxy for the descent cone of the s-sparse set");

  auto* sweep = app.add_subcommand("sweep", "run an experiment grid, write trials.csv and summary.json");
  add_common(sweep);

  std::string csv_file;
  auto* report = app.add_subcommand("report", "summarize a trials CSV");
  add_common(report);
  report->add_option("--csv", csv_file, "trials CSV written by sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*disc) return cmd_discrepancy(common, dist_flag);
    if (*cont) return cmd_contaminate(common, mode_flag, eps_flag, contaminant_flag);
    if (*alpha) return cmd_alpha(common, alpha_n);
    if (*rec) return cmd_recover(common, save_dataset);
    if (*width) return cmd_width(common, wd, ws, wn, cone);
    if (*sweep) return cmd_sweep(common);
    if (*report) return cmd_report(common, csv_file);
  } catch (const StrictFailure& e) {
    std::cerr << "precondition failure: " << e.what() << '\n';
    return kPrecondition;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::invalid_argument& e) {
    // DistributionError and ModelError derive from invalid_argument.
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
