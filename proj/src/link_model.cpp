#include "ssns/link_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssns/zero_bias.hpp"

namespace ssns {
namespace {

constexpr std::size_t kBlock = std::size_t{1} << 14;

// Calls visit(a, <a,x>, E[y|a]) for n i.i.d. sensing vectors.
template <class Visit>
void for_each_sample(const SensingModel& model, std::size_t n, std::uint64_t seed, Visit&& visit) {
  const std::size_t d = model.dim();
  const auto& x = model.x();
  std::vector<double> a(d);
  for (std::size_t start = 0, b = 0; start < n; start += kBlock, ++b) {
    Sampler sampler(model.dist(), derive_seed(seed, {b}));
    const std::size_t stop = std::min(n, start + kBlock);
    for (std::size_t i = start; i < stop; ++i) {
      sampler.fill(a);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += a[j] * x[j];
      visit(a, s, model.effective_link(s));
    }
  }
}

struct FirstPass {
  std::vector<double> mean;
  std::vector<double> var;
  double lambda_var = 0.0;
};

FirstPass first_pass(const SensingModel& model, std::size_t n, std::uint64_t seed) {
  const std::size_t d = model.dim();
  // Shifted sums keep the variance accumulation well conditioned.
  std::vector<double> sum(d, 0.0), sumsq(d, 0.0);
  double ls = 0.0, lss = 0.0;
  for_each_sample(model, n, seed, [&](const std::vector<double>& a, double s, double th) {
    for (std::size_t j = 0; j < d; ++j) {
      const double z = a[j] * th;
      sum[j] += z;
      sumsq[j] += z * z;
    }
    ls += s * th;
    lss += s * th * s * th;
  });
  FirstPass fp;
  const double nn = static_cast<double>(n);
  fp.mean.resize(d);
  fp.var.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    fp.mean[j] = sum[j] / nn;
    fp.var[j] = std::max(0.0, (sumsq[j] - nn * fp.mean[j] * fp.mean[j]) / (nn - 1.0));
  }
  const double lm = ls / nn;
  fp.lambda_var = std::max(0.0, (lss - nn * lm * lm) / (nn - 1.0));
  return fp;
}

// Variance of <u, a theta> for each direction u.
std::vector<double> projected_variances(const SensingModel& model, std::size_t n, std::uint64_t seed,
                                        const std::vector<std::vector<double>>& dirs) {
  std::vector<double> sum(dirs.size(), 0.0), sumsq(dirs.size(), 0.0);
  for_each_sample(model, n, seed, [&](const std::vector<double>& a, double, double th) {
    for (std::size_t k = 0; k < dirs.size(); ++k) {
      const double z = dot(dirs[k], a) * th;
      sum[k] += z;
      sumsq[k] += z * z;
    }
  });
  const double nn = static_cast<double>(n);
  std::vector<double> out(dirs.size());
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double m = sum[k] / nn;
    out[k] = std::max(0.0, (sumsq[k] - nn * m * m) / (nn - 1.0));
  }
  return out;
}

void finish_summary(PopulationSummary& s, const std::vector<double>& x) {
  s.lambda = dot(s.v_x, x);
  std::vector<double> w(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) w[j] = s.v_x[j] - s.lambda * x[j];
  s.alpha = norm2(w);
}

}  // namespace

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

double norm3_cubed(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += std::abs(e) * e * e;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// ---- links --------------------------------------------------------------------

double numeric_second_deriv_bound(const std::function<double(double)>& f2, double lo, double hi) {
  return grid_golden_max([&f2](double w) { return std::abs(f2(w)); }, lo, hi, 4001, 1e-10);
}

LinkFunction make_link(const std::string& kind, const json& params) {
  LinkFunction l;
  l.kind = kind;
  l.params = params.is_null() ? json::object() : params;
  if (kind == "linear") {
    const double mu = l.params.value("mu", 1.0);
    l.params["mu"] = mu;
    l.eval = [mu](double w) { return mu * w; };
    l.lipschitz_const = std::abs(mu);
    l.second_deriv_bound = 0.0;
  } else if (kind == "tanh") {
    l.eval = [](double w) { return std::tanh(w); };
    l.lipschitz_const = 1.0;
    l.second_deriv_bound = 4.0 / (3.0 * std::sqrt(3.0));
  } else if (kind == "sign") {
    l.eval = [](double w) { return w >= 0.0 ? 1.0 : -1.0; };
    l.is_sign = true;
  } else if (kind == "relu") {
    l.eval = [](double w) { return w > 0.0 ? w : 0.0; };
    l.lipschitz_const = 1.0;
  } else if (kind == "logistic") {
    l.eval = [](double w) { return 2.0 / (1.0 + std::exp(-w)) - 1.0; };
    l.lipschitz_const = 0.5;
    // theta = tanh(w/2): theta'' = -(1/2) tanh(w/2) sech^2(w/2)
    l.second_deriv_bound = numeric_second_deriv_bound([](double w) {
      const double t = std::tanh(0.5 * w);
      return -0.5 * t * (1.0 - t * t);
    });
  } else {
    throw std::invalid_argument("unknown link kind '" + kind + "'");
  }
  return l;
}

LinkFunction link_from_json(const json& j) {
  if (j.is_string()) return make_link(j.get<std::string>());
  return make_link(j.at("kind").get<std::string>(), j.value("params", json::object()));
}

json link_to_json(const LinkFunction& link) { return json{{"kind", link.kind}, {"params", link.params}}; }

Channel channel_from_json(const json& j) {
  Channel c;
  if (j.is_null()) return c;
  const std::string k = j.is_string() ? j.get<std::string>() : j.value("kind", std::string("exact"));
  if (k == "exact") {
    c.kind = ChannelKind::exact;
  } else if (k == "additive_noise") {
    c.kind = ChannelKind::additive_noise;
    c.sigma_z = j.value("sigma_z", 0.0);
  } else if (k == "bit_flip") {
    c.kind = ChannelKind::bit_flip;
    c.q = j.value("q", 0.0);
  } else {
    throw ModelError("unknown channel kind '" + k + "'");
  }
  return c;
}

json channel_to_json(const Channel& c) {
  switch (c.kind) {
    case ChannelKind::exact: return json{{"kind", "exact"}};
    case ChannelKind::additive_noise: return json{{"kind", "additive_noise"}, {"sigma_z", c.sigma_z}};
    case ChannelKind::bit_flip: return json{{"kind", "bit_flip"}, {"q", c.q}};
  }
  return json();
}

// ---- model --------------------------------------------------------------------------

SensingModel::SensingModel(StandardizedDistribution dist, LinkFunction link, std::vector<double> x, Channel channel)
    : dist_(std::move(dist)), link_(std::move(link)), x_(std::move(x)), channel_(channel) {
  if (x_.empty()) throw ModelError("x must have at least one coordinate");
  const double nx = norm2(x_);
  if (!(std::abs(nx - 1.0) <= 1e-9)) throw ModelError("x must be a unit vector (|x|_2 = " + std::to_string(nx) + ")");
  for (double& e : x_) e /= nx;
  if (!link_.eval) throw ModelError("link has no evaluator");
  switch (channel_.kind) {
    case ChannelKind::exact: break;
    case ChannelKind::additive_noise:
      if (!(channel_.sigma_z >= 0.0) || !std::isfinite(channel_.sigma_z)) throw ModelError("sigma_z must be >= 0");
      break;
    case ChannelKind::bit_flip:
      if (!link_.is_sign) throw ModelError("bit_flip channel requires a sign link");
      if (!(channel_.q >= 0.0 && channel_.q < 0.5)) throw ModelError("bit_flip needs q in [0, 1/2)");
      link_scale_ = 1.0 - 2.0 * channel_.q;
      break;
  }
}

json SensingModel::to_json() const {
  return json{{"dist", dist_.spec()}, {"link", link_to_json(link_)}, {"x", x_}, {"channel", channel_to_json(channel_)},
              {"link_scale", link_scale_}};
}

// ---- lambda, v_x, alpha --------------------------------------------------------------

double gaussian_lambda_hermite(const LinkFunction& link, std::size_t n) {
  return gauss_hermite_expect([&link](double g) { return g * link(g); }, n);
}

LambdaEstimate lambda_of(const SensingModel& model, LambdaMethod method, std::size_t n, std::uint64_t seed) {
  LambdaEstimate est;
  est.method = method;
  if (method == LambdaMethod::quadrature) {
    if (model.dist().kind() == DistKind::gaussian) {
      if (model.link().second_deriv_bound) {
        est.value = model.link_scale() * gaussian_lambda_hermite(model.link(), 96);
      } else {
        const double zero = 0.0;
        est.value = model.link_scale() * integrate([&](double g) { return g * model.link()(g) * normal_pdf(g); },
                                                   -std::numeric_limits<double>::infinity(),
                                                   std::numeric_limits<double>::infinity(),
                                                   std::span<const double>(&zero, 1));
      }
      return est;
    }
    if (model.dim() == 1) {
      const double x0 = model.x()[0];
      const double zero = 0.0;
      est.value = model.dist().expect([&](double t) { return x0 * t * model.effective_link(x0 * t); },
                                      std::span<const double>(&zero, 1));
      return est;
    }
    throw ModelError("quadrature lambda needs a Gaussian sensing law or d = 1");
  }
  if (n < 2) throw ModelError("Monte Carlo lambda needs at least 2 samples");
  double sum = 0.0, sumsq = 0.0;
  for_each_sample(model, n, seed, [&](const std::vector<double>&, double s, double th) {
    sum += s * th;
    sumsq += s * th * s * th;
  });
  const double nn = static_cast<double>(n);
  est.value = sum / nn;
  est.std_error = std::sqrt(std::max(0.0, (sumsq - nn * est.value * est.value) / (nn - 1.0)) / nn);
  est.low_sample_warning = n < 10000;
  return est;
}

VxEstimate v_x_of(const SensingModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ModelError("v_x needs at least 2 samples");
  FirstPass fp = first_pass(model, n, seed);
  VxEstimate est;
  est.v = std::move(fp.mean);
  est.std_error.resize(est.v.size());
  for (std::size_t j = 0; j < est.v.size(); ++j) est.std_error[j] = std::sqrt(fp.var[j] / static_cast<double>(n));
  est.n = n;
  return est;
}

PopulationSummary population_summary(const SensingModel& model, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ModelError("population summary needs at least 2 samples");
  const auto& x = model.x();
  const std::size_t d = model.dim();
  FirstPass fp = first_pass(model, n, seed);
  const double nn = static_cast<double>(n);

  PopulationSummary s;
  s.n = n;
  s.v_x = fp.mean;
  finish_summary(s, x);
  s.mc_stderr = std::sqrt(fp.lambda_var / nn);

  double trace = 0.0;
  double coord_max = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    trace += fp.var[j];
    coord_max = std::max(coord_max, fp.var[j]);
  }
  s.v_coord_stderr_max = std::sqrt(coord_max / nn);
  // Covariance of (I - x x^T) a theta has trace tr(Cov) - x^T Cov x.
  const double trace_perp = std::max(0.0, trace - fp.lambda_var);
  const double floor = std::sqrt(trace_perp / nn);
  s.alpha_debiased = std::sqrt(std::max(0.0, s.alpha * s.alpha - trace_perp / nn));

  std::vector<std::vector<double>> dirs;
  std::vector<double> u_alpha(d, 0.0), u_v(d, 0.0);
  const double vn = norm2(s.v_x);
  if (s.alpha > 0.0) {
    for (std::size_t j = 0; j < d; ++j) u_alpha[j] = (s.v_x[j] - s.lambda * x[j]) / s.alpha;
  }
  if (vn > 0.0) {
    for (std::size_t j = 0; j < d; ++j) u_v[j] = s.v_x[j] / vn;
  }
  dirs.push_back(u_alpha);
  dirs.push_back(u_v);
  const auto pv = projected_variances(model, n, seed, dirs);
  s.alpha_stderr = s.alpha > 3.0 * floor ? std::sqrt(pv[0] / nn) : floor;
  s.v_norm_stderr = std::sqrt(pv[1] / nn);
  return s;
}

std::optional<PopulationSummary> enumerate_population(const SensingModel& model, std::size_t max_outcomes) {
  const auto& dist = model.dist();
  if (!dist.is_discrete()) return std::nullopt;
  const auto atoms = dist.atoms();
  const std::size_t k = atoms.size();
  const std::size_t d = model.dim();
  double total = 1.0;
  for (std::size_t j = 0; j < d; ++j) {
    total *= static_cast<double>(k);
    if (total > static_cast<double>(max_outcomes)) return std::nullopt;
  }
  const auto& x = model.x();
  PopulationSummary s;
  s.exact = true;
  s.v_x.assign(d, 0.0);
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> a(d);
  const std::size_t outcomes = static_cast<std::size_t>(total);
  for (std::size_t o = 0; o < outcomes; ++o) {
    double prob = 1.0;
    double w = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      a[j] = atoms[idx[j]].first;
      prob *= atoms[idx[j]].second;
      w += a[j] * x[j];
    }
    const double th = model.effective_link(w);
    for (std::size_t j = 0; j < d; ++j) s.v_x[j] += prob * a[j] * th;
    for (std::size_t j = 0; j < d; ++j) {
      if (++idx[j] < k) break;
      idx[j] = 0;
    }
  }
  s.n = outcomes;
  finish_summary(s, x);
  s.alpha_debiased = s.alpha;
  return s;
}

double alpha_of(const SensingModel& model, std::size_t n, std::uint64_t seed) {
  return population_summary(model, n, seed).alpha;
}

void to_json(json& j, const PopulationSummary& s) {
  j = json{{"lambda", s.lambda},       {"v_x", s.v_x},
           {"alpha", s.alpha},         {"alpha_debiased", s.alpha_debiased},
           {"alpha_stderr", s.alpha_stderr}, {"mc_stderr", s.mc_stderr},
           {"n", s.n},                 {"exact", s.exact}};
}

double population_loss(std::span<const double> v_x, std::span<const double> t) {
  return dot(t, t) - 2.0 * dot(v_x, t);
}

// ---- bounds ---------------------------------------------------------------------------

double alpha_bound_lipschitz(const StandardizedDistribution& dist) { return e_one_minus_t(dist); }

double alpha_bound_c2(const StandardizedDistribution& dist, const LinkFunction& link) {
  if (!link.second_deriv_bound) throw ModelError("link '" + link.kind + "' has no second-derivative bound");
  if (*link.second_deriv_bound == 0.0) return 0.0;
  return *link.second_deriv_bound * gamma(dist);
}

double sign_c1() { return std::sqrt(2.0 / M_PI) - 0.5; }

std::vector<std::string> sign_bound_violations(const StandardizedDistribution& dist, std::span<const double> x,
                                               double gamma_a) {
  std::vector<std::string> out;
  if (!dist.is_symmetric()) out.emplace_back("symmetric");
  if (gamma_a > 0.0 && norm3_cubed(x) > sign_c1() / gamma_a) out.emplace_back("x_cubic_norm");
  if (norm_inf(x) > 0.5) out.emplace_back("x_sup_norm");
  return out;
}

double alpha_bound_sign(const StandardizedDistribution& dist, std::span<const double> x) {
  const double g = gamma(dist);
  const auto bad = sign_bound_violations(dist, x, g);
  if (!bad.empty()) {
    const std::string& c = bad.front();
    std::string what = "sign-link bound precondition failed: ";
    if (c == "symmetric") what += "sensing law is not symmetric";
    if (c == "x_cubic_norm") what += "|x|_3^3 = " + std::to_string(norm3_cubed(x)) + " exceeds c1/gamma_a";
    if (c == "x_sup_norm") what += "|x|_inf = " + std::to_string(norm_inf(x)) + " exceeds 1/2";
    throw PreconditionError(c, what);
  }
  return std::sqrt(10.0 * g * abs_moment(dist, 3.0) * norm_inf(x));
}

// ---- lemma checks ------------------------------------------------------------------------

bool LemmaReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.pass; });
}

LemmaReport v_x_lemma_checks(const StandardizedDistribution& dist, std::span<const double> x, std::size_t n,
                             std::uint64_t seed) {
  const SensingModel model(dist, make_link("sign"), std::vector<double>(x.begin(), x.end()));
  const auto& ux = model.x();
  const double g = gamma(dist);
  const double m3 = abs_moment(dist, 3.0);
  const double c1 = sign_c1();

  LemmaReport rep;
  PopulationSummary s;
  double slack_lambda = 1e-12, slack_norm = 1e-12, slack_inf = 1e-12;
  if (auto exact = enumerate_population(model)) {
    s = *exact;
    rep.exact = true;
  } else {
    s = population_summary(model, n, seed);
    slack_lambda = 4.0 * s.mc_stderr;
    slack_norm = 4.0 * s.v_norm_stderr;
    slack_inf = 4.0 * s.v_coord_stderr_max;
  }
  rep.n = s.n;

  auto finish = [](LemmaCheck c) {
    if (c.applicable) c.pass = c.upper ? c.value <= c.bound + c.slack : c.value >= c.bound - c.slack;
    return c;
  };
  const double vnorm = norm2(s.v_x);
  const double x3 = norm3_cubed(ux);

  rep.checks.push_back(finish({"lambda_near_gaussian", true, "", std::abs(s.lambda - std::sqrt(2.0 / M_PI)), g * x3,
                               true, slack_lambda, true}));
  rep.checks.push_back(finish({"v_norm_upper", true, "", vnorm, 1.0, true, slack_norm, true}));
  {
    LemmaCheck c{"v_norm_lower", true, "", vnorm, 0.5, false, slack_norm, true};
    if (g > 0.0 && x3 > c1 / g) {
      c.applicable = false;
      c.precondition = "|x|_3^3 <= c1/gamma_a fails";
    }
    rep.checks.push_back(finish(c));
  }
  {
    LemmaCheck c{"v_sup_norm", true, "", norm_inf(s.v_x), 2.0 * m3 * norm_inf(ux), true, slack_inf, true};
    if (norm_inf(ux) > 0.5) {
      c.applicable = false;
      c.precondition = "|x|_inf <= 1/2 fails";
    } else if (!dist.is_symmetric()) {
      c.applicable = false;
      c.precondition = "sensing law is not symmetric";
    }
    rep.checks.push_back(finish(c));
  }
  return rep;
}

void to_json(json& j, const LemmaReport& r) {
  j = json{{"exact", r.exact}, {"n", r.n}, {"all_pass", r.all_pass()}, {"checks", json::array()}};
  for (const auto& c : r.checks) {
    j["checks"].push_back({{"name", c.name}, {"applicable", c.applicable}, {"precondition", c.precondition},
                           {"value", c.value}, {"bound", c.bound}, {"relation", c.upper ? "<=" : ">="},
                           {"slack", c.slack}, {"pass", c.pass}});
  }
}

}  // namespace ssns
