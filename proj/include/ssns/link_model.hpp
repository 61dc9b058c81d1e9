#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssns/distributions.hpp"

namespace ssns {

/// The transfer function theta together with the metadata the alpha bounds need.
struct LinkFunction {
  std::string kind;
  json params = json::object();
  std::function<double(double)> eval;
  std::optional<double> lipschitz_const;
  /// sup |theta''|; present only for C^2 links.
  std::optional<double> second_deriv_bound;
  bool is_sign = false;

  double operator()(double w) const { return eval(w); }
};

/// Built-in links: linear {"mu"}, tanh, sign (theta(0) = +1), relu, logistic
/// (2/(1+e^{-w}) - 1). Throws std::invalid_argument for unknown kinds.
LinkFunction make_link(const std::string& kind, const json& params = json::object());
LinkFunction link_from_json(const json& j);
json link_to_json(const LinkFunction& link);

/// sup |f''| on [lo, hi] by grid scan plus golden-section refinement.
double numeric_second_deriv_bound(const std::function<double(double)>& f2, double lo = -20.0, double hi = 20.0);

enum class ChannelKind { exact, additive_noise, bit_flip };

/// How y is produced from theta(<a, x>):
///   exact            y = theta(<a,x>)
///   additive_noise   y = theta(<a,x>) + sigma_z z, z ~ N(0,1) independent
///   bit_flip         y = -theta(<a,x>) with probability q, sign links only
/// A bit flip realizes the effective link (1 - 2q) theta, so lambda, v_x and
/// alpha are all scaled by (1 - 2q).
struct Channel {
  ChannelKind kind = ChannelKind::exact;
  double sigma_z = 0.0;
  double q = 0.0;
};

Channel channel_from_json(const json& j);
json channel_to_json(const Channel& c);

struct ModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Sensing law, link, unit direction x and observation channel.
class SensingModel {
 public:
  SensingModel(StandardizedDistribution dist, LinkFunction link, std::vector<double> x, Channel channel = {});

  const StandardizedDistribution& dist() const { return dist_; }
  const LinkFunction& link() const { return link_; }
  const std::vector<double>& x() const { return x_; }
  const Channel& channel() const { return channel_; }
  std::size_t dim() const { return x_.size(); }

  /// E[y | a] as a function of <a, x>.
  double effective_link(double w) const { return link_scale_ * link_(w); }
  double link_scale() const { return link_scale_; }

  json to_json() const;

 private:
  StandardizedDistribution dist_;
  LinkFunction link_;
  std::vector<double> x_;
  Channel channel_;
  double link_scale_ = 1.0;
};

enum class LambdaMethod { quadrature, monte_carlo };

struct LambdaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  /// Monte Carlo with fewer than 1e4 samples.
  bool low_sample_warning = false;
  LambdaMethod method = LambdaMethod::quadrature;
};

/// lambda = E[y <a, x>]. Quadrature needs a Gaussian law (then <a, x> is
/// exactly N(0,1)) or d = 1; smooth links use Gauss-Hermite, others adaptive
/// quadrature split at 0.
LambdaEstimate lambda_of(const SensingModel& model, LambdaMethod method, std::size_t n = 100000,
                         std::uint64_t seed = 0);

/// E[g theta(g)] for g ~ N(0,1) with an n-point Gauss-Hermite rule.
double gaussian_lambda_hermite(const LinkFunction& link, std::size_t n);

struct VxEstimate {
  std::vector<double> v;
  std::vector<double> std_error;
  std::size_t n = 0;
};

/// Monte Carlo mean of a theta(<a, x>). Samples are drawn in blocks of 2^14,
/// block b seeded with derive_seed(seed, {b}).
VxEstimate v_x_of(const SensingModel& model, std::size_t n, std::uint64_t seed);

/// lambda, v_x and alpha = |v_x - lambda x|_2 from one sample.
///
/// sup over the unit ball of |<v_x - lambda x, t>| is attained at
/// t = (v_x - lambda x)/|v_x - lambda x|, so alpha is that norm.
struct PopulationSummary {
  double lambda = 0.0;
  std::vector<double> v_x;
  double alpha = 0.0;
  /// Standard error of lambda.
  double mc_stderr = 0.0;
  double alpha_stderr = 0.0;
  /// sqrt(max(0, alpha^2 - tr(Cov)/n)); removes the upward bias of the plug-in norm.
  double alpha_debiased = 0.0;
  /// Standard error of |v_x|_2 (used by the lemma checks).
  double v_norm_stderr = 0.0;
  /// Largest per-coordinate standard error of v_x.
  double v_coord_stderr_max = 0.0;
  std::size_t n = 0;
  bool exact = false;
};

PopulationSummary population_summary(const SensingModel& model, std::size_t n, std::uint64_t seed);

/// Exact population quantities by enumerating every outcome of a discrete
/// sensing law; nullopt when the law has a continuous part or more than
/// `max_outcomes` outcomes.
std::optional<PopulationSummary> enumerate_population(const SensingModel& model,
                                                      std::size_t max_outcomes = std::size_t{1} << 20);

double alpha_of(const SensingModel& model, std::size_t n, std::uint64_t seed);

void to_json(json& j, const PopulationSummary& s);

/// Population loss L(t) = |t|^2 - 2 <v_x, t>.
double population_loss(std::span<const double> v_x, std::span<const double> t);

struct PreconditionError : std::runtime_error {
  PreconditionError(std::string cond, const std::string& what) : std::runtime_error(what), condition(std::move(cond)) {}
  std::string condition;
};

/// alpha <= E|1 - T| for 1-Lipschitz links. Throws DistributionError without a
/// Stein coefficient.
double alpha_bound_lipschitz(const StandardizedDistribution& dist);

/// alpha <= sup|theta''| gamma_a. Throws ModelError without the link metadata.
double alpha_bound_c2(const StandardizedDistribution& dist, const LinkFunction& link);

/// sqrt(2/pi) - 1/2.
double sign_c1();

/// Names of the violated preconditions of the sign-link bound: "symmetric",
/// "x_cubic_norm" (|x|_3^3 <= c1/gamma_a) and "x_sup_norm" (|x|_inf <= 1/2).
std::vector<std::string> sign_bound_violations(const StandardizedDistribution& dist, std::span<const double> x,
                                               double gamma_a);

/// alpha <= (10 gamma_a E|a|^3 |x|_inf)^{1/2}. Throws PreconditionError naming
/// the first failed condition.
double alpha_bound_sign(const StandardizedDistribution& dist, std::span<const double> x);

struct LemmaCheck {
  std::string name;
  bool applicable = true;
  std::string precondition;  // empty when applicable
  double value = 0.0;
  double bound = 0.0;
  bool upper = true;  // value <= bound when true, value >= bound otherwise
  double slack = 0.0;
  bool pass = true;
};

struct LemmaReport {
  bool exact = false;
  std::size_t n = 0;
  std::vector<LemmaCheck> checks;
  bool all_pass() const;
};

/// Evaluates, for the sign link:
///   |<v_x, x> - sqrt(2/pi)| <= gamma_a |x|_3^3
///   |v_x|_2 <= 1, and |v_x|_2 >= 1/2 when |x|_3^3 <= c1/gamma_a
///   |v_x|_inf <= 2 E|a|^3 |x|_inf when |x|_inf <= 1/2 and a is symmetric
/// Discrete laws with at most 2^20 outcomes are enumerated exactly; otherwise
/// v_x is Monte Carlo and a check fails only beyond 4 standard errors.
LemmaReport v_x_lemma_checks(const StandardizedDistribution& dist, std::span<const double> x, std::size_t n,
                             std::uint64_t seed);

void to_json(json& j, const LemmaReport& r);

double norm2(std::span<const double> v);
double norm_inf(std::span<const double> v);
double norm3_cubed(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace ssns
