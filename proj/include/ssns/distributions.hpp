#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ssns/quadrature.hpp"
#include "ssns/rng.hpp"

namespace ssns {

using json = nlohmann::json;

struct DistributionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class DistKind { gaussian, rademacher, uniform, laplace, scaled_bernoulli, two_point, discrete, tabulated, mixture };

std::string to_string(DistKind k);

/// Serializable description of a law: {"kind": ..., "params": {...}}.
///
///   gaussian, rademacher, uniform, laplace   no params
///   scaled_bernoulli   {"p": (0,1)}
///   two_point          {"w": >0}   support {-1, w} with mean-zero weights
///   discrete           {"values": [...], "probs": [...]}
///   tabulated          {"grid": [...], "pdf": [...]}   piecewise-linear density
///   mixture            {"components": [{"weight": w, "dist": {...}}, ...]}
struct DistributionSpec {
  std::string kind;
  json params = json::object();
};

void to_json(json& j, const DistributionSpec& s);
void from_json(const json& j, DistributionSpec& s);

namespace detail {

struct GaussianPart {
  double sigma = 1.0;
};
struct UniformPart {
  double half_width = 1.0;
};
struct LaplacePart {
  double scale = 1.0;
};
struct AtomPart {
  std::vector<double> values;  // ascending
  std::vector<double> probs;
};

/// Piecewise-linear density on a grid. Cumulative tables hold exact integrals
/// of the interpolant, so moments and zero-bias quantities are exact for it.
struct TablePart {
  std::vector<double> x;
  std::vector<double> pdf;
  std::vector<double> cdf;         // int_{x0}^{x_k} p
  std::vector<double> upper_mean;  // int_{x_k}^{x_end} t p(t) dt
  std::vector<double> lower_sq;    // int_{x0}^{x_k} t^2 p(t) dt

  static TablePart build(std::vector<double> x, std::vector<double> pdf);
  std::size_t cell(double y) const;
};

using Part = std::variant<GaussianPart, UniformPart, LaplacePart, AtomPart, TablePart>;

struct WeightedPart {
  double weight = 1.0;
  Part part;
};

}  // namespace detail

class Sampler;

/// A mean-0, variance-1 law. Immutable after construction; copies share state.
///
/// Internally a finite mixture of parts (Gaussian, uniform, Laplace, atoms,
/// tabulated), which covers every built-in kind plus both contamination models.
class StandardizedDistribution {
 public:
  StandardizedDistribution(DistKind kind, DistributionSpec spec, std::vector<detail::WeightedPart> parts);

  DistKind kind() const { return kind_; }
  const DistributionSpec& spec() const { return spec_; }
  std::string name() const;

  /// Density of the absolutely continuous part (0 for purely discrete laws).
  double density(double y) const;
  /// Right-continuous distribution function.
  double cdf(double y) const;
  /// Generalized inverse inf{x : cdf(x) >= u}.
  double quantile(double u) const;

  /// E[a 1(a > y)], the zero-bias density.
  double upper_partial_mean(double y) const;
  /// E[a^2 1(a <= y)].
  double lower_partial_second(double y) const;

  bool is_symmetric() const { return symmetric_; }
  bool has_atoms() const { return has_atoms_; }
  bool has_density() const { return !has_atoms_; }
  bool has_density_on_interval() const { return density_on_interval_; }
  bool is_discrete() const { return discrete_; }

  double support_lo() const { return lo_; }
  double support_hi() const { return hi_; }
  /// Atoms, kinks and support endpoints; quadrature cuts here.
  const std::vector<double>& break_points() const { return breaks_; }
  /// (value, probability) pairs of the atomic part, merged across parts.
  std::vector<std::pair<double, double>> atoms() const;

  /// E f(a): enumeration over atoms plus adaptive quadrature over the
  /// continuous parts (cell-wise Gauss-Legendre on tabulated parts).
  double expect(const RealFn& f, std::span<const double> extra_breaks = {}) const;

  /// log E|a|^p from closed forms per part; tabulated parts use a shifted
  /// cell-wise rule so large p does not overflow.
  double log_abs_moment(double p) const;

  /// Exact mean and variance of the represented law.
  double mean() const;
  double second_moment() const;

  const std::vector<detail::WeightedPart>& parts() const { return *parts_; }

 private:
  friend class Sampler;
  DistKind kind_;
  DistributionSpec spec_;
  std::shared_ptr<const std::vector<detail::WeightedPart>> parts_;
  std::vector<double> part_cum_;  // cumulative weights for sampling
  std::vector<double> breaks_;
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool symmetric_ = false;
  bool has_atoms_ = false;
  bool discrete_ = false;
  bool density_on_interval_ = false;
};

/// Builds a standardized law from its spec. Inputs whose variance is not one
/// (discrete, two_point, tabulated) are affinely rescaled; built-in kinds are
/// constructed standardized. Throws DistributionError on invalid parameters
/// or a degenerate (zero-variance) law.
StandardizedDistribution make_distribution(const DistributionSpec& spec);
StandardizedDistribution make_distribution(const std::string& kind, json params = json::object());

/// Tabulated law from a (grid, pdf) pair, standardized.
StandardizedDistribution make_tabulated(std::vector<double> grid, std::vector<double> pdf,
                                        json provenance = json());

/// Weighted mixture of standardized laws; weights are renormalized to sum to one.
StandardizedDistribution make_mixture(const std::vector<std::pair<double, StandardizedDistribution>>& comps);

/// Draws i.i.d. values. A sampler is a pure function of (law, seed).
class Sampler {
 public:
  Sampler(const StandardizedDistribution& dist, std::uint64_t seed);

  double operator()();
  void fill(std::span<double> out);
  Rng& rng() { return rng_; }

 private:
  double draw_part(const detail::Part& part);

  const StandardizedDistribution* dist_;
  Rng rng_;
  std::normal_distribution<double> normal_;
};

std::vector<double> sample(const StandardizedDistribution& dist, std::size_t n, std::uint64_t seed);

/// E|a|^k by quadrature (continuous parts) or enumeration (atoms).
double abs_moment(const StandardizedDistribution& dist, double k);

struct PsiNormEstimate {
  double value = 0.0;
  double argmax_p = 1.0;
  /// Maximum sits on the last grid point: the supremum may be larger or infinite.
  bool at_grid_end = false;
  /// Always true; the supremum over p >= 1 is approximated on a finite grid.
  bool grid_approximation = true;
};

/// Log-spaced p grid on [1, pmax].
std::vector<double> default_p_grid(std::size_t n = 64, double pmax = 200.0);

/// max over the grid of p^{-1/q} (E|X|^p)^{1/p}, a lower approximation of the
/// psi_q norm. q must be 1 or 2.
PsiNormEstimate psi_norm(const StandardizedDistribution& dist, int q,
                         std::span<const double> p_grid);

/// Same estimator with E|X|^p replaced by sample moments.
PsiNormEstimate psi_norm_from_sample(std::span<const double> xs, int q, std::span<const double> p_grid);

struct MomentReport {
  double abs_moment_3 = 0.0;
  double abs_moment_4 = 0.0;
  double abs_moment_6 = 0.0;
  double psi2 = 0.0;
  double psi1 = 0.0;
  bool psi2_at_grid_end = false;
  bool psi1_at_grid_end = false;
};

MomentReport moment_report(const StandardizedDistribution& dist);
void to_json(json& j, const MomentReport& r);

/// Standard normal helpers.
double normal_pdf(double z);
double normal_cdf(double z);
double normal_quantile(double u);

}  // namespace ssns
