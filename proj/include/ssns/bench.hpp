#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ssns/contamination.hpp"
#include "ssns/geometry.hpp"
#include "ssns/link_model.hpp"
#include "ssns/recovery.hpp"

namespace ssns {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One sweep. JSON layout (every key except "x" optional):
///
///   "dist":          distribution spec, default "gaussian"
///   "contamination": {"mode": "mixture"|"additive", "contaminant": spec}.
///                    The sensing law of cell eps is the eps-contamination of
///                    N(0,1) by the contaminant; without this key the
///                    contaminant is "dist" (so eps = 1 gives "dist" itself).
///   "link", "channel"
///   "x":             {"unit_sparse": {"s", "d", "seed"}} or {"vector": [...]}
///   "K":             {"kind": "sparse"|"l1_ball"|"l2_ball"|"full_space", "s", "radius"}
///                    s and radius default to the values for which K just contains lambda x
///   "m_grid", "eps_grid" (default [1.0]), "n_trials", "base_seed", "u", "C0"
///   "alpha_samples", "width_samples", "psi_samples", "fit_offset": "none"|"two_alpha"
struct ExperimentConfig {
  DistributionSpec dist{"gaussian", json::object()};
  ContaminationMode contamination_mode = ContaminationMode::mixture;
  std::optional<DistributionSpec> contaminant;
  LinkFunction link = make_link("linear");
  Channel channel;
  std::vector<double> x;
  json x_spec;
  json k_spec = json{{"kind", "full_space"}};
  std::vector<std::size_t> m_grid;
  std::vector<double> eps_grid{1.0};
  std::size_t n_trials = 10;
  std::uint64_t base_seed = 0;
  double u = 2.0;
  double c0 = 1.0;
  std::size_t alpha_samples = 200000;
  std::size_t width_samples = 10000;
  std::size_t psi_samples = 100000;
  bool fit_two_alpha = false;
  /// Fill runtime_ms; off by default so reruns are byte-identical.
  bool timing = false;
};

/// Throws ConfigError on anything malformed or violating u >= 2,
/// ascending m_grid, n_trials >= 1, eps in [0, 1].
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& c);

/// Unit vector with s equal-magnitude entries of random sign on a random support.
std::vector<double> unit_sparse(std::size_t s, std::size_t d, std::uint64_t seed);

struct TrialRow {
  std::size_t m = 0;
  double eps = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double err_scaled = 0.0;
  double err_normalized = 0.0;  // NaN when lambda <= 0
  double lambda = 0.0;
  double alpha_mc = 0.0;
  double alpha_bound = 0.0;  // NaN when no bound applies
  double width_mean = 0.0;
  double bound_value = 0.0;
  double runtime_ms = 0.0;
  double psi2_a = 0.0;
  double psi2_y = 0.0;
  double u = 0.0;
  double c0 = 0.0;
};

/// The fixed CSV header.
const std::string& csv_header();
void write_csv(std::ostream& os, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_csv(std::istream& is);

/// 2 alpha + C0 (psi2_a^2 + psi2_y^2)(width + u) / sqrt(m).
double error_bound(double alpha, double c0, double psi2_a, double psi2_y, double width, double u, std::size_t m);

/// Per-eps quantities shared by all trials of that eps.
struct CellModel {
  double eps = 0.0;
  double lambda = 0.0;
  /// Monte Carlo alpha, capped at alpha_bound when that is smaller.
  double alpha_mc = 0.0;
  double alpha_raw = 0.0;
  double alpha_stderr = 0.0;
  std::optional<double> alpha_bound;
  std::string alpha_bound_kind;
  std::vector<std::string> notes;
  double psi2_a = 0.0;
  double psi2_y = 0.0;
  ConstraintSet k;
};

struct CellSummary {
  std::size_t m = 0;
  double eps = 0.0;
  std::size_t n_trials = 0;
  double err_scaled_mean = 0.0;
  double err_scaled_stderr = 0.0;
  double err_scaled_q10 = 0.0, err_scaled_q50 = 0.0, err_scaled_q90 = 0.0;
  std::optional<double> err_normalized_mean;
  std::optional<double> err_normalized_stderr;
  double bound_value = 0.0;
  std::size_t violations = 0;
  double violation_rate = 0.0;
  /// 4 e^{-u}.
  double allowed_rate = 0.0;
  /// Smallest C0 >= 0 under which every trial meets the scaled bound.
  double calibrated_c0 = 0.0;
  std::optional<double> normalized_bound;
  std::optional<std::size_t> normalized_violations;
  std::size_t min_samples = 0;
  bool admissible = true;
};

struct SweepResult {
  std::vector<TrialRow> rows;
  std::vector<CellModel> cells;
  std::vector<CellSummary> summary;
  WidthEstimate width;
};

/// Runs every (m, eps, trial). Trial seeds are derive_seed(base_seed, {m,
/// bits(eps), trial}), so the rows do not depend on the thread count.
SweepResult run_sweep(const ExperimentConfig& c, std::size_t threads = 1);

/// The sensing model of one eps cell.
SensingModel cell_model(const ExperimentConfig& c, double eps);

/// Per-cell statistics computed from rows alone.
std::vector<CellSummary> summarize(const std::vector<TrialRow>& rows);

struct RateFit {
  std::string group;
  std::optional<double> slope;
  std::optional<double> intercept;
  std::size_t points = 0;
  std::string skipped;  // reason when slope is absent
};

/// Least-squares slope of log(mean err_scaled - offset) against log m, one
/// fit per group. group_keys may contain "eps"; offset is 2 alpha_mc when
/// subtract_two_alpha is set. Points with nonpositive residual are dropped;
/// a group left with fewer than 4 m values gets no slope. Throws when the
/// rows hold fewer than 4 distinct m values.
std::vector<RateFit> fit_rate(const std::vector<TrialRow>& rows, const std::vector<std::string>& group_keys,
                              bool subtract_two_alpha = false);

/// {"schema": "ssns-1", ...} summary of a sweep.
json sweep_summary_json(const ExperimentConfig& c, const SweepResult& r);
json summary_to_json(const CellSummary& s);
json rate_fit_to_json(const RateFit& f);

}  // namespace ssns
