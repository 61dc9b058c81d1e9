#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ssns/distributions.hpp"
#include "ssns/link_model.hpp"

namespace ssns {

enum class ContaminationMode { additive, mixture };

std::string to_string(ContaminationMode m);
ContaminationMode contamination_mode_from_string(const std::string& s);

/// additive: sqrt(1-eps) g + sqrt(eps) a
/// mixture:  g off a bad event of probability eps, a on it
struct ContaminationModel {
  ContaminationMode mode = ContaminationMode::mixture;
  double eps = 0.0;
  StandardizedDistribution contaminant = make_distribution("gaussian");
};

/// {"mode": "additive"|"mixture", "eps": e, "contaminant": <dist spec>}
ContaminationModel contamination_from_json(const json& j);
json contamination_to_json(const ContaminationModel& m);

/// The contaminated law g_eps (mean 0, variance 1).
///
/// eps = 0 gives N(0,1); eps = 1 gives the contaminant itself. Additive laws
/// with 0 < eps < 1 are tabulated on 2^14 points over [-12, 12], each value
/// the smoothing integral E phi_s(y - sqrt(eps) a), s^2 = 1 - eps. Tabulated
/// contaminants are rejected there (the double table would be too costly).
StandardizedDistribution contaminated_law(const ContaminationModel& m);

/// gamma of the contaminated law.
double contaminated_gamma(const ContaminationModel& m);

struct BoundSet {
  std::optional<double> lipschitz;
  std::optional<double> c2;
  std::optional<double> sign;
  /// Why a bound is absent.
  std::vector<std::string> notes;
};

/// Closed-form alpha bounds for the contaminated law, in terms of the
/// contaminant:
///   Lipschitz   L eps E|1 - T_a|
///   C^2         |theta''| eps^{3/2} gamma_a (additive), |theta''| eps gamma_a (mixture)
///   sign        see sign_bound_additive / sign_bound_mixture
/// Only bounds whose hypotheses hold are filled in; the sign preconditions are
/// checked against the contaminated law.
BoundSet contaminated_alpha_bounds(const ContaminationModel& m, const LinkFunction& link,
                                   std::span<const double> x);

/// Lipschitz bound alone. Throws DistributionError without a Stein coefficient.
double contaminated_lipschitz_bound(const ContaminationModel& m, const LinkFunction& link);

/// (10 eps^{3/2} gamma_a (sqrt(1-eps) (8/pi)^{1/6} + sqrt(eps) m3^{1/3})^3 |x|_inf)^{1/2}
double sign_bound_additive(double eps, double gamma_a, double m3, double x_inf);
/// (10 eps gamma_a (((1-eps) sqrt(8/pi))^{1/3} + (eps m3)^{1/3})^3 |x|_inf)^{1/2}
double sign_bound_mixture(double eps, double gamma_a, double m3, double x_inf);

void to_json(json& j, const BoundSet& b);

}  // namespace ssns
