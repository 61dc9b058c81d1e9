#include "ssns/contamination.hpp"

#include <algorithm>
#include <cmath>

#include "ssns/zero_bias.hpp"

namespace ssns {
namespace {

constexpr std::size_t kGridPoints = std::size_t{1} << 14;
constexpr double kGridHalfWidth = 12.0;

void check_eps(double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw DistributionError("eps must lie in [0, 1]");
}

bool has_table(const StandardizedDistribution& d) {
  for (const auto& wp : d.parts()) {
    if (std::holds_alternative<detail::TablePart>(wp.part)) return true;
  }
  return false;
}

StandardizedDistribution additive_table(const ContaminationModel& m) {
  if (has_table(m.contaminant)) throw DistributionError("additive contamination does not support tabulated contaminants");
  const double s = std::sqrt(1.0 - m.eps);
  const double r = std::sqrt(m.eps);
  std::vector<double> grid(kGridPoints), pdf(kGridPoints);
  const double h = 2.0 * kGridHalfWidth / static_cast<double>(kGridPoints - 1);
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    const double y = -kGridHalfWidth + h * static_cast<double>(i);
    grid[i] = y;
    // phi_s(y - r a) peaks at a = y / r
    const double peak = y / r;
    pdf[i] = m.contaminant.expect([&](double a) { return normal_pdf((y - r * a) / s) / s; },
                                  std::span<const double>(&peak, 1));
  }
  return make_tabulated(std::move(grid), std::move(pdf), contamination_to_json(m));
}

}  // namespace

std::string to_string(ContaminationMode m) { return m == ContaminationMode::additive ? "additive" : "mixture"; }

ContaminationMode contamination_mode_from_string(const std::string& s) {
  if (s == "additive") return ContaminationMode::additive;
  if (s == "mixture") return ContaminationMode::mixture;
  throw DistributionError("unknown contamination mode '" + s + "'");
}

ContaminationModel contamination_from_json(const json& j) {
  ContaminationModel m;
  m.mode = contamination_mode_from_string(j.value("mode", std::string("mixture")));
  m.eps = j.value("eps", 0.0);
  check_eps(m.eps);
  if (j.contains("contaminant")) m.contaminant = make_distribution(j.at("contaminant").get<DistributionSpec>());
  return m;
}

json contamination_to_json(const ContaminationModel& m) {
  return json{{"mode", to_string(m.mode)}, {"eps", m.eps}, {"contaminant", m.contaminant.spec()}};
}

StandardizedDistribution contaminated_law(const ContaminationModel& m) {
  check_eps(m.eps);
  if (m.eps == 0.0) return make_distribution("gaussian");
  if (m.eps == 1.0) return m.contaminant;
  if (m.contaminant.kind() == DistKind::gaussian) return m.contaminant;  // stable under both
  if (m.mode == ContaminationMode::mixture) {
    return make_mixture({{1.0 - m.eps, make_distribution("gaussian")}, {m.eps, m.contaminant}});
  }
  return additive_table(m);
}

double contaminated_gamma(const ContaminationModel& m) { return gamma(contaminated_law(m)); }

double sign_bound_additive(double eps, double gamma_a, double m3, double x_inf) {
  const double c = std::sqrt(1.0 - eps) * std::pow(8.0 / M_PI, 1.0 / 6.0) + std::sqrt(eps) * std::cbrt(m3);
  return std::sqrt(10.0 * std::pow(eps, 1.5) * gamma_a * c * c * c * x_inf);
}

double sign_bound_mixture(double eps, double gamma_a, double m3, double x_inf) {
  const double c = std::cbrt((1.0 - eps) * std::sqrt(8.0 / M_PI)) + std::cbrt(eps * m3);
  return std::sqrt(10.0 * eps * gamma_a * c * c * c * x_inf);
}

double contaminated_lipschitz_bound(const ContaminationModel& m, const LinkFunction& link) {
  check_eps(m.eps);
  if (!link.lipschitz_const) throw ModelError("link '" + link.kind + "' is not Lipschitz");
  if (m.eps == 0.0) return 0.0;
  return *link.lipschitz_const * m.eps * e_one_minus_t(m.contaminant);
}

BoundSet contaminated_alpha_bounds(const ContaminationModel& m, const LinkFunction& link, std::span<const double> x) {
  check_eps(m.eps);
  BoundSet b;
  const bool additive = m.mode == ContaminationMode::additive;
  if (link.lipschitz_const) {
    if (m.eps == 0.0 || stein_coefficient(m.contaminant)) {
      b.lipschitz = contaminated_lipschitz_bound(m, link);
    } else {
      b.notes.emplace_back("lipschitz: contaminant has no Stein coefficient");
    }
  } else {
    b.notes.emplace_back("lipschitz: link has no Lipschitz constant");
  }
  const double gamma_a = gamma(m.contaminant);
  if (link.second_deriv_bound) {
    b.c2 = *link.second_deriv_bound * (additive ? std::pow(m.eps, 1.5) : m.eps) * gamma_a;
  } else {
    b.notes.emplace_back("c2: link has no second-derivative bound");
  }
  if (link.is_sign) {
    const auto law = contaminated_law(m);
    auto bad = sign_bound_violations(law, x, gamma(law));
    if (!m.contaminant.is_symmetric() && std::find(bad.begin(), bad.end(), "symmetric") == bad.end()) {
      bad.insert(bad.begin(), "symmetric");
    }
    if (bad.empty()) {
      const double m3 = abs_moment(m.contaminant, 3.0);
      const double xi = norm_inf(x);
      b.sign = additive ? sign_bound_additive(m.eps, gamma_a, m3, xi) : sign_bound_mixture(m.eps, gamma_a, m3, xi);
    } else {
      for (const auto& c : bad) b.notes.push_back("sign: precondition failed: " + c);
    }
  } else {
    b.notes.emplace_back("sign: link is not the sign function");
  }
  return b;
}

void to_json(json& j, const BoundSet& b) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j = json{{"lipschitz", opt(b.lipschitz)}, {"c2", opt(b.c2)}, {"sign", opt(b.sign)}, {"notes", b.notes}};
}

}  // namespace ssns
