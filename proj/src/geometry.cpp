#include "ssns/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "ssns/rng.hpp"

namespace ssns {

WidthEstimate width_mc(std::size_t d, std::size_t n_samples, std::uint64_t seed,
                       const std::function<double(std::span<const double>)>& sup, std::string descriptor) {
  if (d == 0) throw std::invalid_argument("width needs d >= 1");
  if (n_samples < 2) throw std::invalid_argument("width needs at least 2 draws");
  std::vector<double> g(d);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    Rng rng(derive_seed(seed, {i}));
    std::normal_distribution<double> normal;
    for (double& e : g) e = normal(rng);
    const double v = sup(g);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(n_samples);
  WidthEstimate w;
  w.mean = sum / n;
  const double var = std::max(0.0, (sumsq - n * w.mean * w.mean) / (n - 1.0));
  w.std_error = std::sqrt(var / n);
  w.n_samples = n_samples;
  w.set_descriptor = std::move(descriptor);
  return w;
}

double sparse_sphere_sup(std::span<const double> g, std::size_t s) {
  if (s < 1 || s > g.size()) throw std::invalid_argument("sparse sphere needs 1 <= s <= d");
  std::vector<double> sq(g.size());
  std::transform(g.begin(), g.end(), sq.begin(), [](double e) { return e * e; });
  std::nth_element(sq.begin(), sq.begin() + static_cast<std::ptrdiff_t>(s - 1), sq.end(), std::greater<>());
  double acc = 0.0;
  for (std::size_t i = 0; i < s; ++i) acc += sq[i];
  return std::sqrt(acc);
}

WidthEstimate width_sparse_sphere(std::size_t d, std::size_t s, std::size_t n_samples, std::uint64_t seed) {
  if (s < 1 || s > d) throw std::invalid_argument("sparse sphere needs 1 <= s <= d");
  const std::string desc = s == d ? "sphere(d=" + std::to_string(d) + ")"
                                  : "sparse_sphere(d=" + std::to_string(d) + ",s=" + std::to_string(s) + ")";
  return width_mc(d, n_samples, seed, [s](std::span<const double> g) { return sparse_sphere_sup(g, s); }, desc);
}

WidthEstimate width_descent_cone_sparse_proxy(std::size_t d, std::size_t s, std::size_t n_samples,
                                              std::uint64_t seed) {
  if (s < 1 || s > d) throw std::invalid_argument("sparse K needs 1 <= s <= d");
  WidthEstimate w = width_sparse_sphere(d, std::min(2 * s, d), n_samples, seed);
  w.set_descriptor = "descent_cone_proxy(" + w.set_descriptor + ")";
  return w;
}

std::size_t min_samples(const WidthEstimate& w) {
  if (!(w.mean >= 0.0)) throw std::invalid_argument("width must be nonnegative");
  return static_cast<std::size_t>(std::ceil(w.mean * w.mean));
}

void to_json(nlohmann::json& j, const WidthEstimate& w) {
  j = nlohmann::json{{"mean", w.mean}, {"stderr", w.std_error}, {"n", w.n_samples}, {"set", w.set_descriptor}};
}

}  // namespace ssns
