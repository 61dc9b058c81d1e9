#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "json.hpp"

namespace ssns {

/// Monte Carlo estimate of w(T) = E sup_{t in T} <g, t>.
struct WidthEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample sd / sqrt(n)
  std::size_t n_samples = 0;
  std::string set_descriptor;
};

/// Mean of sup(g) over n standard Gaussian vectors in R^d; draw i uses the
/// stream derive_seed(seed, {i}).
WidthEstimate width_mc(std::size_t d, std::size_t n_samples, std::uint64_t seed,
                       const std::function<double(std::span<const double>)>& sup, std::string descriptor);

/// sup over s-sparse unit vectors of <g, t>: the l2 norm of the s largest |g_j|.
double sparse_sphere_sup(std::span<const double> g, std::size_t s);

/// Width of the s-sparse unit vectors (s = d gives the whole sphere).
WidthEstimate width_sparse_sphere(std::size_t d, std::size_t s, std::size_t n_samples = 10000,
                                  std::uint64_t seed = 0);

/// Upper proxy for the width of D(K, t0) on the sphere when K is the s-sparse
/// set: every such direction is 2s-sparse. Falls back to the sphere when 2s > d.
WidthEstimate width_descent_cone_sparse_proxy(std::size_t d, std::size_t s, std::size_t n_samples = 10000,
                                              std::uint64_t seed = 0);

/// ceil(mean^2).
std::size_t min_samples(const WidthEstimate& w);

void to_json(nlohmann::json& j, const WidthEstimate& w);

}  // namespace ssns
