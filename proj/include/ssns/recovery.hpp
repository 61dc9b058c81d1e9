#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssns/link_model.hpp"

namespace ssns {

enum class ConstraintKind { sparse, l1_ball, l2_ball, full_space };

/// The closed set K the estimator is constrained to.
struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::full_space;
  std::size_t dim = 0;
  std::size_t s = 0;    // sparse
  double radius = 0.0;  // balls

  static ConstraintSet sparse(std::size_t dim, std::size_t s);
  static ConstraintSet l1_ball(std::size_t dim, double radius);
  static ConstraintSet l2_ball(std::size_t dim, double radius);
  static ConstraintSet full_space(std::size_t dim);

  bool contains(std::span<const double> t, double tol = 1e-12) const;
  std::string describe() const;
};

/// Euclidean projection onto K.
///   sparse   keep the s largest magnitudes, ties to the lowest index
///   l1_ball  soft threshold at the exact sort-based pivot
///   l2_ball  radial scaling
std::vector<double> project(std::span<const double> v, const ConstraintSet& k);

/// Projection of v onto the l1 ball of radius r.
std::vector<double> project_l1(std::span<const double> v, double r);

struct Dataset {
  std::size_t d = 0;
  std::size_t m = 0;
  std::vector<double> A;  // m x d, row-major
  std::vector<double> y;
  std::uint64_t model_fingerprint = 0;
  std::uint64_t seed = 0;

  std::span<const double> row(std::size_t i) const { return {A.data() + i * d, d}; }
};

/// FNV-1a of the model's JSON dump.
std::uint64_t model_fingerprint(const SensingModel& model);

/// m i.i.d. pairs (y_i, a_i). Rows of A come from the stream
/// derive_seed(seed, {0}); channel noise from derive_seed(seed, {1}).
Dataset generate(const SensingModel& model, std::size_t m, std::uint64_t seed);

/// v_hat = (1/m) sum y_i a_i of the dataset generate(model, m, seed) would
/// return, computed without storing A.
std::vector<double> generate_v_hat(const SensingModel& model, std::size_t m, std::uint64_t seed);

/// L_m(t) = |t|^2 - (2/m) sum y_i <a_i, t>.
double empirical_loss(const Dataset& data, std::span<const double> t);

std::vector<double> v_hat(const Dataset& data);

/// argmin over K of L_m, i.e. project(v_hat, K) since L_m(t) = |t - v_hat|^2 - |v_hat|^2.
std::vector<double> estimate(const Dataset& data, const ConstraintSet& k);

/// x/|x|, or the zero vector for x = 0.
std::vector<double> normalize(std::span<const double> x);

struct RecoveryError {
  double err_scaled = 0.0;
  /// Absent when lambda <= 0.
  std::optional<double> err_normalized;
};

RecoveryError recovery_error(std::span<const double> x_hat, std::span<const double> x, double lambda);

/// Binary layout: "SSNS1", d (u32), m (u32), seed (u64), little-endian, then
/// A row-major and y as little-endian f64.
void write_dataset(std::ostream& os, const Dataset& data);
Dataset read_dataset(std::istream& is);

}  // namespace ssns
