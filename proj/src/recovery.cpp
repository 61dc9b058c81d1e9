#include "ssns/recovery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>

namespace ssns {
namespace {

void require_dim(std::size_t got, std::size_t want) {
  if (got != want) {
    throw std::invalid_argument("dimension mismatch: got " + std::to_string(got) + ", expected " + std::to_string(want));
  }
}

// Calls emit(row, y) for each of the m observations, in order.
template <class Emit>
void generate_rows(const SensingModel& model, std::size_t m, std::uint64_t seed, Emit&& emit) {
  const std::size_t d = model.dim();
  const auto& x = model.x();
  const Channel& ch = model.channel();
  Sampler sampler(model.dist(), derive_seed(seed, {0}));
  Rng noise(derive_seed(seed, {1}));
  std::normal_distribution<double> normal;
  std::vector<double> a(d);
  for (std::size_t i = 0; i < m; ++i) {
    sampler.fill(a);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += a[j] * x[j];
    double y = model.link()(s);
    switch (ch.kind) {
      case ChannelKind::exact: break;
      case ChannelKind::additive_noise: y += ch.sigma_z * normal(noise); break;
      case ChannelKind::bit_flip:
        if (noise.uniform01() < ch.q) y = -y;
        break;
    }
    emit(a, y);
  }
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw std::runtime_error("truncated dataset file");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

ConstraintSet ConstraintSet::sparse(std::size_t dim, std::size_t s) {
  if (s < 1 || s > dim) throw std::invalid_argument("sparse K needs 1 <= s <= d");
  return {ConstraintKind::sparse, dim, s, 0.0};
}

ConstraintSet ConstraintSet::l1_ball(std::size_t dim, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("l1 ball radius must be > 0");
  return {ConstraintKind::l1_ball, dim, 0, radius};
}

ConstraintSet ConstraintSet::l2_ball(std::size_t dim, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("l2 ball radius must be > 0");
  return {ConstraintKind::l2_ball, dim, 0, radius};
}

ConstraintSet ConstraintSet::full_space(std::size_t dim) { return {ConstraintKind::full_space, dim, 0, 0.0}; }

bool ConstraintSet::contains(std::span<const double> t, double tol) const {
  if (t.size() != dim) return false;
  switch (kind) {
    case ConstraintKind::sparse:
      return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](double e) { return e != 0.0; })) <= s;
    case ConstraintKind::l1_ball: {
      double n1 = 0.0;
      for (double e : t) n1 += std::abs(e);
      return n1 <= radius * (1.0 + tol) + tol;
    }
    case ConstraintKind::l2_ball: return norm2(t) <= radius * (1.0 + tol) + tol;
    case ConstraintKind::full_space: return true;
  }
  return false;
}

std::string ConstraintSet::describe() const {
  switch (kind) {
    case ConstraintKind::sparse: return "sparse(s=" + std::to_string(s) + ")";
    case ConstraintKind::l1_ball: return "l1_ball(R=" + std::to_string(radius) + ")";
    case ConstraintKind::l2_ball: return "l2_ball(R=" + std::to_string(radius) + ")";
    case ConstraintKind::full_space: return "full_space";
  }
  return "";
}

std::vector<double> project_l1(std::span<const double> v, double r) {
  double n1 = 0.0;
  for (double e : v) n1 += std::abs(e);
  std::vector<double> out(v.begin(), v.end());
  if (n1 <= r) return out;
  std::vector<double> u(v.size());
  std::transform(v.begin(), v.end(), u.begin(), [](double e) { return std::abs(e); });
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - r) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& e : out) e = std::copysign(std::max(std::abs(e) - theta, 0.0), e);
  return out;
}

std::vector<double> project(std::span<const double> v, const ConstraintSet& k) {
  require_dim(v.size(), k.dim);
  switch (k.kind) {
    case ConstraintKind::sparse: {
      std::vector<std::size_t> idx(v.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k.s), idx.end(),
                        [&v](std::size_t a, std::size_t b) {
                          const double fa = std::abs(v[a]), fb = std::abs(v[b]);
                          return fa != fb ? fa > fb : a < b;
                        });
      std::vector<double> out(v.size(), 0.0);
      for (std::size_t i = 0; i < k.s; ++i) out[idx[i]] = v[idx[i]];
      return out;
    }
    case ConstraintKind::l1_ball: return project_l1(v, k.radius);
    case ConstraintKind::l2_ball: {
      std::vector<double> out(v.begin(), v.end());
      const double n = norm2(v);
      if (n > k.radius) {
        for (double& e : out) e *= k.radius / n;
      }
      return out;
    }
    case ConstraintKind::full_space: return {v.begin(), v.end()};
  }
  return {};
}

std::uint64_t model_fingerprint(const SensingModel& model) {
  const std::string s = model.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Dataset generate(const SensingModel& model, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  Dataset data;
  data.d = model.dim();
  data.m = m;
  data.seed = seed;
  data.model_fingerprint = model_fingerprint(model);
  data.A.reserve(m * data.d);
  data.y.reserve(m);
  generate_rows(model, m, seed, [&data](const std::vector<double>& a, double y) {
    data.A.insert(data.A.end(), a.begin(), a.end());
    data.y.push_back(y);
  });
  return data;
}

std::vector<double> generate_v_hat(const SensingModel& model, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  std::vector<double> v(model.dim(), 0.0);
  generate_rows(model, m, seed, [&v](const std::vector<double>& a, double y) {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += y * a[j];
  });
  for (double& e : v) e /= static_cast<double>(m);
  return v;
}

std::vector<double> v_hat(const Dataset& data) {
  std::vector<double> v(data.d, 0.0);
  for (std::size_t i = 0; i < data.m; ++i) {
    const double* a = data.A.data() + i * data.d;
    for (std::size_t j = 0; j < data.d; ++j) v[j] += data.y[i] * a[j];
  }
  for (double& e : v) e /= static_cast<double>(data.m);
  return v;
}

double empirical_loss(const Dataset& data, std::span<const double> t) {
  require_dim(t.size(), data.d);
  double acc = 0.0;
  for (std::size_t i = 0; i < data.m; ++i) acc += data.y[i] * dot(data.row(i), t);
  return dot(t, t) - 2.0 * acc / static_cast<double>(data.m);
}

std::vector<double> estimate(const Dataset& data, const ConstraintSet& k) { return project(v_hat(data), k); }

std::vector<double> normalize(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  const double n = norm2(x);
  if (n == 0.0) return out;
  for (double& e : out) e /= n;
  return out;
}

RecoveryError recovery_error(std::span<const double> x_hat, std::span<const double> x, double lambda) {
  require_dim(x_hat.size(), x.size());
  RecoveryError r;
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += (x_hat[j] - lambda * x[j]) * (x_hat[j] - lambda * x[j]);
  r.err_scaled = std::sqrt(s);
  if (lambda > 0.0) {
    const auto xb = normalize(x_hat);
    double t = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) t += (xb[j] - x[j]) * (xb[j] - x[j]);
    r.err_normalized = std::sqrt(t);
  }
  return r;
}

void write_dataset(std::ostream& os, const Dataset& data) {
  if (data.d > 0xffffffffULL || data.m > 0xffffffffULL) throw std::invalid_argument("dataset too large for u32 header");
  os.write("SSNS1", 5);
  put_u32(os, static_cast<std::uint32_t>(data.d));
  put_u32(os, static_cast<std::uint32_t>(data.m));
  put_u64(os, data.seed);
  for (double v : data.A) put_u64(os, std::bit_cast<std::uint64_t>(v));
  for (double v : data.y) put_u64(os, std::bit_cast<std::uint64_t>(v));
}

Dataset read_dataset(std::istream& is) {
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, "SSNS1", 5) != 0) throw std::runtime_error("not an SSNS1 dataset");
  Dataset data;
  data.d = static_cast<std::size_t>(get_le(is, 4));
  data.m = static_cast<std::size_t>(get_le(is, 4));
  data.seed = get_le(is, 8);
  data.A.resize(data.d * data.m);
  data.y.resize(data.m);
  for (double& v : data.A) v = std::bit_cast<double>(get_le(is, 8));
  for (double& v : data.y) v = std::bit_cast<double>(get_le(is, 8));
  return data;
}

}  // namespace ssns
