#pragma once

// Shared aliases, error types and deterministic random plumbing used across
// the library. Everything downstream assumes vectors are dense, finite and
// at least one-dimensional; the helpers here are where that gets enforced.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace bvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid data fed into an operation (wrong dimension, non-finite coords,
/// points outside the operation's domain).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally unsupported request (e.g. an unsupported geometry/set pair).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline bool is_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* name) {
  if (v.size() < 1) throw DomainError(std::string(name) + ": empty vector");
  if (!v.allFinite()) throw DomainError(std::string(name) + ": non-finite coordinate");
}

inline void require_dim(const Vector& v, Eigen::Index n, const char* name) {
  if (v.size() != n)
    throw DomainError(std::string(name) + ": expected dimension " + std::to_string(n) +
                      ", got " + std::to_string(v.size()));
}

// ---------------------------------------------------------------------------
// Deterministic randomness.
//
// The engines below avoid std::*_distribution on purpose: the standard pins
// down mt19937_64's raw output but not the distributions, and trace files
// are contractually byte-identical across reruns with a fixed seed.

/// splitmix64 step; also used as the mixing function for hashing.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seeded generator with reproducible uniform / gaussian / exponential
/// draws. Stream is fully determined by the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    // avoid log(0)
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Exponential with unit rate.
  double exponential() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return -std::log(u);
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Mixes a seed with the bit patterns of a vector. Used to derive a
/// per-point noise stream: identical (seed, x) pairs give identical hashes.
inline std::uint64_t hash_vector(std::uint64_t seed, const Vector& x) {
  std::uint64_t h = seed ^ 0x1234567890abcdefULL;
  splitmix64(h);
  std::uint64_t n = static_cast<std::uint64_t>(x.size());
  h ^= splitmix64(n);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t bits;
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&bits, &x[i], sizeof(bits));
    h ^= bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    splitmix64(h);
  }
  return h;
}

}  // namespace bvi
