#pragma once

// Operator oracles and empirical certification of their declared contract.
//
// An oracle carries an inexact field g_delta (what the solver consumes), an
// optional exact field g, and declared constants (delta, mu, L_rel). The
// checkers sample the feasible set and report the worst violation of the
// three defining inequalities:
//
//   inexactness        <g(y), x-y>  <=  <g_d(y), x-y> + delta
//   strong monotonicity <g_d(y), x-y> + <g_d(x), y-x> + mu V(x,y)  <=  delta
//   relative smoothness <g_d(y)-g_d(z), x-z>  <=  L (V(x,z) + V(z,y)) + delta
//
// A report "passes" when max_violation <= 1e-9.

#include "bvi/core.hpp"
#include "bvi/feasible_set.hpp"
#include "bvi/geometry.hpp"

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace bvi {

struct OperatorOracle {
  std::function<Vector(const Vector&)> eval_inexact;
  std::function<Vector(const Vector&)> eval_exact;  // may be empty
  double delta = 0.0;
  double mu = 0.0;
  double L_rel = 1.0;

  bool has_exact() const { return static_cast<bool>(eval_exact); }

  Vector inexact(const Vector& x) const { return eval_inexact(x); }
  Vector exact(const Vector& x) const {
    if (!eval_exact) throw ConfigError("oracle: exact field unavailable");
    return eval_exact(x);
  }

  /// Exact oracle promoted to the inexact interface with delta = 0.
  static OperatorOracle from_exact(std::function<Vector(const Vector&)> g, double mu, double L_rel) {
    OperatorOracle o;
    o.eval_inexact = g;
    o.eval_exact = std::move(g);
    o.delta = 0.0;
    o.mu = mu;
    o.L_rel = L_rel;
    return o;
  }
};

struct PropertyReport {
  std::string property;
  std::int64_t samples_checked = 0;
  double max_violation = 0.0;
  std::vector<Vector> worst_witness;

  bool passes(double tol = 1e-9) const { return max_violation <= tol; }
};

inline constexpr double kCheckerTolerance = 1e-9;

namespace detail {

inline void require_samples(std::int64_t n) {
  if (n < 1) throw DomainError("checker: n_samples must be at least 1");
}

}  // namespace detail

/// Worst observed violation of the inexactness inequality over sampled
/// pairs. Requires the exact field.
inline PropertyReport check_inexactness(const OperatorOracle& oracle, const FeasibleSet& set,
                                        std::int64_t n_samples, std::uint64_t seed) {
  detail::require_samples(n_samples);
  if (!oracle.has_exact())
    throw ConfigError("check_inexactness: oracle lacks the exact field");
  Rng rng(seed);
  PropertyReport rep;
  rep.property = "inexactness";
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const Vector x = set.sample(rng);
    const Vector y = set.sample(rng);
    const Vector gy = oracle.exact(y);
    const Vector gdy = oracle.inexact(y);
    const double viol = (gy - gdy).dot(x - y) - oracle.delta;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_witness = {x, y};
    }
  }
  rep.samples_checked = n_samples;
  return rep;
}

/// Worst observed violation of relative strong monotonicity with the
/// declared mu, measured in the setup's divergence.
inline PropertyReport check_rel_strong_monotonicity(const OperatorOracle& oracle,
                                                    const ProxSetup& setup,
                                                    const FeasibleSet& set,
                                                    std::int64_t n_samples, std::uint64_t seed) {
  detail::require_samples(n_samples);
  Rng rng(seed);
  PropertyReport rep;
  rep.property = "rel_strong_monotonicity";
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const Vector x = set.sample(rng);
    const Vector y = set.sample(rng);
    const Vector gdx = oracle.inexact(x);
    const Vector gdy = oracle.inexact(y);
    const double lhs = gdy.dot(x - y) + gdx.dot(y - x) + oracle.mu * bregman(setup, x, y);
    const double viol = lhs - oracle.delta;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_witness = {x, y};
    }
  }
  rep.samples_checked = n_samples;
  return rep;
}

/// Worst observed violation of relative smoothness with the declared L_rel
/// over sampled triples (x, y, z).
inline PropertyReport check_rel_smoothness(const OperatorOracle& oracle, const ProxSetup& setup,
                                           const FeasibleSet& set, std::int64_t n_samples,
                                           std::uint64_t seed) {
  detail::require_samples(n_samples);
  Rng rng(seed);
  PropertyReport rep;
  rep.property = "rel_smoothness";
  rep.max_violation = -std::numeric_limits<double>::infinity();
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const Vector x = set.sample(rng);
    const Vector y = set.sample(rng);
    const Vector z = set.sample(rng);
    const Vector gdy = oracle.inexact(y);
    const Vector gdz = oracle.inexact(z);
    const double lhs = (gdy - gdz).dot(x - z);
    const double rhs = oracle.L_rel * (bregman(setup, x, z) + bregman(setup, z, y)) + oracle.delta;
    const double viol = lhs - rhs;
    if (viol > rep.max_violation) {
      rep.max_violation = viol;
      rep.worst_witness = {x, y, z};
    }
  }
  rep.samples_checked = n_samples;
  return rep;
}

/// Wraps an exact oracle with a deterministic pseudo-random perturbation of
/// dual norm exactly delta / diam(set), which satisfies the inexactness
/// inequality with the given delta by Hoelder's inequality. The perturbation
/// at a point depends only on (noise_seed, point), so repeated evaluations
/// are bit-identical.
inline OperatorOracle make_inexact(const OperatorOracle& base, double delta,
                                   const FeasibleSet& set, std::uint64_t noise_seed) {
  if (!base.has_exact()) throw ConfigError("make_inexact: base oracle lacks the exact field");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("make_inexact: delta must be nonnegative");

  // norm pairing implied by the set: l1/l-inf on simplex blocks, l2 otherwise
  const ProxSetup norm_setup = ProxSetup::for_set(set);
  const double diam = set_diameter(norm_setup, set);
  const double target = delta / diam;
  const Eigen::Index n = set.dim();

  // The FeasibleSet is captured by value through a copy shared by the
  // closures; dual_norm only reads block structure.
  auto shared_set = std::make_shared<FeasibleSet>(set);
  auto noise = [norm_setup, shared_set, target, noise_seed, n](const Vector& x) -> Vector {
    if (target == 0.0) return Vector::Zero(n);
    std::uint64_t state = hash_vector(noise_seed, x);
    Vector zeta(n);
    double nrm = 0.0;
    do {
      // Box-Muller over splitmix64 uniforms; stateless and fast.
      for (Eigen::Index i = 0; i < n; i += 2) {
        double u1 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        double u2 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        while (u1 <= 0.0) u1 = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        zeta[i] = r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) zeta[i + 1] = r * std::sin(2.0 * M_PI * u2);
      }
      nrm = dual_norm(norm_setup, *shared_set, zeta);
    } while (!(nrm > 0.0));
    return zeta * (target / nrm);
  };

  OperatorOracle out;
  out.eval_exact = base.eval_exact;
  out.eval_inexact = [base_exact = base.eval_exact, noise](const Vector& x) -> Vector {
    return base_exact(x) + noise(x);
  };
  out.delta = delta;
  out.mu = base.mu;
  out.L_rel = base.L_rel;
  return out;
}

}  // namespace bvi
