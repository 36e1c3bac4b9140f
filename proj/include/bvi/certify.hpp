#pragma once

// Empirical certificates. Each verifier replays a finished trace against
// one of the guarantees the method is supposed to satisfy and reports the
// worst margin (right side minus left side; the claim holds when the margin
// is no worse than -1e-9).
//
//   lemma1_stepwise     V(x*, z_{k+1}) <= V(x*, z_k) + delta / L_{k+1}
//   lemma1_aggregate    V(x*, z_N)    <= V(x*, z_0) + delta S_N
//   theorem1_rate       -(1/S_N) sum_k <g(w_k), x* - w_k> / L_{k+1}
//                           <= max_x V(x, z_0) / S_N,
//                       and the same bound for <g(x*), avg_w - x*>
//   theorem2_accuracy   V(x*, x_P) <= eps + (delta/mu)(1 + 2 omega L / mu)
//   theorem2_itercount  total inner iterations
//                           <= 2 ceil((2 L omega / mu) log2(R_0^2 / eps))
//   minty_gap           max_x <g(x), c - x> over a grid or sample, >= 0
//
// The gap evaluators are deliberately naive (full grid scan / plain Monte
// Carlo); they exist to cross-check the solver, so they share none of its
// machinery.

#include "bvi/core.hpp"
#include "bvi/feasible_set.hpp"
#include "bvi/geometry.hpp"
#include "bvi/oracle.hpp"
#include "bvi/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace bvi {

enum class ClaimKind {
  Lemma1Stepwise,
  Lemma1Aggregate,
  Theorem1Rate,
  Theorem2Accuracy,
  Theorem2IterCount,
  MintyGap,
};

inline const char* claim_name(ClaimKind c) {
  switch (c) {
    case ClaimKind::Lemma1Stepwise: return "lemma1_stepwise";
    case ClaimKind::Lemma1Aggregate: return "lemma1_aggregate";
    case ClaimKind::Theorem1Rate: return "theorem1_rate";
    case ClaimKind::Theorem2Accuracy: return "theorem2_accuracy";
    case ClaimKind::Theorem2IterCount: return "theorem2_itercount";
    case ClaimKind::MintyGap: return "minty_gap";
  }
  return "unknown";
}

inline constexpr double kCertifyTolerance = 1e-9;

struct Certificate {
  ClaimKind claim = ClaimKind::Lemma1Stepwise;
  bool holds = false;
  double margin = 0.0;  // right side minus left side at the worst point
  nlohmann::json details;
};

namespace detail {

inline void require_nonempty_trace(const UmpTrace& trace) {
  if (trace.iterations.empty()) throw DomainError("certify: trace has no iterations");
}

// z_{k+1} for row k: the next row's starting point, or the final iterate.
inline const Vector& z_after(const UmpTrace& trace, std::size_t k) {
  return k + 1 < trace.iterations.size() ? trace.iterations[k + 1].z : trace.last_z;
}

}  // namespace detail

/// Stepwise divergence decrease along the z-sequence, plus the aggregate
/// form. The reported margin is the worst stepwise slack.
inline Certificate verify_lemma1(const UmpTrace& trace, const Vector& x_star,
                                 const ProxSetup& setup, double delta) {
  detail::require_nonempty_trace(trace);
  Certificate cert;
  cert.claim = ClaimKind::Lemma1Stepwise;

  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_k = 0;
  double v_prev = bregman(setup, x_star, trace.iterations.front().z);
  const double v0 = v_prev;
  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const double v_next = bregman(setup, x_star, detail::z_after(trace, k));
    const double slack = v_prev + delta / trace.iterations[k].L_next - v_next;
    if (slack < worst) {
      worst = slack;
      worst_k = k;
    }
    v_prev = v_next;
  }
  const double v_final = v_prev;
  const double aggregate_margin = v0 + delta * trace.S_N - v_final;

  cert.margin = worst;
  cert.holds = worst >= -kCertifyTolerance && aggregate_margin >= -kCertifyTolerance;
  cert.details = {{"steps", trace.iterations.size()},
                  {"worst_step", worst_k},
                  {"stepwise_margin", worst},
                  {"aggregate_margin", aggregate_margin},
                  {"V_initial", v0},
                  {"V_final", v_final}};
  return cert;
}

/// Aggregate-only form, for reporting alongside the stepwise certificate.
inline Certificate verify_lemma1_aggregate(const UmpTrace& trace, const Vector& x_star,
                                           const ProxSetup& setup, double delta) {
  detail::require_nonempty_trace(trace);
  Certificate cert;
  cert.claim = ClaimKind::Lemma1Aggregate;
  const double v0 = bregman(setup, x_star, trace.iterations.front().z);
  const double v_final = bregman(setup, x_star, trace.last_z);
  cert.margin = v0 + delta * trace.S_N - v_final;
  cert.holds = cert.margin >= -kCertifyTolerance;
  cert.details = {{"V_initial", v0}, {"V_final", v_final}, {"S_N", trace.S_N}};
  return cert;
}

/// Ergodic rate certificate, evaluated with the exact operator: the
/// 1/L-weighted dual gap against x_star is bounded by max_x V(x, z_0) / S_N,
/// and so is the plain gap at the averaged output point.
inline Certificate verify_theorem1(const UmpTrace& trace, const OperatorOracle& oracle,
                                   const Vector& x_star, const ProxSetup& setup,
                                   const FeasibleSet& set) {
  detail::require_nonempty_trace(trace);
  if (!oracle.has_exact()) throw ConfigError("verify_theorem1: oracle lacks the exact field");

  double weighted = 0.0;
  for (const auto& rec : trace.iterations)
    weighted -= oracle.exact(rec.w).dot(x_star - rec.w) / rec.L_next;
  weighted /= trace.S_N;

  const double bound = max_bregman_over_set(setup, set, trace.iterations.front().z) / trace.S_N;
  const double gap_avg = oracle.exact(x_star).dot(trace.averaged_w - x_star);

  Certificate cert;
  cert.claim = ClaimKind::Theorem1Rate;
  cert.margin = std::min(bound - weighted, bound - gap_avg);
  cert.holds = cert.margin >= -kCertifyTolerance;
  cert.details = {{"weighted_gap", weighted},
                  {"bound", bound},
                  {"gap_at_averaged_w", gap_avg},
                  {"S_N", trace.S_N}};
  return cert;
}

/// Final accuracy of a restarted run: V(x*, x_P) against
/// eps + (delta/mu)(1 + 2 omega L / mu).
inline Certificate verify_theorem2(const RestartState& state, const Vector& x_star,
                                   const ProxSetup& setup, double mu, double omega, double L,
                                   double delta, double epsilon) {
  if (!(mu > 0.0)) throw DomainError("verify_theorem2: mu must be positive");
  const double v_final = bregman(setup, x_star, state.final_x);
  const double bound = epsilon + (delta / mu) * (1.0 + 2.0 * omega * L / mu);

  Certificate cert;
  cert.claim = ClaimKind::Theorem2Accuracy;
  cert.margin = bound - v_final;
  cert.holds = state.converged && cert.margin >= -kCertifyTolerance;
  cert.details = {{"V_final", v_final},
                  {"bound", bound},
                  {"stages", state.stages.size()},
                  {"converged", state.converged}};
  return cert;
}

/// Total inner-iteration budget of a restarted run, with a 2x slack over
/// ceil((2 L omega / mu) log2(R_0^2 / eps)) to cover line-search overshoot.
inline Certificate verify_theorem2_itercount(const RestartState& state, double mu, double omega,
                                             double L, double epsilon) {
  if (!(mu > 0.0)) throw DomainError("verify_theorem2_itercount: mu must be positive");
  const double R0_sq =
      state.stages.empty() ? state.final_radius_sq : state.stages.front().radius_sq;
  const double log_term = std::log2(R0_sq / epsilon);
  // log_term < 0 means the run was trivially converged at the start; the
  // budget is then zero iterations, not a negative number.
  const double cap = std::max(0.0, 2.0 * std::ceil((2.0 * L * omega / mu) * log_term));

  Certificate cert;
  cert.claim = ClaimKind::Theorem2IterCount;
  cert.margin = cap - static_cast<double>(state.total_inner_iterations);
  cert.holds = state.converged && cert.margin >= 0.0;
  cert.details = {{"total_inner_iterations", state.total_inner_iterations},
                  {"cap", cap},
                  {"R0_sq", R0_sq},
                  {"stages", state.stages.size()}};
  return cert;
}

/// Replays the line-search acceptance inequality at every recorded
/// iteration, re-deriving both sides from the oracle (deterministic, so the
/// arithmetic reproduces the solver's decision bit for bit).
inline Certificate verify_acceptance_replay(const UmpTrace& trace, const OperatorOracle& oracle,
                                            const ProxSetup& setup) {
  detail::require_nonempty_trace(trace);
  double worst = std::numeric_limits<double>::infinity();
  std::size_t worst_k = 0;
  for (std::size_t k = 0; k < trace.iterations.size(); ++k) {
    const auto& rec = trace.iterations[k];
    const Vector gz = oracle.inexact(rec.z);
    const Vector gw = oracle.inexact(rec.w);
    const auto [lhs, rhs] = acceptance_sides(setup, gz, gw, rec.z, rec.w,
                                             detail::z_after(trace, k), rec.L_next, oracle.delta);
    if (rhs - lhs < worst) {
      worst = rhs - lhs;
      worst_k = k;
    }
  }
  Certificate cert;
  cert.claim = ClaimKind::Lemma1Stepwise;  // acceptance underpins the stepwise bound
  cert.margin = worst;
  cert.holds = worst >= 0.0;
  cert.details = {{"worst_step", worst_k}, {"check", "acceptance_replay"}};
  return cert;
}

// ---------------------------------------------------------------------------
// Minty gap.

namespace detail {

/// Enumerates a deterministic grid over the set with the given resolution.
/// Boundary points are included; the callback may reject a point (oracle
/// undefined there) by simply ignoring it.
inline void for_each_grid_point(const FeasibleSet& set, double resolution,
                                const std::function<void(const Vector&)>& fn) {
  switch (set.kind()) {
    case FeasibleSet::Kind::Ball: {
      const auto& b = set.as_ball();
      const Eigen::Index n = b.center.size();
      const auto steps = static_cast<std::int64_t>(std::ceil(b.radius / resolution));
      Vector x(n);
      std::function<void(Eigen::Index)> rec = [&](Eigen::Index d) {
        if (d == n) {
          if ((x - b.center).norm() <= b.radius) fn(x);
          return;
        }
        for (std::int64_t k = -steps; k <= steps; ++k) {
          x[d] = b.center[d] + static_cast<double>(k) * resolution;
          rec(d + 1);
        }
      };
      rec(0);
      return;
    }
    case FeasibleSet::Kind::Box: {
      const auto& b = set.as_box();
      const Eigen::Index n = b.lower.size();
      Vector x(n);
      std::function<void(Eigen::Index)> rec = [&](Eigen::Index d) {
        if (d == n) {
          fn(x);
          return;
        }
        const auto steps = static_cast<std::int64_t>(std::ceil((b.upper[d] - b.lower[d]) / resolution));
        for (std::int64_t k = 0; k <= steps; ++k) {
          x[d] = std::min(b.lower[d] + static_cast<double>(k) * resolution, b.upper[d]);
          rec(d + 1);
        }
      };
      rec(0);
      return;
    }
    case FeasibleSet::Kind::Simplex: {
      const Eigen::Index n = set.as_simplex().dim;
      const auto steps = static_cast<std::int64_t>(std::ceil(1.0 / resolution));
      Vector x(n);
      std::function<void(Eigen::Index, double)> rec = [&](Eigen::Index d, double remaining) {
        if (d == n - 1) {
          x[d] = remaining;
          fn(x);
          return;
        }
        for (std::int64_t k = 0; k <= steps; ++k) {
          const double v = std::min(static_cast<double>(k) * resolution, 1.0);
          if (v > remaining + 1e-15) break;
          x[d] = v;
          rec(d + 1, std::max(0.0, remaining - v));
        }
      };
      rec(0, 1.0);
      return;
    }
    case FeasibleSet::Kind::Product: {
      // materialize part grids, then take the cartesian product
      const auto& parts = set.as_product().parts;
      std::vector<std::vector<Vector>> lists(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i)
        for_each_grid_point(parts[i], resolution,
                            [&](const Vector& p) { lists[i].push_back(p); });
      Vector x(set.dim());
      std::function<void(std::size_t, Eigen::Index)> rec = [&](std::size_t i, Eigen::Index off) {
        if (i == parts.size()) {
          fn(x);
          return;
        }
        for (const Vector& p : lists[i]) {
          x.segment(off, p.size()) = p;
          rec(i + 1, off + p.size());
        }
      };
      rec(0, 0);
      return;
    }
  }
}

}  // namespace detail

/// Brute-force weak-VI gap of a candidate over a full grid scan,
/// max_x <g(x), candidate - x>, clamped below at 0. A true solution scores
/// 0 at any resolution. Grid mode is restricted to dimension <= 3.
inline double minty_gap(const OperatorOracle& oracle, const FeasibleSet& set,
                        const Vector& candidate, double grid_resolution) {
  if (set.dim() > 3)
    throw ConfigError("minty_gap: grid mode supports dimension <= 3; use minty_gap_sampled");
  if (!(grid_resolution > 0.0)) throw DomainError("minty_gap: resolution must be positive");
  require_dim(candidate, set.dim(), "minty_gap candidate");
  require_finite(candidate, "minty_gap candidate");

  const auto& g = oracle.has_exact() ? oracle.eval_exact : oracle.eval_inexact;
  double gap = 0.0;
  detail::for_each_grid_point(set, grid_resolution, [&](const Vector& x) {
    const Vector gx = g(x);
    if (!gx.allFinite()) return;  // oracle undefined on this boundary point
    gap = std::max(gap, gx.dot(candidate - x));
  });
  return gap;
}

/// Monte Carlo variant for higher dimensions; same definition over sampled
/// points.
inline double minty_gap_sampled(const OperatorOracle& oracle, const FeasibleSet& set,
                                const Vector& candidate, std::int64_t n_samples,
                                std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("minty_gap_sampled: n_samples must be at least 1");
  require_dim(candidate, set.dim(), "minty_gap candidate");
  require_finite(candidate, "minty_gap candidate");

  const auto& g = oracle.has_exact() ? oracle.eval_exact : oracle.eval_inexact;
  Rng rng(seed);
  double gap = 0.0;
  for (std::int64_t s = 0; s < n_samples; ++s) {
    const Vector x = set.sample(rng);
    const Vector gx = g(x);
    if (!gx.allFinite()) continue;
    gap = std::max(gap, gx.dot(candidate - x));
  }
  return gap;
}

}  // namespace bvi
