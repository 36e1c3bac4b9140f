#pragma once

// Adaptive mirror-prox for Minty variational inequalities with inexact
// oracles, plus a restart scheme for relatively strongly monotone operators.
//
// One outer iteration from z_k with curvature estimate L_k:
//
//   find the smallest i >= 0 such that with L_{k+1} = 2^(i-1) L_k and
//     w_k     = argmin_x <g_d(z_k), x> + L_{k+1} V(x, z_k)
//     z_{k+1} = argmin_x <g_d(w_k), x> + L_{k+1} V(x, z_k)
//   the acceptance inequality holds:
//     <g_d(z_k), z_{k+1} - z_k>  <=  <g_d(w_k), z_{k+1} - w_k>
//                                  + <g_d(z_k), w_k - z_k>
//                                  + L_{k+1} (V(w_k, z_k) + V(z_{k+1}, w_k))
//                                  + delta
//   (plus a roundoff allowance; see acceptance_sides)
//
// The first trial halves the running estimate, so L_{k+1} >= L_k / 2 exactly
// and accepted values never exceed twice the true relative smoothness
// constant. g_d(z_k) is evaluated once per outer iteration and reused across
// trials; each trial costs one further oracle call.
//
// Stopping tracks S_N = sum 1/L_{k+1}: either S_N >= max_x V(x, z_0) / eps
// (epsilon target) or S_N >= threshold (used by restart stages, threshold
// omega / mu). Outputs expose the last z, the last w, and the 1/L-weighted
// average of the w's.

#include "bvi/core.hpp"
#include "bvi/feasible_set.hpp"
#include "bvi/geometry.hpp"
#include "bvi/oracle.hpp"

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace bvi {

enum class StopMode { EpsilonTarget, SumThreshold };

struct UmpConfig {
  double epsilon = 1e-3;           // used by StopMode::EpsilonTarget
  double L0 = 1.0;                 // initial curvature estimate
  Vector z0;                       // feasible starting point
  StopMode stop_mode = StopMode::EpsilonTarget;
  double sum_threshold = 0.0;      // used by StopMode::SumThreshold
  std::int64_t max_outer_iters = 1'000'000;
  int max_linesearch_iters = 60;
};

struct IterationRecord {
  std::int64_t k = 0;
  int i_k = 0;        // accepted line-search index
  double L_next = 0;  // L_{k+1}
  double S_k = 0;     // cumulative sum of 1/L_{j+1} up to and including k
  Vector z;           // z_k (point the step started from)
  Vector w;           // w_k
};

struct UmpTrace {
  std::vector<IterationRecord> iterations;
  Vector last_z;      // z_N
  Vector last_w;      // w_{N-1}
  Vector averaged_w;  // (1/S_N) sum_k w_k / L_{k+1}
  double S_N = 0.0;
  double stop_target = 0.0;  // S_N threshold the run was aiming for
  std::int64_t oracle_calls = 0;
  bool converged = false;
};

struct LineSearchResult {
  Vector w;
  Vector z_next;
  double L_next = 0.0;
  int i = 0;
  std::int64_t oracle_calls = 0;
};

/// Line search exhausted its trial budget. Carries the last trial so the
/// failure can be diagnosed; almost always means the declared constants do
/// not match the oracle.
class LineSearchError : public std::runtime_error {
 public:
  LineSearchError(std::string what, double L_last, int i_last, Vector w, Vector z_next,
                  double lhs, double rhs)
      : std::runtime_error(std::move(what)),
        L_last(L_last),
        i_last(i_last),
        w(std::move(w)),
        z_next(std::move(z_next)),
        lhs(lhs),
        rhs(rhs) {}
  double L_last;
  int i_last;
  Vector w;
  Vector z_next;
  double lhs;
  double rhs;
};

/// Scale factor for the acceptance test's cancellation allowance. The three
/// inner products are O(|g| d) for step size d while their sum is O(L d^2),
/// so once steps shrink past ~1e-10 the raw comparison is rounding noise and
/// a trial with L at or above the true constant can be rejected, doubling L
/// past its certified ceiling. 1e-12 sits two orders above the worst-case
/// dot-product roundoff at the dimensions in play and many orders below
/// every certified tolerance.
inline constexpr double kAcceptanceSlack = 1e-12;

/// Both sides of the acceptance inequality, in the exact evaluation order
/// the solver uses; certification replays this bitwise. The allowance is
/// folded into the right side so a replay reproduces the decision.
inline std::pair<double, double> acceptance_sides(const ProxSetup& setup, const Vector& gz,
                                                  const Vector& gw, const Vector& z,
                                                  const Vector& w, const Vector& z_next,
                                                  double L, double delta) {
  const double lhs = gz.dot(z_next - z);
  const double slack =
      kAcceptanceSlack * (gz.norm() * ((z_next - z).norm() + (w - z).norm()) +
                          gw.norm() * (z_next - w).norm());
  const double rhs = gw.dot(z_next - w) + gz.dot(w - z) +
                     L * (bregman(setup, w, z) + bregman(setup, z_next, w)) + delta + slack;
  return {lhs, rhs};
}

/// One adaptive step from z with previous estimate L_prev.
inline LineSearchResult line_search_step(const OperatorOracle& oracle, const ProxSetup& setup,
                                         const FeasibleSet& set, const Vector& z, double L_prev,
                                         double delta, int max_linesearch_iters) {
  if (!(L_prev > 0.0) || !std::isfinite(L_prev))
    throw DomainError("line_search_step: L_prev must be positive and finite");
  if (max_linesearch_iters < 1)
    throw DomainError("line_search_step: max_linesearch_iters must be at least 1");

  const Vector gz = oracle.inexact(z);  // shared by all trials
  std::int64_t calls = 1;

  double L_trial = 0.0;
  Vector w, z_next;
  double lhs = 0.0, rhs = 0.0;
  for (int i = 0; i < max_linesearch_iters; ++i) {
    L_trial = std::ldexp(L_prev, i - 1);  // 2^(i-1) L_prev, exact scaling
    w = prox_map(setup, set, z, gz, L_trial);
    const Vector gw = oracle.inexact(w);
    ++calls;
    z_next = prox_map(setup, set, z, gw, L_trial);
    std::tie(lhs, rhs) = acceptance_sides(setup, gz, gw, z, w, z_next, L_trial, delta);
    if (lhs <= rhs) {
      LineSearchResult r;
      r.w = std::move(w);
      r.z_next = std::move(z_next);
      r.L_next = L_trial;
      r.i = i;
      r.oracle_calls = calls;
      return r;
    }
  }
  throw LineSearchError(
      "line search did not accept within " + std::to_string(max_linesearch_iters) +
          " trials (declared smoothness constant or delta likely understates the oracle)",
      L_trial, max_linesearch_iters - 1, std::move(w), std::move(z_next), lhs, rhs);
}

/// Run until the chosen stopping rule fires or max_outer_iters is exhausted
/// (in which case the trace comes back with converged = false).
inline UmpTrace ump_solve(const OperatorOracle& oracle, const ProxSetup& setup,
                          const FeasibleSet& set, const UmpConfig& config) {
  require_finite(config.z0, "ump_solve z0");
  if (!set.contains(config.z0, 1e-9)) throw DomainError("ump_solve: z0 is not feasible");
  if (!(config.L0 > 0.0) || !std::isfinite(config.L0))
    throw DomainError("ump_solve: L0 must be positive and finite");
  if (config.max_outer_iters < 1) throw DomainError("ump_solve: max_outer_iters must be at least 1");

  double target = 0.0;
  if (config.stop_mode == StopMode::EpsilonTarget) {
    if (!(config.epsilon > 0.0)) throw DomainError("ump_solve: epsilon must be positive");
    target = max_bregman_over_set(setup, set, config.z0) / config.epsilon;
  } else {
    if (!(config.sum_threshold > 0.0))
      throw DomainError("ump_solve: sum_threshold must be positive");
    target = config.sum_threshold;
  }

  UmpTrace trace;
  trace.stop_target = target;

  Vector z = config.z0;
  double L = config.L0;
  double S = 0.0;
  Vector avg_acc = Vector::Zero(z.size());

  for (std::int64_t k = 0; k < config.max_outer_iters; ++k) {
    LineSearchResult step = line_search_step(oracle, setup, set, z, L, oracle.delta,
                                             config.max_linesearch_iters);
    trace.oracle_calls += step.oracle_calls;
    S += 1.0 / step.L_next;
    avg_acc += step.w / step.L_next;

    IterationRecord rec;
    rec.k = k;
    rec.i_k = step.i;
    rec.L_next = step.L_next;
    rec.S_k = S;
    rec.z = z;
    rec.w = step.w;
    trace.iterations.push_back(std::move(rec));

    z = step.z_next;
    L = step.L_next;

    if (S >= target) {
      trace.converged = true;
      break;
    }
  }

  trace.S_N = S;
  trace.last_z = z;
  trace.last_w = trace.iterations.back().w;
  trace.averaged_w = avg_acc / S;
  return trace;
}

// ---------------------------------------------------------------------------
// Restarts.

enum class RadiusRule {
  PaperExplicit,     // R_{p+1}^2 = omega R_0^2 / (2^{p+1} mu S_Np) - delta/mu
  RecursiveHalving,  // R_{p+1}^2 = R_p^2 / 2 + (delta/mu)(1 + 2 omega L / mu)
};

struct RestartConfig {
  double epsilon = 1e-4;  // target divergence to the solution
  double mu = 0.0;        // relative strong monotonicity constant
  double omega = 2.0;     // unit-scale bound on the distance-generating function
  Vector x0;              // feasible start
  double R0_sq = 1.0;     // bound on V(x_star, x0)
  double L0 = 1.0;
  RadiusRule radius_rule = RadiusRule::RecursiveHalving;
  std::int64_t max_inner_iters_per_stage = 1'000'000;
  int max_linesearch_iters = 60;
};

struct StageRecord {
  int index = 0;
  Vector center;           // stage prox center x_p (also the stage's z_0)
  double radius_sq = 0.0;  // R_p^2 the stage ran with
  bool radius_clamped = false;
  UmpTrace trace;
};

struct RestartState {
  std::vector<StageRecord> stages;
  Vector final_x;
  std::int64_t total_inner_iterations = 0;
  std::int64_t oracle_calls = 0;
  bool converged = false;
  int failed_stage = -1;  // stage whose inner solve did not converge, if any
  double final_radius_sq = 0.0;
};

/// Restarted solve: stages run the adaptive method with the fixed budget
/// S >= omega / mu, recenter the geometry at the stage output (last w), and
/// shrink the radius bookkeeping by the configured rule until
/// p > log2(2 R_0^2 / eps). Radii are clamped below at eps / 2, which keeps
/// the explicit rule's rescaling argument positive when delta is large.
///
/// If R_0^2 <= eps / 2 already, the target holds at x0 and no stage runs.
inline RestartState restart_solve(const OperatorOracle& oracle, const ProxSetup& base_setup,
                                  const FeasibleSet& set, const RestartConfig& config) {
  require_finite(config.x0, "restart_solve x0");
  if (!set.contains(config.x0, 1e-9)) throw DomainError("restart_solve: x0 is not feasible");
  if (!(config.mu > 0.0)) throw DomainError("restart_solve: mu must be positive");
  if (!(config.omega > 0.0)) throw DomainError("restart_solve: omega must be positive");
  if (!(config.epsilon > 0.0)) throw DomainError("restart_solve: epsilon must be positive");
  if (!(config.R0_sq > 0.0) || !std::isfinite(config.R0_sq))
    throw DomainError("restart_solve: R0_sq must be positive and finite");
  if (base_setup.kind == ProxKind::Euclidean && base_setup.scale != 1.0)
    throw DomainError("restart_solve: base setup must be unit scale");

  RestartState state;
  state.final_x = config.x0;
  state.final_radius_sq = config.R0_sq;
  if (config.R0_sq <= config.epsilon / 2.0) {
    state.converged = true;
    return state;
  }

  const double stage_threshold = config.omega / config.mu;
  const double stage_limit = std::log2(2.0 * config.R0_sq / config.epsilon);

  Vector x = config.x0;
  double R_sq = config.R0_sq;
  bool clamped = false;
  double L = config.L0;

  for (int p = 0;; ++p) {
    const ProxSetup stage_setup = base_setup.kind == ProxKind::Euclidean
                                      ? rescale(base_setup, x, R_sq)
                                      : recenter(base_setup, x);

    UmpConfig inner;
    inner.stop_mode = StopMode::SumThreshold;
    inner.sum_threshold = stage_threshold;
    inner.z0 = x;
    inner.L0 = L;
    inner.max_outer_iters = config.max_inner_iters_per_stage;
    inner.max_linesearch_iters = config.max_linesearch_iters;

    UmpTrace trace = ump_solve(oracle, stage_setup, set, inner);

    StageRecord rec;
    rec.index = p;
    rec.center = x;
    rec.radius_sq = R_sq;
    rec.radius_clamped = clamped;
    state.total_inner_iterations += static_cast<std::int64_t>(trace.iterations.size());
    state.oracle_calls += trace.oracle_calls;

    const bool stage_ok = trace.converged;
    const double S_stage = trace.S_N;
    x = trace.last_w;
    L = trace.iterations.back().L_next;
    rec.trace = std::move(trace);
    state.stages.push_back(std::move(rec));

    if (!stage_ok) {
      state.failed_stage = p;
      state.final_x = x;
      state.final_radius_sq = R_sq;
      return state;  // converged stays false
    }

    if (static_cast<double>(p + 1) > stage_limit) break;

    double next_sq = 0.0;
    if (config.radius_rule == RadiusRule::PaperExplicit) {
      next_sq = config.omega * config.R0_sq /
                    (std::ldexp(1.0, p + 1) * config.mu * S_stage) -
                oracle.delta / config.mu;
    } else {
      next_sq = R_sq / 2.0 +
                (oracle.delta / config.mu) *
                    (1.0 + 2.0 * config.omega * oracle.L_rel / config.mu);
    }
    clamped = next_sq < config.epsilon / 2.0;
    R_sq = clamped ? config.epsilon / 2.0 : next_sq;
  }

  state.final_x = x;
  state.final_radius_sq = R_sq;
  state.converged = true;
  return state;
}

}  // namespace bvi
