#pragma once

// Bregman geometry: distance-generating functions, divergences, prox maps
// with closed forms, and the bounds the solver's stopping rules consume.
//
// Two kinds are supported. Euclidean uses d(x) = (1/2)|x - c|^2 paired with
// balls and boxes under the l2 norm. NegativeEntropy uses the KL divergence
// relative to the setup center, paired with probability simplices under the
// l1 norm (dual l-infinity). Products of sets are handled blockwise with the
// block norms combined in l2 fashion.

#include "bvi/core.hpp"
#include "bvi/feasible_set.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace bvi {

enum class ProxKind { Euclidean, NegativeEntropy };

/// Entropy reference coordinates below this are refused (DomainError) rather
/// than clamped; silent clamping would corrupt divergence values near the
/// boundary.
inline constexpr double kEntropyFloor = 1e-300;

/// A distance-generating function instance. `center` is the minimizer of d
/// over the ambient space, `scale` the rescaling radius (Euclidean only;
/// entropy setups are recentered without rescaling), and `omega` the
/// unit-scale bound: d(x) <= omega * scale^2 / 2 whenever |x - center| is
/// within `scale` under the setup's norm.
struct ProxSetup {
  ProxKind kind = ProxKind::Euclidean;
  Vector center;
  double scale = 1.0;
  double omega = 2.0;

  // Euclidean omega is deliberately 2, not the tight 1: the restart stage
  // budget omega/mu then halves the divergence to the solution in the worst
  // case, where the tight constant would only guarantee non-increase.
  static ProxSetup euclidean(Vector center) {
    require_finite(center, "prox center");
    return ProxSetup{ProxKind::Euclidean, std::move(center), 1.0, 2.0};
  }

  static ProxSetup euclidean_unit(Eigen::Index dim) {
    return euclidean(Vector::Zero(dim));
  }

  /// Entropy over a single simplex, centered at the barycenter, so
  /// d(x) = KL(x || uniform) and max over the simplex is ln(dim) = omega/2.
  static ProxSetup entropy(Eigen::Index dim) {
    if (dim < 2) throw DomainError("entropy setup: dimension must be at least 2");
    return ProxSetup{ProxKind::NegativeEntropy,
                     Vector::Constant(dim, 1.0 / static_cast<double>(dim)), 1.0,
                     2.0 * std::log(static_cast<double>(dim))};
  }

  /// Kind-appropriate setup for a set: entropy for simplices and products
  /// of simplices (omega adds across blocks), Euclidean otherwise.
  static ProxSetup for_set(const FeasibleSet& set) {
    if (set.kind() == FeasibleSet::Kind::Simplex) return entropy(set.dim());
    if (set.kind() == FeasibleSet::Kind::Product) {
      bool all_simplex = true;
      for (const auto& p : set.as_product().parts)
        all_simplex = all_simplex && p.kind() == FeasibleSet::Kind::Simplex;
      if (all_simplex) {
        double omega = 0.0;
        for (const auto& p : set.as_product().parts)
          omega += 2.0 * std::log(static_cast<double>(p.dim()));
        return ProxSetup{ProxKind::NegativeEntropy, set.center_point(), 1.0, omega};
      }
    }
    return euclidean(set.center_point());
  }
};

namespace detail {

struct Block {
  Eigen::Index offset;
  Eigen::Index length;
  const FeasibleSet* set;
};

inline void collect_blocks(const FeasibleSet& set, Eigen::Index offset, std::vector<Block>& out) {
  if (set.kind() == FeasibleSet::Kind::Product) {
    for (const auto& p : set.as_product().parts) {
      collect_blocks(p, offset, out);
      offset += p.dim();
    }
  } else {
    out.push_back(Block{offset, set.dim(), &set});
  }
}

inline std::vector<Block> blocks_of(const FeasibleSet& set) {
  std::vector<Block> out;
  collect_blocks(set, 0, out);
  return out;
}

inline void check_entropy_arg(const Vector& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] >= kEntropyFloor))
      throw DomainError(std::string(name) +
                        ": entropy geometry requires coordinates >= 1e-300 (got " +
                        std::to_string(v[i]) + " at index " + std::to_string(i) + ")");
}

}  // namespace detail

/// Value of the setup's distance-generating function at x.
inline double prox_value(const ProxSetup& setup, const Vector& x) {
  require_finite(x, "prox_value x");
  require_dim(x, setup.center.size(), "prox_value x");
  if (setup.kind == ProxKind::Euclidean) {
    // scale-invariant: R^2 d((x-c)/R) = |x-c|^2 / 2
    return 0.5 * (x - setup.center).squaredNorm();
  }
  detail::check_entropy_arg(x, "prox_value x");
  detail::check_entropy_arg(setup.center, "prox_value center");
  double v = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    v += x[i] * std::log(x[i] / setup.center[i]) - x[i] + setup.center[i];
  return v;
}

inline Vector prox_gradient(const ProxSetup& setup, const Vector& x) {
  require_finite(x, "prox_gradient x");
  require_dim(x, setup.center.size(), "prox_gradient x");
  if (setup.kind == ProxKind::Euclidean) return x - setup.center;
  detail::check_entropy_arg(x, "prox_gradient x");
  detail::check_entropy_arg(setup.center, "prox_gradient center");
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = std::log(x[i] / setup.center[i]);
  return g;
}

/// Bregman divergence V(y, x) = d(y) - d(x) - <grad d(x), y - x>.
/// Independent of the setup's center and scale for both kinds; entropy gives
/// sum_i [y_i ln(y_i/x_i) - y_i + x_i], the KL divergence on the simplex.
inline double bregman(const ProxSetup& setup, const Vector& y, const Vector& x) {
  require_finite(y, "bregman y");
  require_finite(x, "bregman x");
  require_dim(x, y.size(), "bregman x");
  if (setup.kind == ProxKind::Euclidean) return 0.5 * (y - x).squaredNorm();
  detail::check_entropy_arg(y, "bregman y");
  detail::check_entropy_arg(x, "bregman x");
  double v = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    v += y[i] * std::log(y[i] / x[i]) - y[i] + x[i];
  return v;
}

/// Rescaled Euclidean setup centered at `center` with squared radius
/// `radius_sq`. Entropy setups cannot be rescaled (the norm has no natural
/// dilation on the simplex); restarts recenter them instead.
inline ProxSetup rescale(const ProxSetup& base, const Vector& center, double radius_sq) {
  if (base.kind != ProxKind::Euclidean)
    throw ConfigError("rescale: only the Euclidean kind supports rescaling; use recenter for entropy");
  if (!(radius_sq > 0.0) || !std::isfinite(radius_sq))
    throw DomainError("rescale: radius_sq must be positive and finite");
  require_finite(center, "rescale center");
  require_dim(center, base.center.size(), "rescale center");
  return ProxSetup{ProxKind::Euclidean, center, std::sqrt(radius_sq), base.omega};
}

/// Same kind and scale, new center. For entropy this moves the KL reference
/// point; the induced divergence V is unchanged (d changes by an affine term).
inline ProxSetup recenter(const ProxSetup& base, const Vector& center) {
  require_finite(center, "recenter center");
  require_dim(center, base.center.size(), "recenter center");
  if (base.kind == ProxKind::NegativeEntropy)
    detail::check_entropy_arg(center, "recenter center");
  ProxSetup s = base;
  s.center = center;
  return s;
}

namespace detail {

// Projection of v onto a ball or box; the Euclidean prox reduces to this.
inline Vector project_euclidean(const FeasibleSet& set, const Vector& v) {
  switch (set.kind()) {
    case FeasibleSet::Kind::Ball: {
      const auto& b = set.as_ball();
      const Vector d = v - b.center;
      const double n = d.norm();
      if (n <= b.radius) return v;
      return b.center + (b.radius / n) * d;
    }
    case FeasibleSet::Kind::Box: {
      const auto& b = set.as_box();
      Vector x(v.size());
      for (Eigen::Index i = 0; i < v.size(); ++i)
        x[i] = std::clamp(v[i], b.lower[i], b.upper[i]);
      return x;
    }
    default:
      throw ConfigError("Euclidean geometry supports only ball, box and products of those");
  }
}

inline Vector entropy_prox_block(const Vector& z, const Vector& g, double L) {
  check_entropy_arg(z, "prox_map z");
  // x_i proportional to z_i * exp(-g_i / L); shift by the max exponent so
  // exp never overflows, then normalize.
  const Eigen::Index n = z.size();
  Vector s(n);
  for (Eigen::Index i = 0; i < n; ++i) s[i] = -g[i] / L;
  const double smax = s.maxCoeff();
  Vector x(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    x[i] = z[i] * std::exp(s[i] - smax);
    total += x[i];
  }
  if (!(total > 0.0) || !std::isfinite(total))
    throw DomainError("prox_map: entropy normalization degenerated (iterate at simplex boundary)");
  return x / total;
}

}  // namespace detail

/// Prox mapping argmin_{x in set} <g, x> + L * V(x, z).
///
/// Closed forms: Euclidean ball/box projects z - g/L; entropy simplex is the
/// multiplicative update z_i exp(-g_i/L) normalized. Products are solved
/// blockwise (the objective separates).
inline Vector prox_map(const ProxSetup& setup, const FeasibleSet& set, const Vector& z,
                       const Vector& g, double L) {
  require_finite(z, "prox_map z");
  require_finite(g, "prox_map g");
  require_dim(z, set.dim(), "prox_map z");
  require_dim(g, set.dim(), "prox_map g");
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("prox_map: L must be positive and finite");

  if (set.kind() == FeasibleSet::Kind::Product) {
    Vector x(set.dim());
    for (const auto& blk : detail::blocks_of(set)) {
      ProxSetup sub = setup;
      sub.center = setup.center.segment(blk.offset, blk.length);
      x.segment(blk.offset, blk.length) =
          prox_map(sub, *blk.set, z.segment(blk.offset, blk.length),
                   g.segment(blk.offset, blk.length), L);
    }
    return x;
  }

  switch (setup.kind) {
    case ProxKind::Euclidean: {
      if (set.kind() == FeasibleSet::Kind::Simplex)
        throw ConfigError("prox_map: Euclidean geometry over a simplex is not supported; use the entropy setup");
      // step length guard: if g/L overflows, walk a finite but astronomically
      // long step instead; the projection of both is identical to roundoff.
      // The cap keeps the squared norm of the stepped point representable,
      // and stableNorm survives gradients whose own squared norm would not.
      const double gnorm = g.stableNorm();
      double t = 1.0 / L;
      if (gnorm > 0.0 && t > 1e150 / gnorm) t = 1e150 / gnorm;
      return detail::project_euclidean(set, z - t * g);
    }
    case ProxKind::NegativeEntropy: {
      if (set.kind() != FeasibleSet::Kind::Simplex)
        throw ConfigError("prox_map: entropy geometry pairs only with simplices");
      return detail::entropy_prox_block(z, g, L);
    }
  }
  throw ConfigError("prox_map: unreachable");
}

/// Upper bound D >= max_{x in set} V(x, x0); exact for all supported pairs.
/// Euclidean ball: (R + |x0 - c|)^2 / 2. Euclidean box: farthest corner.
/// Entropy simplex: max_i KL(e_i || x0) = -ln(min_i x0_i). Products add.
inline double max_bregman_over_set(const ProxSetup& setup, const FeasibleSet& set,
                                   const Vector& x0) {
  require_finite(x0, "max_bregman x0");
  require_dim(x0, set.dim(), "max_bregman x0");

  if (set.kind() == FeasibleSet::Kind::Product) {
    double d = 0.0;
    for (const auto& blk : detail::blocks_of(set)) {
      ProxSetup sub = setup;
      if (setup.center.size() == set.dim())
        sub.center = setup.center.segment(blk.offset, blk.length);
      d += max_bregman_over_set(sub, *blk.set, x0.segment(blk.offset, blk.length));
    }
    return d;
  }

  switch (setup.kind) {
    case ProxKind::Euclidean: {
      if (set.kind() == FeasibleSet::Kind::Ball) {
        const auto& b = set.as_ball();
        const double r = b.radius + (x0 - b.center).norm();
        return 0.5 * r * r;
      }
      if (set.kind() == FeasibleSet::Kind::Box) {
        const auto& b = set.as_box();
        double d = 0.0;
        for (Eigen::Index i = 0; i < x0.size(); ++i) {
          const double m = std::max(std::abs(x0[i] - b.lower[i]), std::abs(x0[i] - b.upper[i]));
          d += m * m;
        }
        return 0.5 * d;
      }
      throw ConfigError("max_bregman_over_set: unsupported Euclidean set");
    }
    case ProxKind::NegativeEntropy: {
      if (set.kind() != FeasibleSet::Kind::Simplex)
        throw ConfigError("max_bregman_over_set: entropy geometry pairs only with simplices");
      detail::check_entropy_arg(x0, "max_bregman x0");
      // KL(., x0) is convex, so the max sits at a vertex.
      return -std::log(x0.minCoeff());
    }
  }
  throw ConfigError("max_bregman_over_set: unreachable");
}

/// Norm the setup's strong convexity is measured in: l2 for Euclidean, l1
/// per simplex block for entropy, blocks combined in l2 fashion.
inline double primal_norm(const ProxSetup& setup, const FeasibleSet& set, const Vector& v) {
  require_dim(v, set.dim(), "primal_norm v");
  if (setup.kind == ProxKind::Euclidean) return v.norm();
  double acc = 0.0;
  for (const auto& blk : detail::blocks_of(set)) {
    const double b = v.segment(blk.offset, blk.length).lpNorm<1>();
    acc += b * b;
  }
  return std::sqrt(acc);
}

/// Dual of primal_norm: l2, or blockwise l-infinity combined in l2 fashion.
inline double dual_norm(const ProxSetup& setup, const FeasibleSet& set, const Vector& v) {
  require_dim(v, set.dim(), "dual_norm v");
  if (setup.kind == ProxKind::Euclidean) return v.norm();
  double acc = 0.0;
  for (const auto& blk : detail::blocks_of(set)) {
    const double b = v.segment(blk.offset, blk.length).lpNorm<Eigen::Infinity>();
    acc += b * b;
  }
  return std::sqrt(acc);
}

/// Exact diameter of the set under the setup's primal norm.
inline double set_diameter(const ProxSetup& setup, const FeasibleSet& set) {
  switch (set.kind()) {
    case FeasibleSet::Kind::Ball:
      return 2.0 * set.as_ball().radius;
    case FeasibleSet::Kind::Box:
      return (set.as_box().upper - set.as_box().lower).norm();
    case FeasibleSet::Kind::Simplex:
      // l1 distance between two vertices
      return 2.0;
    case FeasibleSet::Kind::Product: {
      double acc = 0.0;
      for (const auto& blk : detail::blocks_of(set)) {
        ProxSetup sub = setup;
        if (setup.center.size() == set.dim())
          sub.center = setup.center.segment(blk.offset, blk.length);
        const double d = set_diameter(sub, *blk.set);
        acc += d * d;
      }
      return std::sqrt(acc);
    }
  }
  throw ConfigError("set_diameter: unreachable");
}

}  // namespace bvi
