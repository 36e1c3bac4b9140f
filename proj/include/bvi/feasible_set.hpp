#pragma once

// Compact convex feasible sets the prox maps know closed forms for:
// Euclidean balls, axis-aligned boxes, probability simplices, and finite
// products of those. Sets are immutable after construction.

#include "bvi/core.hpp"

#include <memory>
#include <numeric>
#include <utility>
#include <variant>
#include <vector>

namespace bvi {

class FeasibleSet {
 public:
  enum class Kind { Ball, Box, Simplex, Product };

  struct Ball {
    Vector center;
    double radius;
  };
  struct Box {
    Vector lower;
    Vector upper;
  };
  struct Simplex {
    Eigen::Index dim;
  };
  struct Product {
    std::vector<FeasibleSet> parts;
  };

  static FeasibleSet ball(Vector center, double radius) {
    require_finite(center, "ball center");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("ball: radius must be positive and finite");
    return FeasibleSet(Ball{std::move(center), radius});
  }

  static FeasibleSet box(Vector lower, Vector upper) {
    require_finite(lower, "box lower");
    require_finite(upper, "box upper");
    require_dim(upper, lower.size(), "box upper");
    for (Eigen::Index i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]))
        throw DomainError("box: lower bound must be strictly below upper in every coordinate");
    return FeasibleSet(Box{std::move(lower), std::move(upper)});
  }

  static FeasibleSet simplex(Eigen::Index dim) {
    if (dim < 2) throw DomainError("simplex: dimension must be at least 2");
    return FeasibleSet(Simplex{dim});
  }

  static FeasibleSet product(std::vector<FeasibleSet> parts) {
    if (parts.empty()) throw DomainError("product: needs at least one part");
    return FeasibleSet(Product{std::move(parts)});
  }

  Kind kind() const { return static_cast<Kind>(data_.index()); }

  Eigen::Index dim() const {
    switch (kind()) {
      case Kind::Ball: return as_ball().center.size();
      case Kind::Box: return as_box().lower.size();
      case Kind::Simplex: return as_simplex().dim;
      case Kind::Product: {
        Eigen::Index n = 0;
        for (const auto& p : as_product().parts) n += p.dim();
        return n;
      }
    }
    return 0;
  }

  const Ball& as_ball() const { return std::get<Ball>(data_); }
  const Box& as_box() const { return std::get<Box>(data_); }
  const Simplex& as_simplex() const { return std::get<Simplex>(data_); }
  const Product& as_product() const { return std::get<Product>(data_); }

  /// Membership up to an absolute tolerance on each defining inequality.
  bool contains(const Vector& x, double tol = 1e-9) const {
    if (x.size() != dim() || !x.allFinite()) return false;
    switch (kind()) {
      case Kind::Ball:
        return (x - as_ball().center).norm() <= as_ball().radius + tol;
      case Kind::Box: {
        const auto& b = as_box();
        for (Eigen::Index i = 0; i < x.size(); ++i)
          if (x[i] < b.lower[i] - tol || x[i] > b.upper[i] + tol) return false;
        return true;
      }
      case Kind::Simplex: {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (x[i] < -tol) return false;
          s += x[i];
        }
        return std::abs(s - 1.0) <= tol * static_cast<double>(x.size());
      }
      case Kind::Product: {
        Eigen::Index off = 0;
        for (const auto& p : as_product().parts) {
          if (!p.contains(x.segment(off, p.dim()), tol)) return false;
          off += p.dim();
        }
        return true;
      }
    }
    return false;
  }

  /// Uniform sample. Ball: gaussian direction with U^(1/n) radial law.
  /// Box: coordinatewise uniform. Simplex: normalized exponentials
  /// (flat Dirichlet). Product: independent per part.
  Vector sample(Rng& rng) const {
    switch (kind()) {
      case Kind::Ball: {
        const auto& b = as_ball();
        const Eigen::Index n = b.center.size();
        Vector u = rng.normal_vector(n);
        double nrm = u.norm();
        while (nrm == 0.0) {
          u = rng.normal_vector(n);
          nrm = u.norm();
        }
        const double r = b.radius * std::pow(rng.uniform01(), 1.0 / static_cast<double>(n));
        return b.center + (r / nrm) * u;
      }
      case Kind::Box: {
        const auto& b = as_box();
        Vector x(b.lower.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(b.lower[i], b.upper[i]);
        return x;
      }
      case Kind::Simplex: {
        const Eigen::Index n = as_simplex().dim;
        Vector e(n);
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          e[i] = rng.exponential();
          s += e[i];
        }
        return e / s;
      }
      case Kind::Product: {
        Vector x(dim());
        Eigen::Index off = 0;
        for (const auto& p : as_product().parts) {
          x.segment(off, p.dim()) = p.sample(rng);
          off += p.dim();
        }
        return x;
      }
    }
    throw ConfigError("sample: unreachable");
  }

  /// A canonical interior starting point: ball center, box midpoint,
  /// simplex barycenter, concatenation for products.
  Vector center_point() const {
    switch (kind()) {
      case Kind::Ball: return as_ball().center;
      case Kind::Box: return 0.5 * (as_box().lower + as_box().upper);
      case Kind::Simplex:
        return Vector::Constant(as_simplex().dim, 1.0 / static_cast<double>(as_simplex().dim));
      case Kind::Product: {
        Vector x(dim());
        Eigen::Index off = 0;
        for (const auto& p : as_product().parts) {
          x.segment(off, p.dim()) = p.center_point();
          off += p.dim();
        }
        return x;
      }
    }
    throw ConfigError("center_point: unreachable");
  }

 private:
  template <typename T>
  explicit FeasibleSet(T data) : data_(std::move(data)) {}

  std::variant<Ball, Box, Simplex, Product> data_;
};

}  // namespace bvi
