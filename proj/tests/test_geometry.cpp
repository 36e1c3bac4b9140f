#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace bvi;
using Catch::Approx;

TEST_CASE("feasible set construction and validation") {
  REQUIRE_THROWS_AS(FeasibleSet::ball(Vector::Zero(2), 0.0), DomainError);
  REQUIRE_THROWS_AS(FeasibleSet::ball(Vector::Zero(2), -1.0), DomainError);
  {
    Vector lo(2), hi(2);
    lo << 0.0, 0.0;
    hi << 1.0, 0.0;  // degenerate in the second coordinate
    REQUIRE_THROWS_AS(FeasibleSet::box(lo, hi), DomainError);
  }
  REQUIRE_THROWS_AS(FeasibleSet::simplex(1), DomainError);
  REQUIRE_THROWS_AS(FeasibleSet::product({}), DomainError);

  auto ball = FeasibleSet::ball(Vector::Zero(3), 2.0);
  REQUIRE(ball.dim() == 3);
  REQUIRE(ball.kind() == FeasibleSet::Kind::Ball);

  auto prod = FeasibleSet::product({FeasibleSet::simplex(2), FeasibleSet::simplex(3)});
  REQUIRE(prod.dim() == 5);
}

TEST_CASE("membership and center points") {
  auto ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  Vector on_boundary(2);
  on_boundary << 1.0, 0.0;
  REQUIRE(ball.contains(on_boundary));
  on_boundary[0] = 1.0 + 1e-12;
  REQUIRE(ball.contains(on_boundary));  // inside tolerance
  on_boundary[0] = 1.1;
  REQUIRE_FALSE(ball.contains(on_boundary));
  REQUIRE(ball.center_point().norm() == 0.0);

  auto box = FeasibleSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 3.0));
  REQUIRE((box.center_point() - Vector::Constant(2, 1.0)).norm() == 0.0);

  auto simplex = FeasibleSet::simplex(4);
  REQUIRE((simplex.center_point() - Vector::Constant(4, 0.25)).norm() == 0.0);
  Vector not_normalized = Vector::Constant(4, 0.3);
  REQUIRE_FALSE(simplex.contains(not_normalized));

  auto prod = FeasibleSet::product({FeasibleSet::simplex(2), FeasibleSet::simplex(2)});
  REQUIRE((prod.center_point() - Vector::Constant(4, 0.5)).norm() == 0.0);
}

TEST_CASE("samples are feasible for every set kind") {
  Rng rng(42);
  std::vector<FeasibleSet> sets;
  sets.push_back(FeasibleSet::ball(Vector::Ones(3), 0.5));
  sets.push_back(FeasibleSet::box(Vector::Constant(4, -2.0), Vector::Constant(4, -1.0)));
  sets.push_back(FeasibleSet::simplex(5));
  sets.push_back(FeasibleSet::product({FeasibleSet::ball(Vector::Zero(2), 1.0),
                                       FeasibleSet::simplex(3)}));
  for (const auto& set : sets)
    for (int t = 0; t < 1000; ++t) REQUIRE(set.contains(set.sample(rng)));
}

TEST_CASE("euclidean divergence values") {
  auto setup = ProxSetup::euclidean_unit(2);
  Vector y(2), x(2);
  y << 3.0, 1.0;
  x << 1.0, 1.0;
  REQUIRE(bregman(setup, y, x) == Approx(2.0).margin(1e-15));
  REQUIRE(prox_value(setup, y) == Approx(5.0).margin(1e-15));
  REQUIRE((prox_gradient(setup, y) - y).norm() == 0.0);

  // V is invariant under recentering and rescaling
  auto moved = rescale(setup, x, 4.0);
  REQUIRE(moved.scale == Approx(2.0));
  REQUIRE(bregman(moved, y, x) == Approx(2.0).margin(1e-15));
  // the scaled generating function in original units: R^2 d((x-c)/R)
  REQUIRE(prox_value(moved, y) == Approx(2.0).margin(1e-15));
}

TEST_CASE("entropy divergence is the KL divergence") {
  auto setup = ProxSetup::entropy(2);
  Vector y(2), x(2);
  y << 0.5, 0.5;
  x << 0.25, 0.75;
  const double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  REQUIRE(bregman(setup, y, x) == Approx(expected).margin(1e-15));
  REQUIRE(bregman(setup, y, x) == Approx(0.14384103622589042).margin(1e-15));
  REQUIRE(bregman(setup, y, y) == 0.0);

  // d(x) = KL(x || uniform); at the center it vanishes
  REQUIRE(prox_value(setup, setup.center) == 0.0);
  REQUIRE(prox_value(setup, x) == Approx(bregman(setup, x, setup.center)).margin(1e-15));

  // boundary coordinates are refused, not clamped
  Vector bad(2);
  bad << 0.0, 1.0;
  REQUIRE_THROWS_AS(bregman(setup, bad, x), DomainError);
  REQUIRE_THROWS_AS(bregman(setup, y, bad), DomainError);
  REQUIRE_THROWS_AS(prox_value(setup, bad), DomainError);
}

TEST_CASE("recenter entropy keeps the divergence, moves the generating function") {
  auto setup = ProxSetup::entropy(3);
  Vector c(3);
  c << 0.2, 0.3, 0.5;
  auto moved = recenter(setup, c);
  Rng rng(7);
  auto set = FeasibleSet::simplex(3);
  for (int t = 0; t < 100; ++t) {
    Vector a = set.sample(rng), b = set.sample(rng);
    REQUIRE(bregman(setup, a, b) == Approx(bregman(moved, a, b)).margin(1e-12));
  }
  REQUIRE(prox_value(moved, c) == 0.0);
  REQUIRE_THROWS_AS(rescale(setup, c, 1.0), ConfigError);
}

TEST_CASE("euclidean prox map projects the gradient step") {
  auto setup = ProxSetup::euclidean_unit(2);
  auto ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  Vector z(2), g(2);
  z << 0.8, 0.0;
  g << -1.0, 0.0;
  Vector w = prox_map(setup, ball, z, g, 2.0);
  Vector expected(2);
  expected << 1.0, 0.0;  // z - g/L = (1.3, 0), projected back to the ball
  REQUIRE((w - expected).norm() < 1e-15);

  auto box = FeasibleSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  Vector w_box = prox_map(setup, box, z, g, 2.0);
  REQUIRE(w_box[0] == Approx(1.0));
  REQUIRE(w_box[1] == 0.0);
}

TEST_CASE("entropy prox map closed form") {
  auto setup = ProxSetup::entropy(2);
  auto set = FeasibleSet::simplex(2);
  Vector z(2), g(2);
  z << 0.5, 0.5;
  g << std::log(2.0), 0.0;
  Vector w = prox_map(setup, set, z, g, 1.0);
  REQUIRE(w[0] == Approx(1.0 / 3.0).margin(1e-15));
  REQUIRE(w[1] == Approx(2.0 / 3.0).margin(1e-15));

  // cross-check against a dense scan of the objective g.x + L V(x, z)
  double best_t = -1.0, best_val = std::numeric_limits<double>::infinity();
  for (double t = 1e-6; t < 1.0; t += 1e-4) {
    Vector x(2);
    x << t, 1.0 - t;
    const double val = g.dot(x) + bregman(setup, x, z);
    if (val < best_val) {
      best_val = val;
      best_t = t;
    }
  }
  REQUIRE(best_t == Approx(w[0]).margin(2e-4));
}

TEST_CASE("prox map optimality against sampled competitors") {
  Rng rng(11);
  struct Case {
    FeasibleSet set;
    ProxSetup setup;
  };
  std::vector<Case> cases;
  cases.push_back({FeasibleSet::ball(Vector::Ones(3), 1.5), ProxSetup::euclidean(Vector::Ones(3))});
  cases.push_back({FeasibleSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 2.0)),
                   ProxSetup::euclidean_unit(2)});
  cases.push_back({FeasibleSet::simplex(4), ProxSetup::entropy(4)});
  {
    auto prod = FeasibleSet::product({FeasibleSet::simplex(2), FeasibleSet::simplex(3)});
    cases.push_back({prod, ProxSetup::for_set(prod)});
  }

  for (const auto& c : cases) {
    for (int rep = 0; rep < 20; ++rep) {
      Vector z = c.set.sample(rng);
      if (c.setup.kind == ProxKind::NegativeEntropy)
        z = 0.9 * z + 0.1 * c.set.center_point();  // keep away from the boundary
      Vector g = rng.normal_vector(c.set.dim());
      const double L = rng.uniform(0.1, 10.0);
      const Vector w = prox_map(c.setup, c.set, z, g, L);
      REQUIRE(c.set.contains(w, 1e-9));
      const double fw = g.dot(w) + L * bregman(c.setup, w, z);
      for (int s = 0; s < 100; ++s) {
        const Vector x = c.set.sample(rng);
        const double fx = g.dot(x) + L * bregman(c.setup, x, z);
        REQUIRE(fw <= fx + 1e-8);
      }
    }
  }
}

TEST_CASE("prox map guards") {
  auto setup = ProxSetup::euclidean_unit(2);
  auto ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  auto simplex = FeasibleSet::simplex(2);
  Vector z = Vector::Zero(2);
  Vector g = Vector::Ones(2);
  REQUIRE_THROWS_AS(prox_map(setup, ball, z, g, 0.0), DomainError);
  REQUIRE_THROWS_AS(prox_map(setup, simplex, Vector::Constant(2, 0.5), g, 1.0), ConfigError);
  REQUIRE_THROWS_AS(prox_map(ProxSetup::entropy(2), ball, z, g, 1.0), ConfigError);

  // astronomically large gradient with tiny L: the step is capped, the
  // projection stays finite and lands where the infinite ray would
  Vector huge(2);
  huge << 1e300, 0.0;
  Vector w = prox_map(setup, ball, z, huge, 1e-200);
  REQUIRE(is_finite(w));
  REQUIRE(w[0] == Approx(-1.0));
}

TEST_CASE("max bregman closed forms") {
  auto setup = ProxSetup::euclidean_unit(2);
  auto ball = FeasibleSet::ball(Vector::Zero(2), 1.0);
  Vector x0(2);
  x0 << 0.5, 0.0;
  REQUIRE(max_bregman_over_set(setup, ball, x0) == Approx(1.125).margin(1e-15));

  auto box = FeasibleSet::box(Vector::Constant(2, -1.0), Vector::Constant(2, 1.0));
  Vector x1(2);
  x1 << 0.3, -0.2;
  REQUIRE(max_bregman_over_set(setup, box, x1) == Approx(1.565).margin(1e-15));

  auto ent = ProxSetup::entropy(2);
  auto simplex = FeasibleSet::simplex(2);
  REQUIRE(max_bregman_over_set(ent, simplex, simplex.center_point()) ==
          Approx(std::log(2.0)).margin(1e-15));
  REQUIRE(max_bregman_over_set(ent, simplex, simplex.center_point()) ==
          Approx(0.6931471805599453).margin(1e-15));

  // the bound dominates sampled divergences on every kind
  Rng rng(3);
  auto prod = FeasibleSet::product({FeasibleSet::simplex(3), FeasibleSet::simplex(2)});
  auto psetup = ProxSetup::for_set(prod);
  const Vector pc = prod.center_point();
  const double bound = max_bregman_over_set(psetup, prod, pc);
  REQUIRE(bound == Approx(std::log(3.0) + std::log(2.0)).margin(1e-12));
  for (int t = 0; t < 2000; ++t) {
    const Vector x = prod.sample(rng);
    REQUIRE(bregman(psetup, x, pc) <= bound + 1e-9);
  }
}

TEST_CASE("norm pairings") {
  auto prod = FeasibleSet::product({FeasibleSet::simplex(2), FeasibleSet::simplex(3)});
  auto setup = ProxSetup::for_set(prod);
  REQUIRE(setup.kind == ProxKind::NegativeEntropy);
  REQUIRE(setup.omega == Approx(2.0 * std::log(2.0) + 2.0 * std::log(3.0)));

  Vector v(5);
  v << 1.0, -2.0, 0.5, 0.0, -0.5;
  const double l1a = 3.0, l1b = 1.0;
  REQUIRE(primal_norm(setup, prod, v) == Approx(std::sqrt(l1a * l1a + l1b * l1b)));
  REQUIRE(dual_norm(setup, prod, v) == Approx(std::sqrt(2.0 * 2.0 + 0.5 * 0.5)));

  // generalized Cauchy-Schwarz for the pairing
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const Vector a = rng.normal_vector(5), b = rng.normal_vector(5);
    REQUIRE(std::abs(a.dot(b)) <=
            primal_norm(setup, prod, a) * dual_norm(setup, prod, b) + 1e-12);
  }

  auto ball = FeasibleSet::ball(Vector::Zero(3), 2.0);
  auto esetup = ProxSetup::euclidean_unit(3);
  const Vector u = rng.normal_vector(3);
  REQUIRE(primal_norm(esetup, ball, u) == Approx(u.norm()));
  REQUIRE(dual_norm(esetup, ball, u) == Approx(u.norm()));
}

TEST_CASE("set diameters") {
  REQUIRE(set_diameter(ProxSetup::euclidean_unit(2), FeasibleSet::ball(Vector::Zero(2), 1.0)) ==
          Approx(2.0));
  REQUIRE(set_diameter(ProxSetup::euclidean_unit(3),
                       FeasibleSet::box(Vector::Constant(3, -1.0), Vector::Constant(3, 1.0))) ==
          Approx(2.0 * std::sqrt(3.0)));
  REQUIRE(set_diameter(ProxSetup::entropy(7), FeasibleSet::simplex(7)) == Approx(2.0));
  auto prod = FeasibleSet::product({FeasibleSet::simplex(2), FeasibleSet::simplex(2)});
  REQUIRE(set_diameter(ProxSetup::for_set(prod), prod) == Approx(2.0 * std::sqrt(2.0)));
}

TEST_CASE("for_set chooses the right geometry") {
  REQUIRE(ProxSetup::for_set(FeasibleSet::simplex(4)).kind == ProxKind::NegativeEntropy);
  REQUIRE(ProxSetup::for_set(FeasibleSet::ball(Vector::Zero(2), 1.0)).kind ==
          ProxKind::Euclidean);
  auto mixed = FeasibleSet::product({FeasibleSet::ball(Vector::Zero(2), 1.0),
                                     FeasibleSet::box(Vector::Zero(2), Vector::Ones(2))});
  REQUIRE(ProxSetup::for_set(mixed).kind == ProxKind::Euclidean);
}
