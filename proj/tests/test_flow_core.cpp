#include "singflow/errors.hpp"
#include "singflow/flow_core.hpp"
#include "singflow/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace singflow;

namespace {

// Brute-force torus distance: minimum over integer shifts in {-1,0,1}^d.
double torus_oracle(const Point &p, const Point &q) {
  double best = INFINITY;
  const std::size_t d = p.dim;
  std::size_t combos = 1;
  for (std::size_t i = 0; i < d; ++i)
    combos *= 3;
  for (std::size_t m = 0; m < combos; ++m) {
    std::size_t code = m;
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double shift = static_cast<double>(code % 3) - 1.0;
      code /= 3;
      const double diff = p[i] - q[i] + shift;
      s += diff * diff;
    }
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

SystemSpec identity_box() {
  SystemSpec s;
  s.name = "identity-box";
  s.dim = 2;
  s.space = SpaceKind::EuclideanBox;
  s.field = [](const Point &p) { return p; };
  s.box = Box{Point{-1.0, -1.0}, Point{1.0, 1.0}};
  s.singular_points = {Point{0.0, 0.0}};
  return s;
}

} // namespace

TEST_CASE("field values at known points") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const Point v = evaluate_field(lin, Point{0.3, 0.7});
  CHECK(v[0] == 1.0);
  CHECK(v[1] == std::sqrt(2.0));

  const SystemSpec lor = make_lorenz().sys;
  CHECK(norm(evaluate_field(lor, Point{0.0, 0.0, 0.0})) == 0.0);

  const SystemSpec sg = make_sine_grid_torus().sys;
  const Point w = evaluate_field(sg, Point{0.25, 0.25});
  CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(evaluate_field(sg, Point{0.1, 0.2, 0.3}), ContractViolation);
}

TEST_CASE("declared singular points are zeros of the field") {
  for (const std::string &name : catalog_names()) {
    const SystemSpec s = make_benchmark(name).sys;
    for (const Point &p : s.singular_points)
      CHECK(norm(evaluate_field(s, p)) < 1e-12);
  }
}

TEST_CASE("sine-grid zeros found by grid search match the declared set") {
  const SystemSpec s = make_sine_grid_torus().sys;
  const int n = 256;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Point p{i / double(n), j / double(n)};
      if (norm(evaluate_field(s, p)) < 1e-12)
        CHECK(singular_distance(s, p) < 1e-12);
    }
}

TEST_CASE("linear torus orbit is a wrapped straight line") {
  const SystemSpec s = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const Trajectory tr = integrate_orbit(s, Point{0.0, 0.0}, 1.0, 0.5);
  REQUIRE(tr.size() == 3);
  CHECK(tr.positions[1][0] == doctest::Approx(0.5));
  CHECK(tr.positions[1][1] == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(tr.positions[2][0] == doctest::Approx(0.0));
  CHECK(tr.positions[2][1] == doctest::Approx(std::sqrt(2.0) - 1.0));
  for (double sp : tr.speeds)
    CHECK(sp == doctest::Approx(std::sqrt(3.0)));
}

TEST_CASE("singular starting point gives a constant orbit") {
  for (const std::string &name : catalog_names()) {
    const SystemSpec s = make_benchmark(name).sys;
    const double dt = name == "lorenz" ? 0.002 : 0.01;
    for (const Point &x0 : s.singular_points) {
      const Trajectory tr = integrate_orbit(s, x0, 1.0, dt);
      for (const Point &p : tr.positions)
        CHECK(distance(s, p, x0) < 1e-12);
    }
  }
}

TEST_CASE("Lorenz orbit stays in the trapping ball") {
  const SystemSpec s = make_lorenz().sys;
  const Trajectory tr = integrate_orbit(s, Point{1.0, 1.0, 1.0}, 50.0, 1e-3);
  const Point c{0.0, 0.0, kLorenzRho - 1.0};
  double worst = 0.0;
  for (const Point &p : tr.positions)
    worst = std::max(worst, norm(p - c));
  CHECK(worst < 100.0);
}

TEST_CASE("box escape reports the escape time") {
  const SystemSpec s = identity_box();
  try {
    integrate_orbit(s, Point{0.5, 0.0}, 2.0, 0.01);
    FAIL("expected DomainEscape");
  } catch (const DomainEscape &e) {
    // x(t) = 0.5 e^t leaves [-1, 1] at t = ln 2
    CHECK(e.escape_time() == doctest::Approx(std::log(2.0)).epsilon(0.02));
  }
}

TEST_CASE("Lipschitz precondition is enforced") {
  const SystemSpec s = make_sine_grid_torus().sys;
  CHECK_THROWS_AS(integrate_orbit(s, Point{0.1, 0.2}, 1.0, 0.1), ContractViolation);
  CHECK_THROWS_AS(integrate_orbit(s, Point{0.1, 0.2}, 0.01, 0.02), ContractViolation);
  CHECK_THROWS_AS(steps_for(1.0, 0.3), ContractViolation);
}

TEST_CASE("flow property at sample resolution") {
  for (const std::string &name : catalog_names()) {
    const SystemSpec s = make_benchmark(name).sys;
    const double dt = name == "lorenz" ? 0.002 : 0.01;
    std::mt19937_64 rng(5);
    Point x0 = uniform_point(s, rng);
    if (name == "lorenz")
      x0 = Point{1.0, 1.0, 20.0};
    const double t1 = 1.0, t2 = 0.5;
    const Trajectory a = integrate_orbit(s, x0, t1 + t2, dt);
    const Trajectory b1 = integrate_orbit(s, x0, t1, dt);
    const Trajectory b2 = integrate_orbit(s, b1.positions.back(), t2, dt);
    const double tol = 10.0 * std::pow(dt, 4) * (t1 + t2);
    for (std::size_t k = 0; k < b2.size(); ++k)
      CHECK(distance(s, a.positions[b1.last_index() + k], b2.positions[k]) <= tol);
  }
}

TEST_CASE("RK4 converges at fourth order on the sine-grid field") {
  // d theta/dt = sin(2 pi theta) has tan(pi theta(t)) = tan(pi theta0) e^{2 pi t}
  const SystemSpec s = make_sine_grid_torus().sys;
  const double th0 = 0.1, t = 0.5;
  const double exact = std::atan(std::tan(std::numbers::pi * th0) *
                                 std::exp(2.0 * std::numbers::pi * t)) /
                       std::numbers::pi;
  double prev = 0.0;
  for (double dt : {0.01, 0.005}) {
    const Trajectory tr = integrate_orbit(s, Point{th0, 0.25}, t, dt);
    const double err = std::abs(tr.positions.back()[0] - exact);
    if (prev > 0.0)
      CHECK(prev / err > 12.0); // 2^4 = 16 in the asymptotic regime
    prev = err;
  }
}

TEST_CASE("torus distance matches brute force over shifts") {
  const SystemSpec s = make_sine_grid_torus().sys;
  CHECK(distance(s, Point{0.95, 0.0}, Point{0.05, 0.0}) == doctest::Approx(0.1));
  CHECK(distance(s, Point{0.3, 0.3}, Point{0.3, 0.3}) == 0.0);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 1000; ++k) {
    const Point p = uniform_point(s, rng), q = uniform_point(s, rng);
    CHECK(distance(s, p, q) == doctest::Approx(torus_oracle(p, q)).epsilon(1e-12));
  }
}

TEST_CASE("euclidean distance") {
  const SystemSpec s = identity_box();
  CHECK(distance(s, Point{0.0, 0.0}, Point{3.0, 4.0}) == doctest::Approx(5.0));
}

static void check_metric_axioms(const std::string &name) {
  {
    const SystemSpec s = make_benchmark(name).sys;
    std::mt19937_64 rng(17);
    std::size_t triangle_failures = 0;
    for (int k = 0; k < 1000; ++k) {
      const Point p = uniform_point(s, rng), q = uniform_point(s, rng),
                  r = uniform_point(s, rng);
      CHECK(distance(s, p, q) == doctest::Approx(distance(s, q, p)).epsilon(1e-12));
      CHECK(distance(s, p, p) < 1e-12);
      if (distance(s, p, r) > distance(s, p, q) + distance(s, q, r) + 1e-12)
        ++triangle_failures;
    }
    INFO(name);
    CHECK(triangle_failures == 0);
  }
}

TEST_CASE("metric axioms on the flat and box spaces") {
  for (const char *name : {"linear-torus", "sine-grid", "lorenz"})
    check_metric_axioms(name);
}

// The one-crossing roof distance is not a length metric: the roof map is not
// an isometry, so some triples break the triangle inequality.
TEST_CASE("metric axioms on the mapping torus") {
  check_metric_axioms("cat-suspension");
}

TEST_CASE("mapping torus identifies the roof with the base under A") {
  const SystemSpec s = make_cat_suspension().sys;
  const Point top{0.1, 0.2, 0.999999};
  // (p, 1) ~ (A p, 0): A (0.1, 0.2) = (0.4, 0.3)
  const Point bottom{0.4, 0.3, 0.0};
  CHECK(distance(s, top, bottom) < 1e-5);
  const Point lifted = wrap(s, Point{0.1, 0.2, 1.25});
  CHECK(lifted[0] == doctest::Approx(0.4));
  CHECK(lifted[1] == doctest::Approx(0.3));
  CHECK(lifted[2] == doctest::Approx(0.25));
  const Point lowered = wrap(s, lifted - Point{0.0, 0.0, 1.0});
  CHECK(distance(s, lowered, Point{0.1, 0.2, 0.25}) < 1e-12);
}

TEST_CASE("singular distance") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  CHECK(std::isinf(singular_distance(lin, Point{0.2, 0.3})));
  const SystemSpec sg = make_sine_grid_torus().sys;
  CHECK(singular_distance(sg, Point{0.5, 0.5}) == 0.0);
  // brute-force min over the four lattice points
  const Point p{0.25, 0.5};
  double best = INFINITY;
  for (const Point &z : sg.singular_points)
    best = std::min(best, torus_oracle(p, z));
  CHECK(singular_distance(sg, p) == doctest::Approx(best));
  CHECK(best == doctest::Approx(0.25));
}

TEST_CASE("speeds are positive away from the singular set") {
  const SystemSpec sg = make_sine_grid_torus().sys;
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const Point x0 = uniform_point(sg, rng);
    const Trajectory tr = integrate_orbit(sg, x0, 2.0, 0.01);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      if (singular_distance(sg, tr.positions[i]) > 0.0)
        CHECK(tr.speeds[i] > 0.0);
      CHECK(tr.speeds[i] == doctest::Approx(norm(evaluate_field(sg, tr.positions[i]))).epsilon(1e-12));
    }
  }
}

TEST_CASE("Lipschitz estimates") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  CHECK(estimate_lipschitz(lin, 1000, 1) == 0.0);

  const double id = estimate_lipschitz(identity_box(), 100000, 2);
  CHECK(id > 0.9);
  CHECK(id <= 1.0 + 1e-12);

  const double two_pi = 2.0 * std::numbers::pi;
  const double sg = estimate_lipschitz(make_sine_grid_torus().sys, 100000, 3);
  CHECK(sg > 0.9 * two_pi);
  CHECK(sg <= two_pi + 1e-9);

  CHECK(estimate_lipschitz(identity_box(), 500, 4) ==
        estimate_lipschitz(identity_box(), 500, 4));
}
