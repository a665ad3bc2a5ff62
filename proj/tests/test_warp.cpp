#include "singflow/errors.hpp"
#include "singflow/systems.hpp"
#include "singflow/warp.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace singflow;

namespace {

using Grid = std::vector<std::vector<char>>;

// Depth-first enumeration of every monotone staircase path from (0,0);
// returns the deepest row any path reaches.
std::ptrdiff_t enumerate_paths(const Grid &ok) {
  const std::size_t rows = ok.size(), cols = ok[0].size();
  if (!ok[0][0])
    return -1;
  std::ptrdiff_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [u, w] = stack.back();
    stack.pop_back();
    best = std::max(best, static_cast<std::ptrdiff_t>(u));
    const std::pair<std::size_t, std::size_t> moves[3] = {
        {u + 1, w + 1}, {u + 1, w}, {u, w + 1}};
    for (auto [a, b] : moves)
      if (a < rows && b < cols && ok[a][b])
        stack.emplace_back(a, b);
  }
  return best;
}

Grid random_grid(std::mt19937_64 &rng, std::size_t n, double density) {
  std::bernoulli_distribution on(density);
  Grid g(n, std::vector<char>(n));
  for (auto &row : g)
    for (auto &c : row)
      c = on(rng);
  g[0][0] = 1;
  return g;
}

Trajectory make_traj(double dt, std::vector<Point> pos, std::vector<double> spd) {
  Trajectory t;
  t.dt = dt;
  t.positions = std::move(pos);
  t.speeds = std::move(spd);
  return t;
}

// Synthetic orbit on T^2 with stationary stretches, so equal consecutive
// samples occur; speeds are arbitrary positive numbers.
Trajectory stuttering_traj(std::mt19937_64 &rng, std::size_t n, double dt) {
  std::uniform_real_distribution<double> step(-0.02, 0.02), sp(0.5, 1.5);
  std::bernoulli_distribution hold(0.4);
  std::vector<Point> pos{Point{0.3, 0.3}};
  std::vector<double> spd{1.0};
  for (std::size_t k = 1; k < n; ++k) {
    if (hold(rng)) {
      pos.push_back(pos.back());
      spd.push_back(spd.back());
    } else {
      Point p = pos.back() + Point{step(rng), step(rng)};
      pos.push_back(p);
      spd.push_back(sp(rng));
    }
  }
  return make_traj(dt, pos, spd);
}

// Full-table reachability with the band written in integers (lambda = 1/2,
// b = 10 dt): |u - w| <= max(u, 10) / 2.
std::ptrdiff_t table_oracle(BallVariant v, const SystemSpec &sys,
                            const Trajectory &x, const Trajectory &y,
                            double eps, std::size_t max_index) {
  const bool r3 = v == BallVariant::R3;
  const Trajectory &un = r3 ? x : y;
  const Trajectory &wa = r3 ? y : x;
  const std::size_t rows = std::min(max_index, un.last_index()) + 1;
  const std::size_t cols = wa.size();
  Grid reach(rows, std::vector<char>(cols, 0));
  std::ptrdiff_t best = -1;
  for (std::size_t u = 0; u < rows; ++u)
    for (std::size_t w = 0; w < cols; ++w) {
      const long du = std::labs(static_cast<long>(u) - static_cast<long>(w));
      if (2 * du > std::max<long>(static_cast<long>(u), 10))
        continue;
      double radius = eps;
      if (v == BallVariant::R2)
        radius = eps * wa.speeds[w];
      if (v == BallVariant::R3)
        radius = eps * un.speeds[u];
      if (!(distance(sys, un.positions[u], wa.positions[w]) < radius))
        continue;
      const bool from = (u == 0 && w == 0) ||
                        (u > 0 && reach[u - 1][w]) ||
                        (u > 0 && w > 0 && reach[u - 1][w - 1]) ||
                        (w > 0 && reach[u][w - 1]);
      if (from) {
        reach[u][w] = 1;
        best = std::max(best, static_cast<std::ptrdiff_t>(u));
      }
    }
  // rows are reached in order; a gap ends survival
  for (std::ptrdiff_t u = 0; u <= best; ++u) {
    bool any = false;
    for (char c : reach[static_cast<std::size_t>(u)])
      any = any || c;
    if (!any)
      return u - 1;
  }
  return best;
}

} // namespace

TEST_CASE("variant names round trip") {
  for (BallVariant v : {BallVariant::Plain, BallVariant::PlainReparam,
                        BallVariant::R1, BallVariant::R2, BallVariant::R3})
    CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("r2") == BallVariant::R2);
  CHECK_THROWS_AS(parse_variant("R4"), ContractViolation);
}

TEST_CASE("band half width") {
  const WarpBand b{0.5, 0.1};
  CHECK(b.half_width(0.0) == doctest::Approx(0.05));
  CHECK(b.half_width(1.0) == doctest::Approx(0.5));
  CHECK(WarpBand::standard(0.01).b == doctest::Approx(0.1));
}

TEST_CASE("staircase DP equals exhaustive path enumeration") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 300; ++k) {
    const Grid g = random_grid(rng, 6, k % 2 ? 0.75 : 0.6);
    const auto dp = staircase_reach(6, 6, [&](std::size_t u, std::size_t w) {
      return g[u][w] != 0;
    });
    CHECK(dp == enumerate_paths(g));
  }
}

TEST_CASE("witness is a valid staircase inside the allowed set") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Grid g = random_grid(rng, 8, 0.7);
    auto allowed = [&](std::size_t u, std::size_t w) { return g[u][w] != 0; };
    const auto path = staircase_witness(8, 8, allowed);
    const bool feasible = enumerate_paths(g) == 7;
    REQUIRE(path.has_value() == feasible);
    if (!path)
      continue;
    CHECK(path->front() == std::make_pair<std::size_t, std::size_t>(0, 0));
    CHECK(path->back().first == 7);
    for (std::size_t i = 0; i < path->size(); ++i) {
      CHECK(allowed((*path)[i].first, (*path)[i].second));
      if (i == 0)
        continue;
      const std::size_t du = (*path)[i].first - (*path)[i - 1].first;
      const std::size_t dw = (*path)[i].second - (*path)[i - 1].second;
      CHECK(du <= 1);
      CHECK(dw <= 1);
      CHECK(du + dw >= 1);
    }
  }
}

TEST_CASE("survival index matches a full-table oracle on stuttering orbits") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> eps_d(0.01, 0.06);
  const WarpBand band{0.5, 0.1};
  std::size_t members = 0;
  for (int k = 0; k < 400; ++k) {
    const Trajectory x = stuttering_traj(rng, 60, 0.01);
    Trajectory y = stuttering_traj(rng, 60, 0.01);
    if (k % 3 == 0)
      y = x;
    const double eps = eps_d(rng);
    for (BallVariant v : {BallVariant::PlainReparam, BallVariant::R2, BallVariant::R3}) {
      const auto got = survival_index(v, sys, x, y, eps, band, 40);
      members += got == 40;
      CHECK(got == table_oracle(v, sys, x, y, eps, 40));
    }
  }
  CHECK(members > 0);
}

TEST_CASE("self membership and R1 inside R2 and R3") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  const WarpBand band = WarpBand::standard(0.01);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> off(-0.01, 0.01);
  for (int k = 0; k < 100; ++k) {
    Point x0 = uniform_point(sys, rng);
    if (singular_distance(sys, x0) < 0.05)
      continue;
    const Trajectory x = integrate_orbit(sys, x0, 1.5, 0.01);
    const Trajectory y = integrate_orbit(sys, wrap(sys, x0 + Point{off(rng), off(rng)}), 1.5, 0.01);
    for (BallVariant v : {BallVariant::R1, BallVariant::R2, BallVariant::R3})
      CHECK(in_ball(v, sys, x, x, 1e-6, band));
    const TrajView xv = TrajView(x).prefix(101);
    const TrajView yv = TrajView(y).prefix(101);
    if (in_ball(BallVariant::R1, sys, xv, yv, 0.05, band)) {
      CHECK(survival_index(BallVariant::R2, sys, xv, yv, 0.05, band, 100) == 100);
      CHECK(survival_index(BallVariant::R3, sys, xv, yv, 0.05, band, 100) == 100);
    }
  }
}

TEST_CASE("translation example for R1") {
  const SystemSpec sys = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const Trajectory x = integrate_orbit(sys, Point{0.0, 0.0}, 2.0, 0.01);
  const Trajectory y = integrate_orbit(sys, Point{0.05, 0.0}, 2.0, 0.01);
  const WarpBand band = WarpBand::standard(0.01);
  // separation 0.05 against radius 0.05 * sqrt(3)
  CHECK(in_ball(BallVariant::R1, sys, x, y, 0.05, band));
  CHECK_FALSE(in_ball(BallVariant::Plain, sys, x, y, 0.05, band));
  CHECK(in_ball(BallVariant::Plain, sys, x, y, 0.0501, band));
}

TEST_CASE("constant speed makes R1 a rescaled PLAIN ball") {
  const SystemSpec sys = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const double v = std::sqrt(3.0);
  const WarpBand band = WarpBand::standard(0.01);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> off(-0.1, 0.1), e(0.01, 0.08);
  for (int k = 0; k < 200; ++k) {
    const Point x0 = uniform_point(sys, rng);
    const Trajectory x = integrate_orbit(sys, x0, 1.0, 0.01);
    const Trajectory y = integrate_orbit(sys, wrap(sys, x0 + Point{off(rng), off(rng)}), 1.0, 0.01);
    const double eps = e(rng);
    CHECK(in_ball(BallVariant::R1, sys, x, y, eps, band) ==
          in_ball(BallVariant::Plain, sys, x, y, eps * x.speeds[0], band));
    CHECK(x.speeds[0] == doctest::Approx(v));
  }
}

TEST_CASE("membership is nested in eps and in the horizon") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  const WarpBand band = WarpBand::standard(0.01);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> off(-0.02, 0.02), e(0.01, 0.2);
  std::size_t checked = 0;
  while (checked < 500) {
    const Point x0 = uniform_point(sys, rng);
    if (singular_distance(sys, x0) < 0.05)
      continue;
    const Trajectory x = integrate_orbit(sys, x0, 1.5, 0.01);
    const Trajectory y = integrate_orbit(sys, wrap(sys, x0 + Point{off(rng), off(rng)}), 1.5, 0.01);
    const double e1 = e(rng), e2 = e1 * 1.5;
    for (BallVariant v : {BallVariant::Plain, BallVariant::PlainReparam, BallVariant::R1,
                          BallVariant::R2, BallVariant::R3}) {
      const auto s1 = survival_index(v, sys, x, y, e1, band, 100);
      const auto s2 = survival_index(v, sys, x, y, e2, band, 100);
      CHECK(s2 >= s1);
      // membership at prefix horizon h equals s >= h
      const std::size_t h = 60;
      const TrajView xp = TrajView(x).prefix(h + 1 + (is_warped(v) ? 40 : 0));
      const TrajView yp = TrajView(y).prefix(h + 1 + (is_warped(v) ? 40 : 0));
      CHECK((survival_index(v, sys, xp, yp, e1, band, h) >= static_cast<std::ptrdiff_t>(h)) ==
            (s1 >= static_cast<std::ptrdiff_t>(h)));
    }
    ++checked;
  }
}

TEST_CASE("find_warp witnesses") {
  const SystemSpec sys = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const double dt = 0.01, v = std::sqrt(3.0);
  const WarpBand band = WarpBand::standard(dt);
  const Trajectory x = integrate_orbit(sys, Point{0.1, 0.2}, 0.1, dt); // 11 samples

  SUBCASE("identical orbits give the diagonal") {
    const auto p = find_warp(BallVariant::R2, sys, x, x, 0.01, band);
    REQUIRE(p);
    CHECK(p->is_pure_diagonal());
    CHECK(p->pairs.back() == std::make_pair<std::size_t, std::size_t>(10, 10));
  }
  SUBCASE("lag of one step needs exactly one horizontal step") {
    Trajectory y;
    y.dt = dt;
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
      y.positions.push_back(x.positions[k + 1]);
      y.speeds.push_back(x.speeds[k + 1]);
    }
    // tube radius 1.5 dt |X|: cell (u, w) allowed iff |w - u - 1| <= 1
    const auto p = find_warp(BallVariant::R2, sys, x, y, 1.5 * dt, band);
    REQUIRE(p);
    CHECK(p->non_diagonal_steps() == 1);
    CHECK(p->pairs.back() == std::make_pair<std::size_t, std::size_t>(10, 9));
    // independent tube re-check along the witness
    for (auto [i, j] : p->pairs)
      CHECK(distance(sys, x.positions[i], y.positions[j]) < 1.5 * dt * v);
  }
  SUBCASE("infeasible tube") {
    const Trajectory far = integrate_orbit(sys, Point{0.6, 0.7}, 0.1, dt);
    CHECK_FALSE(find_warp(BallVariant::R3, sys, x, far, 0.01, band));
    CHECK_FALSE(in_ball(BallVariant::R3, sys, x, far, 0.01, band));
  }
  SUBCASE("not a warped variant") {
    CHECK_THROWS_AS(find_warp(BallVariant::R1, sys, x, x, 0.01, band), ContractViolation);
  }
}

TEST_CASE("find_warp agrees with in_ball and passes a tube re-check") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  const WarpBand band = WarpBand::standard(0.01);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> off(-0.03, 0.03);
  for (int k = 0; k < 200; ++k) {
    const Point x0 = uniform_point(sys, rng);
    if (singular_distance(sys, x0) < 0.05)
      continue;
    const Trajectory x = integrate_orbit(sys, x0, 1.0, 0.01);
    const Trajectory y = integrate_orbit(sys, wrap(sys, x0 + Point{off(rng), off(rng)}), 1.0, 0.01);
    for (BallVariant v : {BallVariant::PlainReparam, BallVariant::R2, BallVariant::R3}) {
      const double eps = v == BallVariant::PlainReparam ? 0.05 : 0.1;
      const auto p = find_warp(v, sys, x, y, eps, band);
      CHECK(p.has_value() == in_ball(v, sys, x, y, eps, band));
      if (!p)
        continue;
      for (auto [i, j] : p->pairs) {
        double radius = eps;
        if (v == BallVariant::R2 || v == BallVariant::R3)
          radius = eps * x.speeds[i];
        CHECK(distance(sys, x.positions[i], y.positions[j]) < radius);
        CHECK(std::abs(double(i) - double(j)) * 0.01 <=
              band.half_width((v == BallVariant::R3 ? i : j) * 0.01) + 1e-12);
      }
    }
  }
}

TEST_CASE("contract checks") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  const WarpBand band = WarpBand::standard(0.01);
  const Trajectory a = integrate_orbit(sys, Point{0.1, 0.2}, 0.5, 0.01);
  const Trajectory b = integrate_orbit(sys, Point{0.1, 0.2}, 0.6, 0.015);
  CHECK_THROWS_AS(in_ball(BallVariant::R1, sys, a, b, 0.1, band), ContractViolation);
  const Trajectory sing = integrate_orbit(sys, Point{0.0, 0.0}, 0.5, 0.01);
  CHECK_THROWS_AS(in_ball(BallVariant::R1, sys, sing, a, 0.1, band), SingularOrbit);
  CHECK_NOTHROW(in_ball(BallVariant::Plain, sys, sing, a, 0.1, band));
}

TEST_CASE("inclusion check on a pool") {
  const SystemSpec sys = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const double dt = 0.05, t = 5.0;
  const WarpBand band = WarpBand::standard(dt);
  std::mt19937_64 rng(1);
  std::vector<Trajectory> pool;
  const double T = dt * static_cast<double>(warped_extent(t, dt, band));
  for (int k = 0; k < 40; ++k)
    pool.push_back(integrate_orbit(sys, uniform_point(sys, rng), T, dt));

  SUBCASE("identical pairs") {
    std::vector<Trajectory> one{pool[0]};
    const InclusionReport r = inclusion_check_31(sys, one, 0.05, band, t, 20, 3);
    CHECK(r.pairs == 20);
    CHECK(r.r1_members == 20);
    CHECK(r.violations() == 0);
  }
  SUBCASE("random pairs") {
    const InclusionReport r = inclusion_check_31(sys, pool, 0.2, band, t, 200, 5);
    CHECK(r.pairs == 200);
    CHECK(r.r2_members >= r.r1_members);
    CHECK(r.r1_not_r2 == 0);
    CHECK(r.violations() == 0);
  }
  SUBCASE("short pool is rejected") {
    std::vector<Trajectory> shorter{integrate_orbit(sys, Point{0.0, 0.0}, 1.0, dt)};
    CHECK_THROWS_AS(inclusion_check_31(sys, shorter, 0.1, band, t, 5, 1), ContractViolation);
  }
}

TEST_CASE("survival table agrees with pairwise queries") {
  const SystemSpec sys = make_sine_grid_torus().sys;
  const WarpBand band = WarpBand::standard(0.01);
  std::mt19937_64 rng(8);
  std::vector<Trajectory> orbits;
  while (orbits.size() < 15) {
    const Point p = uniform_point(sys, rng);
    if (singular_distance(sys, p) > 0.05)
      orbits.push_back(integrate_orbit(sys, p, 1.6, 0.01));
  }
  for (BallVariant v : {BallVariant::R1, BallVariant::R2}) {
    const BallSurvival s1 = compute_survival(v, sys, orbits, orbits, 0.3, band, 100, 1);
    const BallSurvival s3 = compute_survival(v, sys, orbits, orbits, 0.3, band, 100, 3);
    CHECK(s1.rows == s3.rows);
    for (std::size_t c = 0; c < orbits.size(); ++c)
      for (std::size_t m = 0; m < orbits.size(); ++m) {
        const auto s = survival_index(v, sys, orbits[c], orbits[m], 0.3, band, 100);
        CHECK(s1.contains(c, m, 50) == (s >= 50));
        CHECK(s1.contains(c, m, 100) == (s >= 100));
      }
    CHECK(s1.contains(3, 3, 100));
  }
}
