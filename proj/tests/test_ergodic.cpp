#include "singflow/ergodic.hpp"
#include "singflow/errors.hpp"
#include "singflow/pressure_metric.hpp"
#include "singflow/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <random>

using namespace singflow;

namespace {

// Number of words in {0..N-1}^n within Hamming distance floor(n r) of 0^n.
std::uint64_t enumerate_ball(std::size_t N, std::size_t n, double r) {
  const auto kmax = static_cast<std::size_t>(std::floor(double(n) * r + 1e-9));
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < n; ++i)
    total *= N;
  std::uint64_t count = 0;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t c = code;
    std::size_t diff = 0;
    for (std::size_t i = 0; i < n; ++i, c /= N)
      diff += (c % N) != 0;
    count += diff <= kmax;
  }
  return count;
}

double quadrature_2d(const ScalarField &f, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      s += f(Point{(i + 0.5) / n, (j + 0.5) / n});
  return s / (double(n) * n);
}

ItineraryWord word(std::vector<std::uint32_t> s, std::size_t N) {
  ItineraryWord w;
  w.symbols = std::move(s);
  w.alphabet = N;
  return w;
}

} // namespace

TEST_CASE("Hamming ball counts match enumeration") {
  for (std::size_t N : {3u, 4u})
    for (std::size_t n = 1; n <= 8; ++n)
      for (double r : {0.0, 0.25, 0.5, 0.9}) {
        const HammingCount h = hamming_ball_count(N, n, r);
        const std::uint64_t e = enumerate_ball(N, n, r);
        REQUIRE(h.exact);
        CHECK(*h.exact == e);
        CHECK(h.log_count == doctest::Approx(std::log(double(e))).epsilon(1e-12));
      }
  CHECK(hamming_ball_count(3, 4, 0.5).exact.value() == 33);
  CHECK(hamming_ball_count(3, 10, 0.0).log_count == 0.0);
}

TEST_CASE("Hamming ball rate") {
  CHECK(hamming_ball_rate(3, 0.25) ==
        doctest::Approx(0.25 * std::log(2.0) + 0.25 * std::log(4.0) +
                        0.75 * std::log(4.0 / 3.0)));
  CHECK(hamming_ball_rate(3, 0.25) == doctest::Approx(0.7357).epsilon(1e-4));
  CHECK(hamming_ball_rate(10, 0.5) == doctest::Approx(1.7918).epsilon(1e-4));
  CHECK(hamming_ball_rate(3, 0.0) == 0.0);
  CHECK(hamming_ball_rate(3, 1e-9) < 1e-6);
  CHECK_THROWS_AS(hamming_ball_rate(3, 0.4), RangeError);
  CHECK_THROWS_AS(hamming_ball_rate(3, -0.1), RangeError);
  for (double r : {0.1, 0.25}) {
    const double per_n = hamming_ball_count(3, 4000, r).log_count / 4000.0;
    CHECK(std::abs(per_n - hamming_ball_rate(3, r)) < 0.01);
  }
  // large n stays finite and below the full-space count
  const HammingCount big = hamming_ball_count(4, 100000, 0.5);
  CHECK(std::isfinite(big.log_count));
  CHECK(big.log_count < 100000 * std::log(4.0));
  CHECK_FALSE(big.exact);
}

TEST_CASE("Hamming distance") {
  CHECK(hamming_rho(word({1, 2, 3}, 3), word({1, 2, 3}, 3)) == 0.0);
  CHECK(hamming_rho(word({1, 2, 3}, 3), word({1, 2, 1}, 3)) == doctest::Approx(1.0 / 3.0));
  CHECK(hamming_rho(word({1, 1, 1}, 3), word({2, 3, 2}, 3)) == 1.0);
  CHECK_THROWS_AS(hamming_rho(word({1, 2}, 3), word({1, 2, 3}, 3)), ContractViolation);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::uint32_t> sym(1, 3);
  auto draw = [&] {
    std::vector<std::uint32_t> s(12);
    for (auto &x : s)
      x = sym(rng);
    return word(s, 3);
  };
  for (int k = 0; k < 10000; ++k) {
    const ItineraryWord a = draw(), b = draw(), c = draw();
    CHECK(hamming_rho(a, b) >= 0.0);
    CHECK(hamming_rho(a, b) == hamming_rho(b, a));
    CHECK(hamming_rho(a, c) <= hamming_rho(a, b) + hamming_rho(b, c) + 1e-12);
  }
}

TEST_CASE("Birkhoff averages") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const ScalarField c3 = [](const Point &) { return 3.0; };
  CHECK(birkhoff_average(lin, Point{0.1, 0.2}, c3, 10.0, 0.01) == doctest::Approx(3.0).epsilon(1e-14));

  const ScalarField s = coordinate_sine_potential(0).f;
  CHECK(std::abs(quadrature_2d(s, 200)) < 1e-12);
  CHECK(std::abs(birkhoff_average(lin, Point{0.0, 0.0}, s, 200.0, 0.01)) < 0.02);

  const PotentialSpec bump = bump_potential(lin, Point{0.5, 0.5}, 0.2, 0.7);
  const double space = quadrature_2d(bump.f, 400);
  CHECK(space == doctest::Approx(0.7).epsilon(1e-3));
  CHECK(birkhoff_average(lin, Point{0.0, 0.0}, bump.f, 500.0, 0.01) ==
        doctest::Approx(space).epsilon(0.05 / 0.7));

  const ScalarField shifted_s = [&](const Point &p) { return s(p) + 1.25; };
  const double a = birkhoff_average(lin, Point{0.3, 0.1}, s, 20.0, 0.01);
  const double b = birkhoff_average(lin, Point{0.3, 0.1}, shifted_s, 20.0, 0.01);
  CHECK(b - a == doctest::Approx(1.25).epsilon(1e-12));

  CHECK_THROWS_AS(birkhoff_average(lin, Point{0.0, 0.0}, s, 0.05, 0.01), ContractViolation);
}

TEST_CASE("empirical measures from orbits") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  const EmpiricalMeasure mu = empirical_from_orbit(lin, Point{0.0, 0.0}, 2000.0, 0.01, 0.0, 10);
  CHECK(mu.total_weight() == doctest::Approx(1.0).epsilon(1e-12));
  const GridPartition part = GridPartition::uniform(4, lin);
  std::map<std::uint32_t, double> mass;
  for (std::size_t i = 0; i < mu.size(); ++i)
    mass[part.label(mu.atoms[i])] += mu.weights[i];
  CHECK(mass.size() == 16);
  for (auto [cell, m] : mass)
    CHECK(std::abs(m - 1.0 / 16.0) < 0.02);

  // a fixed regular point of a field that vanishes nowhere in the sample
  SystemSpec still = lin;
  still.field = [](const Point &) { return Point{0.0, 0.0}; };
  still.lipschitz_hint = 0.0;
  const EmpiricalMeasure one = empirical_from_orbit(still, Point{0.2, 0.2}, 1.0, 0.01, 0.0, 1);
  CHECK(one.size() == 1);
  CHECK(one.weights[0] == doctest::Approx(1.0));

  const SystemSpec sg = make_sine_grid_torus().sys;
  CHECK_THROWS_AS(empirical_from_orbit(sg, Point{0.5, 0.5}, 1.0, 0.01, 0.0, 1), DegenerateMeasure);

  const SystemSpec lor = make_lorenz().sys;
  const EmpiricalMeasure lm = empirical_from_orbit(lor, Point{1.0, 1.0, 1.0}, 40.0, 0.002, 10.0, 50);
  for (const Point &p : lm.atoms)
    CHECK(norm(p - Point{0.0, 0.0, kLorenzRho - 1.0}) < 100.0);
}

TEST_CASE("measure validation") {
  EmpiricalMeasure bad;
  bad.atoms = {Point{0.1, 0.1}, Point{0.2, 0.2}};
  bad.weights = {0.5, 0.6};
  CHECK_THROWS(bad.validate());
  bad.weights = {1.0, 0.0};
  CHECK_THROWS(bad.validate());
  CHECK_NOTHROW(EmpiricalMeasure::uniform(bad.atoms).validate());
}

TEST_CASE("itineraries") {
  const SystemSpec circle = make_linear_torus({1.0, 0.0}).sys;
  const GridPartition halves({2, 1}, circle);
  const ItineraryWord w = itinerary(circle, Point{0.0, 0.0}, halves, 0.5, 4, 0.01);
  REQUIRE(w.length() == 4);
  CHECK(w.alphabet == 2);
  CHECK(w.symbols[0] != w.symbols[1]);
  CHECK(w.symbols[0] == w.symbols[2]);
  CHECK(w.symbols[1] == w.symbols[3]);

  const ItineraryWord single = itinerary(circle, Point{0.3, 0.0}, halves, 0.5, 1, 0.01);
  CHECK(single.symbols == std::vector<std::uint32_t>{halves.label(Point{0.3, 0.0})});

  const SystemSpec sg = make_sine_grid_torus().sys;
  const GridPartition g4 = GridPartition::uniform(4, sg);
  const ItineraryWord fixed = itinerary(sg, Point{0.5, 0.5}, g4, 1.0, 5, 0.01);
  for (std::uint32_t s : fixed.symbols)
    CHECK(s == g4.label(Point{0.5, 0.5}));
}

TEST_CASE("partition labels cover every cell and nest") {
  const SystemSpec cat = make_cat_suspension().sys;
  const GridPartition fine({4, 4, 2}, cat), coarse({2, 2, 1}, cat);
  CHECK(fine.cell_count() == 32);
  std::mt19937_64 rng(6);
  std::map<std::uint32_t, std::uint32_t> parent;
  for (int k = 0; k < 20000; ++k) {
    const Point p = uniform_point(cat, rng);
    const std::uint32_t f = fine.label(p), c = coarse.label(p);
    CHECK(f >= 1);
    CHECK(f <= 32);
    auto [it, fresh] = parent.emplace(f, c);
    if (!fresh)
      CHECK(it->second == c);
  }
  CHECK(parent.size() == 32);
  CHECK_THROWS_AS(GridPartition({4, 4}, cat), ContractViolation);
}

TEST_CASE("SMB entropy estimates") {
  const SystemSpec lin = make_linear_torus({1.0, std::sqrt(2.0)}).sys;
  SmbOptions opts;
  opts.probe_count = 200;
  opts.dt = 0.05;

  const EmpiricalMeasure single = EmpiricalMeasure::uniform({Point{0.1, 0.1}});
  const GridPartition g4 = GridPartition::uniform(4, lin);
  CHECK(smb_entropy(lin, single, g4, 1.0, 5, opts).entropy == 0.0);

  std::mt19937_64 rng(12);
  std::vector<Point> atoms;
  for (int k = 0; k < 20000; ++k)
    atoms.push_back(uniform_point(lin, rng));
  const EmpiricalMeasure mu = EmpiricalMeasure::uniform(atoms);
  // At finite n the estimate carries a bias of about log(cells) / (n tau).
  const SmbEstimate zero = smb_entropy(lin, mu, g4, 25.0, 2, opts);
  CHECK(zero.entropy <= 0.1);

  // coarsening never raises the estimate
  const GridPartition g2 = GridPartition::uniform(2, lin);
  const double fine = smb_entropy(lin, mu, g4, 1.0, 6, opts).entropy;
  const double coarse = smb_entropy(lin, mu, g2, 1.0, 6, opts).entropy;
  CHECK(coarse <= fine + 1e-12);

  opts.probe_count = 10;
  CHECK_THROWS_AS(smb_entropy(lin, mu, g4, 1.0, 2, opts), ContractViolation);
}

TEST_CASE("SMB on the cat suspension grows toward the map entropy") {
  const SystemSpec cat = make_cat_suspension().sys;
  std::mt19937_64 rng(13);
  std::vector<Point> atoms;
  for (int k = 0; k < 200000; ++k)
    atoms.push_back(uniform_point(cat, rng));
  const EmpiricalMeasure mu = EmpiricalMeasure::uniform(atoms);
  const GridPartition part({2, 2, 1}, cat);
  SmbOptions opts;
  opts.probe_count = 300;
  opts.dt = 0.25;
  const double h = *make_cat_suspension().known_entropy;
  const double e4 = smb_entropy(cat, mu, part, 1.0, 4, opts).entropy;
  const double e8 = smb_entropy(cat, mu, part, 1.0, 8, opts).entropy;
  CHECK(e4 > 0.5 * h);
  CHECK(std::abs(e8 - h) < std::abs(e4 - h) + 0.05);
}
