#include "singflow/systems.hpp"

#include "singflow/errors.hpp"

#include <cmath>
#include <numbers>

namespace singflow {

Benchmark make_linear_torus(const std::vector<double> &omega) {
  if (omega.empty() || omega.size() > kMaxDim)
    throw ContractViolation("linear torus: omega must have 1..4 components");
  bool nonzero = false;
  for (double w : omega)
    nonzero = nonzero || w != 0.0;
  if (!nonzero)
    throw ContractViolation("linear torus: omega must be nonzero");

  const Point w(std::span<const double>(omega.data(), omega.size()));
  Benchmark b;
  b.sys.name = "linear-torus";
  b.sys.dim = omega.size();
  b.sys.space = SpaceKind::FlatTorus;
  b.sys.field = [w](const Point &) { return w; };
  b.sys.lipschitz_hint = 0.0;
  b.known_singular = false;
  // Rational independence cannot be decided from doubles; a single nonzero
  // component or an irrational ratio gives zero entropy either way.
  b.known_entropy = 0.0;
  b.notes = "translation flow, isometric, zero entropy";
  return b;
}

Benchmark make_sine_grid_torus() {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  Benchmark b;
  b.sys.name = "sine-grid";
  b.sys.dim = 2;
  b.sys.space = SpaceKind::FlatTorus;
  b.sys.field = [](const Point &p) {
    return Point{std::sin(two_pi * p[0]), std::sin(two_pi * p[1])};
  };
  b.sys.singular_points = {Point{0.0, 0.0}, Point{0.0, 0.5}, Point{0.5, 0.0},
                           Point{0.5, 0.5}};
  b.sys.lipschitz_hint = two_pi;
  b.known_singular = true;
  b.known_entropy = 0.0;
  b.notes = "gradient-like: source (0,0), saddles (0,.5),(.5,0), sink (.5,.5)";
  return b;
}

Benchmark make_lorenz() {
  constexpr double s = kLorenzSigma, r = kLorenzRho, be = kLorenzBeta;
  Benchmark b;
  b.sys.name = "lorenz";
  b.sys.dim = 3;
  b.sys.space = SpaceKind::EuclideanBox;
  b.sys.field = [](const Point &p) {
    return Point{s * (p[1] - p[0]), p[0] * (r - p[2]) - p[1],
                 p[0] * p[1] - be * p[2]};
  };
  const double c = std::sqrt(be * (r - 1.0));
  b.sys.singular_points = {Point{0.0, 0.0, 0.0}, Point{c, c, r - 1.0},
                           Point{-c, -c, r - 1.0}};
  // Attractor extents are roughly |x|<20, |y|<28, 0<z<50; twice that.
  b.sys.box = Box{Point{-40.0, -56.0, -50.0}, Point{40.0, 56.0, 100.0}};
  b.sys.lipschitz_hint = 30.0;
  b.known_singular = true;
  b.notes = "classical parameters; box is a trapping-region surrogate";
  return b;
}

Benchmark make_cat_suspension() {
  Benchmark b;
  b.sys.name = "cat-suspension";
  b.sys.dim = 3;
  b.sys.space = SpaceKind::MappingTorus;
  b.sys.roof_map = {2, 1, 1, 1};
  b.sys.field = [](const Point &) { return Point{0.0, 0.0, 1.0}; };
  b.sys.lipschitz_hint = 0.0;
  b.known_singular = false;
  b.known_entropy = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  b.notes = "constant roof 1, flow entropy equals cat map entropy";
  return b;
}

const std::vector<std::string> &catalog_names() {
  static const std::vector<std::string> names{"linear-torus", "sine-grid",
                                              "lorenz", "cat-suspension"};
  return names;
}

Benchmark make_benchmark(const std::string &name,
                         const std::vector<double> &omega) {
  if (name == "linear-torus")
    return make_linear_torus(omega.empty()
                                 ? std::vector<double>{1.0, std::sqrt(2.0)}
                                 : omega);
  if (name == "sine-grid")
    return make_sine_grid_torus();
  if (name == "lorenz")
    return make_lorenz();
  if (name == "cat-suspension")
    return make_cat_suspension();
  throw ContractViolation("unknown system '" + name + "'");
}

} // namespace singflow
