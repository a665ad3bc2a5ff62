#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace singflow {

inline constexpr std::size_t kMaxDim = 4;

/// Coordinates of a point (or a tangent vector) in at most kMaxDim dimensions.
struct Point {
  std::array<double, kMaxDim> c{};
  std::size_t dim = 0;

  Point() = default;
  Point(std::initializer_list<double> xs);
  explicit Point(std::span<const double> xs);

  static Point zeros(std::size_t d);

  double &operator[](std::size_t i) { return c[i]; }
  double operator[](std::size_t i) const { return c[i]; }

  std::vector<double> to_vector() const { return {c.begin(), c.begin() + dim}; }

  bool operator==(const Point &o) const;
};

Point operator+(const Point &a, const Point &b);
Point operator-(const Point &a, const Point &b);
Point operator*(double s, const Point &a);
double norm(const Point &v);

enum class SpaceKind { FlatTorus, EuclideanBox, MappingTorus };

std::string to_string(SpaceKind k);

struct Box {
  Point lo;
  Point hi;
};

using VectorField = std::function<Point(const Point &)>;

/// A vector field on one of the supported compact spaces.
///
/// Mapping-torus systems live on T^2 x [0,1) with (p, 1) identified with
/// (A p, 0); `roof_map` holds A row-major.
struct SystemSpec {
  std::string name;
  std::size_t dim = 0;
  SpaceKind space = SpaceKind::FlatTorus;
  VectorField field;
  std::vector<Point> singular_points;
  std::optional<double> lipschitz_hint;
  std::optional<Box> box;
  std::array<long, 4> roof_map{2, 1, 1, 1};
};

/// Uniformly sampled orbit segment. positions[k] is the state at time k*dt.
struct Trajectory {
  double dt = 0.0;
  std::vector<Point> positions;
  std::vector<double> speeds;

  std::size_t size() const { return positions.size(); }
  std::size_t last_index() const { return positions.size() - 1; }
  double duration() const { return dt * static_cast<double>(last_index()); }
  const Point &start() const { return positions.front(); }
};

/// Non-owning window onto a trajectory prefix.
struct TrajView {
  double dt = 0.0;
  std::span<const Point> positions;
  std::span<const double> speeds;

  TrajView() = default;
  TrajView(const Trajectory &t) // NOLINT(google-explicit-constructor)
      : dt(t.dt), positions(t.positions), speeds(t.speeds) {}

  std::size_t size() const { return positions.size(); }
  std::size_t last_index() const { return positions.size() - 1; }
  /// First `samples` samples; clamps to the available length.
  TrajView prefix(std::size_t samples) const;
};

/// X(p). Throws ContractViolation on dimension mismatch.
Point evaluate_field(const SystemSpec &sys, const Point &p);

/// Map lifted coordinates back into the canonical fundamental domain.
Point wrap(const SystemSpec &sys, Point p);

/// Fixed-step RK4 stepper. Holds no state beyond the system reference.
class Rk4Stepper {
public:
  Rk4Stepper(const SystemSpec &sys, double dt);
  /// One step from p; the result is wrapped into the chart.
  Point step(const Point &p) const;
  double dt() const { return dt_; }

private:
  const SystemSpec &sys_;
  double dt_;
};

/// Number of dt-steps in t; t must be an integer multiple of dt within 1e-9.
std::size_t steps_for(double t, double dt);

/// Integrate x0 for time t. Throws DomainEscape when a box system is left.
Trajectory integrate_orbit(const SystemSpec &sys, const Point &x0, double t,
                           double dt);

double distance(const SystemSpec &sys, const Point &p, const Point &q);

/// Distance to the nearest declared singular point, +inf when there are none.
double singular_distance(const SystemSpec &sys, const Point &p);

/// Sampled lower estimate of the Lipschitz constant of the field.
double estimate_lipschitz(const SystemSpec &sys, std::size_t samples,
                          std::uint64_t seed);

/// A point drawn uniformly from the fundamental domain (or the box).
template <class Rng> Point uniform_point(const SystemSpec &sys, Rng &rng);

} // namespace singflow

#include "singflow/detail/uniform_point.hpp"
