#include "singflow/flow_core.hpp"

#include "singflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace singflow {

Point::Point(std::initializer_list<double> xs) {
  if (xs.size() > kMaxDim)
    throw ContractViolation("point dimension exceeds kMaxDim");
  dim = xs.size();
  std::copy(xs.begin(), xs.end(), c.begin());
}

Point::Point(std::span<const double> xs) {
  if (xs.size() > kMaxDim)
    throw ContractViolation("point dimension exceeds kMaxDim");
  dim = xs.size();
  std::copy(xs.begin(), xs.end(), c.begin());
}

Point Point::zeros(std::size_t d) {
  if (d > kMaxDim)
    throw ContractViolation("point dimension exceeds kMaxDim");
  Point p;
  p.dim = d;
  return p;
}

bool Point::operator==(const Point &o) const {
  if (dim != o.dim)
    return false;
  for (std::size_t i = 0; i < dim; ++i)
    if (c[i] != o.c[i])
      return false;
  return true;
}

Point operator+(const Point &a, const Point &b) {
  Point r = a;
  for (std::size_t i = 0; i < a.dim; ++i)
    r[i] += b[i];
  return r;
}

Point operator-(const Point &a, const Point &b) {
  Point r = a;
  for (std::size_t i = 0; i < a.dim; ++i)
    r[i] -= b[i];
  return r;
}

Point operator*(double s, const Point &a) {
  Point r = a;
  for (std::size_t i = 0; i < a.dim; ++i)
    r[i] *= s;
  return r;
}

double norm(const Point &v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.dim; ++i)
    s += v[i] * v[i];
  return std::sqrt(s);
}

std::string to_string(SpaceKind k) {
  switch (k) {
  case SpaceKind::FlatTorus:
    return "flat-torus";
  case SpaceKind::EuclideanBox:
    return "euclidean-box";
  case SpaceKind::MappingTorus:
    return "mapping-torus";
  }
  return "unknown";
}

TrajView TrajView::prefix(std::size_t samples) const {
  TrajView v = *this;
  const std::size_t n = std::min(samples, positions.size());
  v.positions = positions.first(n);
  v.speeds = speeds.first(n);
  return v;
}

namespace {

void check_dim(const SystemSpec &sys, const Point &p) {
  if (p.dim != sys.dim) {
    std::ostringstream os;
    os << "dimension mismatch: system '" << sys.name << "' has dim " << sys.dim
       << ", point has dim " << p.dim;
    throw ContractViolation(os.str());
  }
}

double mod1(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

// Wrap-around distance on the circle of circumference 1.
double circle_gap(double a, double b) {
  double d = std::fabs(a - b);
  d -= std::floor(d);
  return std::min(d, 1.0 - d);
}

double torus2_distance_sq(double x1, double y1, double x2, double y2) {
  const double dx = circle_gap(x1, x2);
  const double dy = circle_gap(y1, y2);
  return dx * dx + dy * dy;
}

void apply_roof(const std::array<long, 4> &a, double &x, double &y) {
  const double nx = static_cast<double>(a[0]) * x + static_cast<double>(a[1]) * y;
  const double ny = static_cast<double>(a[2]) * x + static_cast<double>(a[3]) * y;
  x = mod1(nx);
  y = mod1(ny);
}

void apply_roof_inverse(const std::array<long, 4> &a, double &x, double &y) {
  const long det = a[0] * a[3] - a[1] * a[2];
  // unimodular: the inverse is integer
  const double nx = static_cast<double>(det * a[3]) * x -
                    static_cast<double>(det * a[1]) * y;
  const double ny = -static_cast<double>(det * a[2]) * x +
                    static_cast<double>(det * a[0]) * y;
  x = mod1(nx);
  y = mod1(ny);
}

} // namespace

Point evaluate_field(const SystemSpec &sys, const Point &p) {
  check_dim(sys, p);
  Point v = sys.field(p);
  if (v.dim != sys.dim)
    throw ContractViolation("vector field returned wrong dimension");
  return v;
}

Point wrap(const SystemSpec &sys, Point p) {
  switch (sys.space) {
  case SpaceKind::FlatTorus:
    for (std::size_t i = 0; i < p.dim; ++i)
      p[i] = mod1(p[i]);
    break;
  case SpaceKind::EuclideanBox:
    break;
  case SpaceKind::MappingTorus: {
    double &s = p[2];
    while (s >= 1.0) {
      s -= 1.0;
      apply_roof(sys.roof_map, p[0], p[1]);
    }
    while (s < 0.0) {
      s += 1.0;
      apply_roof_inverse(sys.roof_map, p[0], p[1]);
    }
    if (s >= 1.0)
      s = 0.0;
    p[0] = mod1(p[0]);
    p[1] = mod1(p[1]);
    break;
  }
  }
  return p;
}

Rk4Stepper::Rk4Stepper(const SystemSpec &sys, double dt) : sys_(sys), dt_(dt) {
  if (!(dt > 0.0))
    throw ContractViolation("step size must be positive");
}

Point Rk4Stepper::step(const Point &p) const {
  const double h = dt_;
  const Point k1 = sys_.field(p);
  const Point k2 = sys_.field(p + (0.5 * h) * k1);
  const Point k3 = sys_.field(p + (0.5 * h) * k2);
  const Point k4 = sys_.field(p + h * k3);
  Point next = p;
  for (std::size_t i = 0; i < p.dim; ++i)
    next[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return wrap(sys_, next);
}

std::size_t steps_for(double t, double dt) {
  if (!(dt > 0.0) || !(t > 0.0))
    throw ContractViolation("t and dt must be positive");
  if (dt > t * (1.0 + 1e-12))
    throw ContractViolation("dt must not exceed t");
  const double ratio = t / dt;
  const double n = std::round(ratio);
  if (std::fabs(n * dt - t) > 1e-9 * std::max(1.0, t)) {
    std::ostringstream os;
    os << "t=" << t << " is not a multiple of dt=" << dt;
    throw ContractViolation(os.str());
  }
  return static_cast<std::size_t>(n);
}

namespace {

bool inside_box(const SystemSpec &sys, const Point &p) {
  if (sys.space != SpaceKind::EuclideanBox || !sys.box)
    return true;
  for (std::size_t i = 0; i < p.dim; ++i)
    if (!(p[i] >= sys.box->lo[i] && p[i] <= sys.box->hi[i]))
      return false;
  return true;
}

} // namespace

Trajectory integrate_orbit(const SystemSpec &sys, const Point &x0, double t,
                           double dt) {
  check_dim(sys, x0);
  const std::size_t n = steps_for(t, dt);
  if (sys.lipschitz_hint && dt * *sys.lipschitz_hint >= 0.1) {
    std::ostringstream os;
    os << "dt=" << dt << " too large for Lipschitz bound "
       << *sys.lipschitz_hint << " (need dt*L < 0.1)";
    throw ContractViolation(os.str());
  }
  Trajectory tr;
  tr.dt = dt;
  tr.positions.reserve(n + 1);
  tr.speeds.reserve(n + 1);
  Point p = wrap(sys, x0);
  if (!inside_box(sys, p))
    throw DomainEscape(0.0, "initial point outside the box of " + sys.name);
  const Rk4Stepper stepper(sys, dt);
  for (std::size_t k = 0; k <= n; ++k) {
    tr.positions.push_back(p);
    tr.speeds.push_back(norm(sys.field(p)));
    if (k == n)
      break;
    p = stepper.step(p);
    if (!inside_box(sys, p)) {
      const double when = dt * static_cast<double>(k + 1);
      std::ostringstream os;
      os << "orbit escaped the box of " << sys.name << " at t=" << when;
      throw DomainEscape(when, os.str());
    }
  }
  return tr;
}

double distance(const SystemSpec &sys, const Point &p, const Point &q) {
  if (p.dim != sys.dim || q.dim != sys.dim)
    throw ContractViolation("distance: dimension mismatch");
  switch (sys.space) {
  case SpaceKind::FlatTorus: {
    double s = 0.0;
    for (std::size_t i = 0; i < p.dim; ++i) {
      const double d = circle_gap(p[i], q[i]);
      s += d * d;
    }
    return std::sqrt(s);
  }
  case SpaceKind::EuclideanBox: {
    double s = 0.0;
    for (std::size_t i = 0; i < p.dim; ++i) {
      const double d = p[i] - q[i];
      s += d * d;
    }
    return std::sqrt(s);
  }
  case SpaceKind::MappingTorus: {
    // Direct distance in the fundamental domain, or one crossing of the roof
    // in either direction: (x, s) is the same point as (A x, s - 1).
    const double ds = p[2] - q[2];
    double best = torus2_distance_sq(p[0], p[1], q[0], q[1]) + ds * ds;
    double ax = p[0], ay = p[1];
    apply_roof(sys.roof_map, ax, ay);
    const double up = ds - 1.0;
    best = std::min(best, torus2_distance_sq(ax, ay, q[0], q[1]) + up * up);
    double bx = q[0], by = q[1];
    apply_roof(sys.roof_map, bx, by);
    const double down = ds + 1.0;
    best = std::min(best, torus2_distance_sq(p[0], p[1], bx, by) + down * down);
    return std::sqrt(best);
  }
  }
  return 0.0;
}

double singular_distance(const SystemSpec &sys, const Point &p) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point &s : sys.singular_points)
    best = std::min(best, distance(sys, p, s));
  return best;
}

double estimate_lipschitz(const SystemSpec &sys, std::size_t samples,
                          std::uint64_t seed) {
  if (samples < 2)
    throw ContractViolation("estimate_lipschitz needs at least 2 samples");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> log_scale(std::log(1e-6),
                                                   std::log(0.25));
  double best = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const Point p = uniform_point(sys, rng);
    Point dir = Point::zeros(sys.dim);
    for (std::size_t i = 0; i < sys.dim; ++i)
      dir[i] = gauss(rng);
    const double len = norm(dir);
    if (len == 0.0)
      continue;
    const double r = std::exp(log_scale(rng));
    Point q = wrap(sys, p + (r / len) * dir);
    if (sys.space == SpaceKind::EuclideanBox && sys.box && !inside_box(sys, q))
      continue;
    const double d = distance(sys, p, q);
    if (d <= 0.0)
      continue;
    const double ratio = norm(evaluate_field(sys, p) - evaluate_field(sys, q)) / d;
    best = std::max(best, ratio);
  }
  return best;
}

} // namespace singflow
