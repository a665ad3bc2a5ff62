#pragma once

#include <random>

namespace singflow {

template <class Rng> Point uniform_point(const SystemSpec &sys, Rng &rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Point p = Point::zeros(sys.dim);
  for (std::size_t i = 0; i < sys.dim; ++i) {
    const double u = u01(rng);
    if (sys.space == SpaceKind::EuclideanBox && sys.box)
      p[i] = sys.box->lo[i] + u * (sys.box->hi[i] - sys.box->lo[i]);
    else
      p[i] = u;
  }
  return p;
}

} // namespace singflow
