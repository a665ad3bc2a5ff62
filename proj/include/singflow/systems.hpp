#pragma once

#include "singflow/flow_core.hpp"

#include <optional>
#include <string>
#include <vector>

namespace singflow {

/// A benchmark flow together with what is known about it analytically.
struct Benchmark {
  SystemSpec sys;
  std::optional<double> known_entropy;
  bool known_singular = false;
  std::string notes;
};

Benchmark make_linear_torus(const std::vector<double> &omega);

/// X(a, b) = (sin 2 pi a, sin 2 pi b) on T^2.
Benchmark make_sine_grid_torus();

/// Classical Lorenz flow (sigma 10, rho 28, beta 8/3) in a box.
Benchmark make_lorenz();

/// Unit vertical flow on the mapping torus of the cat map ((2,1),(1,1)).
Benchmark make_cat_suspension();

/// Stable CLI identifiers.
const std::vector<std::string> &catalog_names();

/// Build a catalog system by name. linear-torus takes `omega`; the others
/// ignore it. Throws ContractViolation for an unknown name.
Benchmark make_benchmark(const std::string &name,
                         const std::vector<double> &omega = {});

inline constexpr double kLorenzSigma = 10.0;
inline constexpr double kLorenzRho = 28.0;
inline constexpr double kLorenzBeta = 8.0 / 3.0;

} // namespace singflow
