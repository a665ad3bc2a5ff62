#pragma once

#include "singflow/cover.hpp"
#include "singflow/ergodic.hpp"
#include "singflow/flow_core.hpp"
#include "singflow/warp.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace singflow {

/// Continuous potential f with optional known space average.
struct PotentialSpec {
  std::string name;
  ScalarField f;
  std::optional<double> analytic_space_average;
};

PotentialSpec constant_potential(double c);
/// sin(2 pi x_axis).
PotentialSpec coordinate_sine_potential(std::size_t axis);
/// Smooth compactly supported bump of total mass `mass` on a unit-volume
/// torus of dimension 2 or 3; radius must be below 1/2.
PotentialSpec bump_potential(const SystemSpec &sys, const Point &center,
                             double radius, double mass);
/// f + c.
PotentialSpec shifted(const PotentialSpec &p, double c);

/// Trapezoid integral of f over the first last_index+1 samples.
double orbit_integral(const TrajView &tr, const ScalarField &f,
                      std::size_t last_index);
double orbit_integral(const SystemSpec &sys, const Point &x,
                      const ScalarField &f, double t, double dt);

enum class CoverMode { Greedy, Exact };
std::string to_string(CoverMode m);

struct CoverSolution {
  std::vector<Point> centers;
  std::vector<std::size_t> center_index; // into the candidate list
  double log_weight = 0.0;
  double covered_mass = 0.0;
  BallVariant variant = BallVariant::R1;
  double t = 0.0, eps = 0.0, delta = 0.0;
  CoverMode mode = CoverMode::Greedy;
};

struct MetricOptions {
  double dt = 0.01;
  /// b <= 0 means b = 10 dt.
  WarpBand band{0.5, 0.0};
  CoverMode mode = CoverMode::Greedy;
  std::size_t threads = 0;
};

WarpBand resolved_band(const WarpBand &band, double dt);

/// Cheapest found selection of candidates whose balls hold more than 1-delta
/// of mu. Candidates must be regular points.
CoverSolution metric_cover_value(const SystemSpec &sys,
                                 const EmpiricalMeasure &mu,
                                 const PotentialSpec &f, BallVariant variant,
                                 double t, double eps, double delta,
                                 const std::vector<Point> &candidates,
                                 const MetricOptions &opts);

struct PressureRow {
  BallVariant variant = BallVariant::R1;
  double t = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  /// (1/t) log of the cover value.
  double value = 0.0;
  std::string method;
  long k_id = -1;
  double fill_radius = 0.0;

  double log_value() const { return value * t; }
};

struct Readoff {
  BallVariant variant = BallVariant::R1;
  double eps = 0.0;
  double delta = 0.0;
  std::string method;
  long k_id = -1;
  /// Least-squares slope of log value against t over the top half of the grid.
  double slope = 0.0;
};

struct PressureTable {
  std::vector<PressureRow> rows;
  std::vector<Readoff> readoffs;

  const PressureRow *find(BallVariant v, double t, double eps, double delta,
                          const std::string &method, long k_id = -1) const;
  const Readoff *readoff(BallVariant v, double eps, double delta,
                         const std::string &method, long k_id = -1) const;
  /// Fills `readoffs` from `rows`.
  void compute_readoffs();
};

/// Slope of ys against ts over the upper half of the points (at least two);
/// a single point gives y/t.
double top_half_slope(const std::vector<double> &ts, const std::vector<double> &ys);

struct MetricTableOptions {
  double dt = 0.01;
  WarpBand band{0.5, 0.0};
  CoverMode mode = CoverMode::Greedy;
  std::size_t pool_size = 400;
  /// Evaluate coverage on this many evenly spaced atoms (0 = all).
  std::size_t atom_sample = 0;
  std::size_t threads = 0;
};

/// Atoms kept after evenly spaced subsampling, with renormalised weights.
EmpiricalMeasure subsample_measure(const EmpiricalMeasure &mu, std::size_t count);

PressureTable metric_pressure_table(const SystemSpec &sys,
                                    const EmpiricalMeasure &mu,
                                    const PotentialSpec &f,
                                    const std::vector<BallVariant> &variants,
                                    const std::vector<double> &t_grid,
                                    const std::vector<double> &eps_grid,
                                    const std::vector<double> &deltas,
                                    const MetricTableOptions &opts);

struct GammaResult {
  double gamma = 0.0;
  double t = 0.0;
  std::size_t centers = 0;
  std::size_t admissible = 0;
  /// Set when no perturbed point entered any ball.
  bool no_pairs = false;

  double per_time() const { return gamma / t; }
};

struct GammaOptions {
  double dt = 0.01;
  WarpBand band{0.5, 0.0};
  std::size_t perturbations = 8;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  /// Centres closer than this to the singular set are redrawn.
  double min_singular_distance = 1e-3;
};

/// Sampled lower estimate of sup |int_0^t f(y) - f(z)| over y, z in one ball.
GammaResult bounded_variation_gamma(const SystemSpec &sys,
                                    const PotentialSpec &f, BallVariant variant,
                                    double t, double eps,
                                    std::size_t pair_samples,
                                    const GammaOptions &opts);

struct KatokOptions {
  MetricTableOptions metric;
  SmbOptions smb;
  std::vector<double> t_grid;
  double eps = 0.05;
  double delta = 0.1;
  double tau = 1.0;
  std::size_t n = 10;
};

struct KatokReport {
  PressureTable table;
  double metric_readoff = 0.0;
  SmbEstimate smb;
  double potential_average = 0.0;
  /// smb.entropy + potential_average.
  double entropy_side = 0.0;
  double difference = 0.0;
  /// Total variation between mu and its push-forward by one dt step,
  /// measured on the partition cells.
  double transport_defect = 0.0;
};

KatokReport katok_check(const SystemSpec &sys, const EmpiricalMeasure &mu,
                        const PotentialSpec &f, BallVariant variant,
                        const GridPartition &partition, const KatokOptions &opts);

} // namespace singflow
