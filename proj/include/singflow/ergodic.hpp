#pragma once

#include "singflow/flow_core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace singflow {

using ScalarField = std::function<double(const Point &)>;

/// Weighted point cloud; weights are positive and sum to one.
struct EmpiricalMeasure {
  std::vector<Point> atoms;
  std::vector<double> weights;

  std::size_t size() const { return atoms.size(); }
  double total_weight() const;
  /// Throws DegenerateMeasure / ContractViolation when malformed.
  void validate() const;

  static EmpiricalMeasure uniform(std::vector<Point> atoms);
};

/// Axis-aligned grid partition of the fundamental domain (or the box),
/// shifted by a small irrational offset so that atoms avoid cell walls.
class GridPartition {
public:
  GridPartition(std::vector<std::size_t> boxes_per_axis, const SystemSpec &sys);
  GridPartition(std::vector<std::size_t> boxes_per_axis, const SystemSpec &sys,
                std::vector<double> offset);
  /// Same count along every axis.
  static GridPartition uniform(std::size_t boxes_per_side, const SystemSpec &sys);

  std::size_t cell_count() const { return cells_; }
  std::size_t dim() const { return boxes_.size(); }
  const std::vector<std::size_t> &boxes() const { return boxes_; }
  const std::vector<double> &offset() const { return offset_; }

  /// 1-based cell label in [1, cell_count()].
  std::uint32_t label(const Point &p) const;

  /// Default offset along axis k, shared by every grid size so that grids
  /// with nested counts are nested partitions.
  static double default_offset(std::size_t axis);

private:
  std::vector<std::size_t> boxes_;
  std::vector<double> offset_;
  std::vector<double> lo_;
  std::vector<double> width_;
  std::size_t cells_ = 1;
};

struct ItineraryWord {
  std::vector<std::uint32_t> symbols;
  std::size_t alphabet = 0;

  std::size_t length() const { return symbols.size(); }
};

/// (1/T) * integral of f along the orbit, composite trapezoid.
double birkhoff_average(const SystemSpec &sys, const Point &x0,
                        const ScalarField &f, double T, double dt);

/// Equal-weight atoms at every `thin`-th sample after `burn_in`; atoms
/// within 1e-9 of a singular point are dropped and identical atoms merged.
/// The orbit is streamed, so long horizons do not need trajectory storage.
EmpiricalMeasure empirical_from_orbit(const SystemSpec &sys, const Point &x0,
                                      double T, double dt, double burn_in,
                                      std::size_t thin);

ItineraryWord itinerary(const SystemSpec &sys, const Point &x0,
                        const GridPartition &partition, double tau,
                        std::size_t n, double dt);

struct SmbEstimate {
  /// Weighted mean of -(1/(n tau)) log mu(xi_n(x)) over probes.
  double entropy = 0.0;
  std::size_t probes = 0;
  std::size_t excluded = 0;
  /// Fraction of probes whose itinerary class holds fewer than 5 atoms.
  double low_count_fraction = 0.0;
  std::size_t distinct_classes = 0;
  /// mu-average of log |X|; atoms slower than 1e-6 are counted separately.
  double mean_log_speed = 0.0;
  std::size_t slow_atoms = 0;
};

struct SmbOptions {
  std::size_t probe_count = 1000;
  double dt = 0.01;
  std::size_t threads = 0;
};

SmbEstimate smb_entropy(const SystemSpec &sys, const EmpiricalMeasure &measure,
                        const GridPartition &partition, double tau,
                        std::size_t n, const SmbOptions &opts);

/// Normalized Hamming distance between equal-length words.
double hamming_rho(const ItineraryWord &w, const ItineraryWord &v);

struct HammingCount {
  double log_count = 0.0;
  /// Exact count when it fits in 64 bits.
  std::optional<std::uint64_t> exact;
};

/// Size of the Hamming ball of radius r around a word in {1..N}^n.
HammingCount hamming_ball_count(std::size_t N, std::size_t n, double r);

/// Exponential growth rate of hamming_ball_count in n, for 0 <= r < (N-2)/N.
double hamming_ball_rate(std::size_t N, double r);

} // namespace singflow
