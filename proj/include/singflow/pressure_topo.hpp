#pragma once

#include "singflow/ergodic.hpp"
#include "singflow/pressure_metric.hpp"
#include "singflow/warp.hpp"

#include <span>
#include <string>
#include <vector>

namespace singflow {

/// Finite sample standing in for a compact set away from the singularities.
struct CompactSample {
  std::vector<Point> points;
  double rho_sing = 0.0;
  /// Largest distance from a source point to its nearest selected point.
  double fill_radius = 0.0;

  std::size_t size() const { return points.size(); }
};

/// Keep source points at distance >= rho_sing from the singular set, then
/// thin to max_points by farthest-point selection starting at the first kept
/// point. Throws EmptyCompactSet when nothing survives.
CompactSample build_compact_sample(const SystemSpec &sys,
                                   std::span<const Point> source,
                                   double rho_sing, std::size_t max_points);

struct TopoOptions {
  double dt = 0.01;
  WarpBand band{0.5, 0.0};
  std::size_t threads = 0;
};

/// Pairwise ball membership on K at one (variant, t, eps):
/// contains(i, j) means K_j lies in the ball about K_i.
class BallMatrix {
public:
  BallMatrix() = default;
  BallMatrix(const BallSurvival &surv, std::size_t n, std::size_t horizon);

  std::size_t size() const { return n_; }
  bool contains(std::size_t center, std::size_t member) const {
    return bits_[center * n_ + member] != 0;
  }

private:
  std::size_t n_ = 0;
  std::vector<char> bits_;
};

/// Orbits of a compact sample, integrated far enough for warped variants.
struct KOrbits {
  std::vector<Trajectory> traj;
  double dt = 0.0;

  static KOrbits integrate(const SystemSpec &sys, const CompactSample &K,
                           double t_max, const TopoOptions &opts,
                           bool warped);
  std::vector<double> log_weights(const ScalarField &f, double t) const;
};

BallMatrix ball_matrix(const SystemSpec &sys, const KOrbits &orbits,
                       BallVariant variant, double t, double eps,
                       const TopoOptions &opts);

struct SpanningSolution {
  std::vector<std::size_t> members;
  double log_weight = 0.0;
  BallVariant variant = BallVariant::R1;
  double t = 0.0, eps = 0.0;
  bool exact = false;
};

enum class SeparationOrder { WeightDesc, Input };
std::string to_string(SeparationOrder o);

struct SeparatingSolution {
  std::vector<std::size_t> members;
  double log_weight = 0.0;
  BallVariant variant = BallVariant::R1;
  double t = 0.0, eps = 0.0;
  bool maximal = false;
  SeparationOrder order = SeparationOrder::WeightDesc;
};

/// Cover all of K by balls centred at K points. Exact for |K| <= 18.
SpanningSolution greedy_spanning(const BallMatrix &balls,
                                 const std::vector<double> &log_weights);
SpanningSolution greedy_spanning(const SystemSpec &sys, const CompactSample &K,
                                 const PotentialSpec &f, BallVariant variant,
                                 double t, double eps, const TopoOptions &opts);

/// Sequential insertion keeping mutual separation; maximal by construction.
SeparatingSolution maximal_separating(const BallMatrix &balls,
                                      const std::vector<double> &log_weights,
                                      SeparationOrder order);
SeparatingSolution maximal_separating(const SystemSpec &sys,
                                      const CompactSample &K,
                                      const PotentialSpec &f,
                                      BallVariant variant, double t, double eps,
                                      SeparationOrder order,
                                      const TopoOptions &opts);

bool is_spanning(const BallMatrix &balls, std::span<const std::size_t> set);
bool is_separating(const BallMatrix &balls, std::span<const std::size_t> set);
bool is_maximal_separating(const BallMatrix &balls,
                           std::span<const std::size_t> set);

struct SandwichRow {
  double eps = 0.0;
  double log_n1 = 0.0;       // R1 spanning at eps
  double log_n2 = 0.0;       // R2 spanning at eps
  double log_z1 = 0.0;       // R1 separating at eps
  double log_z2 = 0.0;       // R2 separating at eps
  double log_z1_half = 0.0;  // R1 maximal separating at eps/2
  bool half_separating_spans = false;
};

struct SandwichReport {
  double t = 0.0;
  std::vector<SandwichRow> rows;
  std::size_t violations = 0;
  /// Smallest value of (lhs - rhs) over all asserted "lhs >= rhs" relations.
  double min_margin = 0.0;
  std::string note;
};

SandwichReport sandwich_check(const SystemSpec &sys, const CompactSample &K,
                              const PotentialSpec &f, double t,
                              const std::vector<double> &eps_grid,
                              const TopoOptions &opts);

/// Rows with k_id >= 0 are per compact sample; k_id = -1 rows take the max
/// over the family. Methods are "spanning" and "separating".
PressureTable topo_pressure_table(const SystemSpec &sys,
                                  const std::vector<CompactSample> &family,
                                  const PotentialSpec &f,
                                  const std::vector<BallVariant> &variants,
                                  const std::vector<double> &t_grid,
                                  const std::vector<double> &eps_grid,
                                  const TopoOptions &opts);

struct VariationalCell {
  std::size_t measure = 0;
  double t = 0.0, eps = 0.0;
  double log_metric = 0.0;
  double log_topo = 0.0;
  bool ok = false;
};

struct VariationalReport {
  std::vector<VariationalCell> cells;
  /// Per measure: metric read-off per eps (same order as the eps grid).
  std::vector<std::vector<double>> metric_readoffs;
  /// Topological read-off (max over the family) per eps.
  std::vector<double> topo_readoffs;
  std::size_t violations = 0;
};

struct VariationalOptions {
  TopoOptions topo;
  double delta = 0.1;
  std::vector<double> t_grid;
  std::vector<double> eps_grid;
};

/// For each measure the compact sample is its support, and the metric cover
/// draws candidates from the same points. Checks log N_1^mu <= log N_1^* cell
/// by cell; `family` supplies the topological side.
VariationalReport variational_gap(const SystemSpec &sys,
                                  const std::vector<EmpiricalMeasure> &measures,
                                  const std::vector<CompactSample> &family,
                                  const PotentialSpec &f,
                                  const VariationalOptions &opts);

} // namespace singflow
