#pragma once

#include "singflow/flow_core.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace singflow {

/// Which Bowen ball a membership query refers to.
///
///  - Plain:        d(x_s, y_s) < eps for every sample s.
///  - PlainReparam: some monotone time change of x keeps d < eps.
///  - R1:           d(x_s, y_s) < eps * |X(x_s)|.
///  - R2:           x is time-changed, radius taken at the warped x sample.
///  - R3:           y is time-changed, radius taken at the unwarped x sample.
enum class BallVariant { Plain, PlainReparam, R1, R2, R3 };

std::string to_string(BallVariant v);
/// Accepts PLAIN, PLAIN_REPARAM, R1, R2, R3 (case-insensitive).
BallVariant parse_variant(const std::string &s);

bool is_rescaled(BallVariant v);
bool is_warped(BallVariant v);

/// Admissible time shift |alpha(s) - s| <= max(lambda*s, lambda*b).
struct WarpBand {
  double lambda = 0.5;
  double b = 0.0;

  double half_width(double s) const;
  /// lambda with b = 10 dt.
  static WarpBand standard(double dt, double lambda = 0.5);
};

/// Monotone staircase of (x index, y index) pairs starting at (0, 0).
struct WarpPath {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  /// Steps that advance exactly one of the two indices.
  std::size_t non_diagonal_steps() const;
  bool is_pure_diagonal() const { return non_diagonal_steps() == 0; }
};

inline constexpr std::ptrdiff_t kNotMember = -1;

/// Largest sample index n <= max_index such that y lies in the variant's ball
/// about x at horizon n*dt, or kNotMember if it fails already at time 0.
///
/// The horizon counts samples of the unwarped orbit (y for PlainReparam and
/// R2, x otherwise). The warped orbit may be longer than the horizon; its
/// extra samples are reachable through the band. Membership is nested in the
/// horizon, so one call answers every prefix horizon at once.
std::ptrdiff_t survival_index(BallVariant variant, const SystemSpec &sys,
                              const TrajView &x, const TrajView &y, double eps,
                              const WarpBand &band, std::size_t max_index);

/// Membership at the full horizon given by the unwarped trajectory.
bool in_ball(BallVariant variant, const SystemSpec &sys, const TrajView &x,
             const TrajView &y, double eps, const WarpBand &band);

/// Constructive witness for the warped variants.
///
/// The path ends on the last unwarped sample at the largest reachable warped
/// index and is traced back preferring diagonal steps.
std::optional<WarpPath> find_warp(BallVariant variant, const SystemSpec &sys,
                                  const TrajView &x, const TrajView &y,
                                  double eps, const WarpBand &band);

/// Lattice-level alignment feasibility shared by the warped variants.
///
/// Rows are unwarped indices 0..rows-1, columns warped indices 0..cols-1;
/// `allowed(u, w)` already folds in both the tube and the band. Returns the
/// largest row reached, or kNotMember.
std::ptrdiff_t staircase_reach(
    std::size_t rows, std::size_t cols,
    const std::function<bool(std::size_t, std::size_t)> &allowed);

/// Witness on the same lattice as (unwarped, warped) pairs, ending on the
/// last row.
std::optional<std::vector<std::pair<std::size_t, std::size_t>>>
staircase_witness(std::size_t rows, std::size_t cols,
                  const std::function<bool(std::size_t, std::size_t)> &allowed);

/// Finite-horizon check of the time-shrinking inclusions between R2 and R3
/// balls on sampled pairs.
struct InclusionReport {
  std::size_t pairs = 0;
  std::size_t r1_members = 0;
  std::size_t r2_members = 0;
  std::size_t r3_members = 0;
  /// y in R3(x, t) but not in R2(x, (1-lambda) t).
  std::size_t violations_r3_in_r2 = 0;
  /// y in R2(x, t) but not in R3(x, (1-lambda) t).
  std::size_t violations_r2_in_r3 = 0;
  /// R1 member that is not an R2 member (must stay 0).
  std::size_t r1_not_r2 = 0;
  /// Over implied memberships: min and mean of 1 - d/radius along the witness.
  double min_slack = 0.0;
  double mean_slack = 0.0;

  std::size_t violations() const {
    return violations_r3_in_r2 + violations_r2_in_r3 + r1_not_r2;
  }
};

/// `pool` trajectories must share dt and extend to (1+lambda) t + lambda b so
/// that warped indices inside the band are available. `pairs_to_test` pairs
/// are drawn from the pool with the given seed; (i, i) pairs are allowed.
InclusionReport inclusion_check_31(const SystemSpec &sys,
                                   std::span<const Trajectory> pool, double eps,
                                   const WarpBand &band, double t,
                                   std::size_t pairs_to_test,
                                   std::uint64_t seed);

/// Sparse survival table: for every centre, the members that enter its ball
/// together with their survival index (see survival_index).
struct BallSurvival {
  std::vector<std::vector<std::pair<std::uint32_t, std::int32_t>>> rows;

  std::size_t centers() const { return rows.size(); }
  /// Members of centre c's ball at horizon index h.
  std::vector<std::uint32_t> members_at(std::size_t c, std::size_t h) const;
  bool contains(std::size_t c, std::size_t member, std::size_t h) const;
};

/// Survival of every (centre, member) pair up to max_index. Centre orbits are
/// checked for regularity once. Work is spread over `threads` workers.
BallSurvival compute_survival(BallVariant variant, const SystemSpec &sys,
                              std::span<const Trajectory> centers,
                              std::span<const Trajectory> members, double eps,
                              const WarpBand &band, std::size_t max_index,
                              std::size_t threads);

/// Number of dt-steps a trajectory needs so that horizon t plus the band is
/// covered on the warped side.
std::size_t warped_extent(double t, double dt, const WarpBand &band);

} // namespace singflow
