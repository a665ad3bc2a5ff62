#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace singflow {

/// Weighted set cover: pick candidates whose covered element mass exceeds
/// `target` while minimising the sum of exp(log_cost).
struct CoverProblem {
  std::vector<std::vector<std::uint32_t>> covers;
  std::vector<double> element_weight;
  std::vector<double> log_cost;
  double target = 0.0;
};

struct CoverResult {
  std::vector<std::size_t> chosen;
  double log_weight = 0.0;
  double covered = 0.0;
};

/// Mass reachable with every candidate selected.
double max_coverage(const CoverProblem &p);

double covered_mass(const CoverProblem &p, std::span<const std::size_t> chosen);

/// log(sum exp(x_i)); -inf for an empty input.
double log_sum_exp(std::span<const double> xs);

/// log of the total cost of a selection.
double selection_log_weight(const CoverProblem &p,
                            std::span<const std::size_t> chosen);

/// Repeatedly take the candidate with the largest newly covered mass per unit
/// cost; ties go to the cheaper candidate, then to the lower index.
/// Throws InfeasibleCover when the target cannot be exceeded.
CoverResult greedy_cover(const CoverProblem &p);

/// Exhaustive branch-and-bound over subsets; at most 18 candidates.
CoverResult exact_cover(const CoverProblem &p);

inline constexpr std::size_t kExactCoverLimit = 18;

/// Strict "covered > target" with a guard against round-off.
inline bool exceeds(double covered, double target) {
  return covered > target + 1e-12;
}

} // namespace singflow
