#include "singflow/cover.hpp"

#include "singflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace singflow {

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty())
    return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs)
    acc += std::exp(x - top);
  return top + std::log(acc);
}

double selection_log_weight(const CoverProblem &p,
                            std::span<const std::size_t> chosen) {
  std::vector<double> costs;
  costs.reserve(chosen.size());
  for (std::size_t c : chosen)
    costs.push_back(p.log_cost[c]);
  return log_sum_exp(costs);
}

double covered_mass(const CoverProblem &p, std::span<const std::size_t> chosen) {
  std::vector<char> hit(p.element_weight.size(), 0);
  for (std::size_t c : chosen)
    for (std::uint32_t e : p.covers[c])
      hit[e] = 1;
  double mass = 0.0;
  for (std::size_t e = 0; e < hit.size(); ++e)
    if (hit[e])
      mass += p.element_weight[e];
  return mass;
}

double max_coverage(const CoverProblem &p) {
  std::vector<std::size_t> all(p.covers.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    all[i] = i;
  return covered_mass(p, all);
}

namespace {

[[noreturn]] void infeasible(const CoverProblem &p) {
  const double best = max_coverage(p);
  std::ostringstream os;
  os << "cover infeasible: target mass > " << p.target
     << " but the pool reaches at most " << best;
  throw InfeasibleCover(best, os.str());
}

} // namespace

CoverResult greedy_cover(const CoverProblem &p) {
  const std::size_t nc = p.covers.size();
  const std::size_t ne = p.element_weight.size();
  if (!exceeds(max_coverage(p), p.target))
    infeasible(p);

  std::vector<std::vector<std::uint32_t>> owners(ne);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::uint32_t e : p.covers[c])
      owners[e].push_back(static_cast<std::uint32_t>(c));

  std::vector<double> gain(nc, 0.0);
  std::vector<std::size_t> open(nc, 0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::uint32_t e : p.covers[c])
      gain[c] += p.element_weight[e];
    open[c] = p.covers[c].size();
  }

  std::vector<char> covered(ne, 0);
  std::vector<char> taken(nc, 0);
  CoverResult res;
  double mass = 0.0;
  while (!exceeds(mass, p.target)) {
    std::size_t best = nc;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < nc; ++c) {
      if (taken[c] || open[c] == 0 || !(gain[c] > 0.0))
        continue;
      const double score = std::log(gain[c]) - p.log_cost[c];
      if (best == nc) {
        best = c;
        best_score = score;
        continue;
      }
      const double tol = 1e-12 * std::max(1.0, std::fabs(score));
      if (score > best_score + tol) {
        best = c;
        best_score = score;
      } else if (std::fabs(score - best_score) <= tol) {
        const double ctol = 1e-12 * std::max(1.0, std::fabs(p.log_cost[c]));
        if (p.log_cost[c] < p.log_cost[best] - ctol) {
          best = c;
          best_score = score;
        }
      }
    }
    if (best == nc)
      infeasible(p);
    taken[best] = 1;
    res.chosen.push_back(best);
    for (std::uint32_t e : p.covers[best]) {
      if (covered[e])
        continue;
      covered[e] = 1;
      mass += p.element_weight[e];
      for (std::uint32_t o : owners[e]) {
        gain[o] -= p.element_weight[e];
        if (--open[o] == 0)
          gain[o] = 0.0;
      }
    }
  }
  res.covered = covered_mass(p, res.chosen);
  res.log_weight = selection_log_weight(p, res.chosen);
  return res;
}

namespace {

struct ExactSearch {
  const CoverProblem &p;
  std::vector<double> cost; // exp(log_cost - reference)
  std::vector<int> hits;
  std::vector<std::size_t> current;
  std::vector<std::size_t> best_set;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;

  void run(std::size_t i, double mass, double spent) {
    if (spent >= best)
      return;
    if (exceeds(mass, p.target)) {
      best = spent;
      best_set = current;
      found = true;
      return;
    }
    if (i == p.covers.size())
      return;
    // include i
    double gained = 0.0;
    for (std::uint32_t e : p.covers[i])
      if (hits[e]++ == 0)
        gained += p.element_weight[e];
    current.push_back(i);
    run(i + 1, mass + gained, spent + cost[i]);
    current.pop_back();
    for (std::uint32_t e : p.covers[i])
      --hits[e];
    // exclude i
    run(i + 1, mass, spent);
  }
};

} // namespace

CoverResult exact_cover(const CoverProblem &p) {
  if (p.covers.size() > kExactCoverLimit)
    throw ContractViolation("exact cover supports at most 18 candidates");
  if (!exceeds(max_coverage(p), p.target))
    infeasible(p);
  ExactSearch s{p, {}, std::vector<int>(p.element_weight.size(), 0), {}, {}};
  const double ref = p.log_cost.empty()
                         ? 0.0
                         : *std::min_element(p.log_cost.begin(), p.log_cost.end());
  for (double c : p.log_cost)
    s.cost.push_back(std::exp(c - ref));
  s.run(0, 0.0, 0.0);
  if (!s.found)
    infeasible(p);
  CoverResult res;
  res.chosen = s.best_set;
  res.covered = covered_mass(p, res.chosen);
  res.log_weight = selection_log_weight(p, res.chosen);
  return res;
}

} // namespace singflow
