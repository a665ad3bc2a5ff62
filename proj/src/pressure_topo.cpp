#include "singflow/pressure_topo.hpp"

#include "singflow/cover.hpp"
#include "singflow/errors.hpp"
#include "singflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace singflow {

CompactSample build_compact_sample(const SystemSpec &sys,
                                   std::span<const Point> source,
                                   double rho_sing, std::size_t max_points) {
  if (!(rho_sing > 0.0))
    throw ContractViolation("rho_sing must be positive");
  if (max_points == 0)
    throw ContractViolation("max_points must be positive");
  std::vector<Point> kept;
  for (const Point &p : source)
    if (singular_distance(sys, p) >= rho_sing)
      kept.push_back(p);
  if (kept.empty())
    throw EmptyCompactSet("no source point is at distance >= rho_sing from "
                          "the singular set");

  CompactSample K;
  K.rho_sing = rho_sing;
  const std::size_t want = std::min(max_points, kept.size());
  std::vector<double> nearest(kept.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  for (std::size_t k = 0; k < want; ++k) {
    K.points.push_back(kept[next]);
    double far = -1.0;
    std::size_t far_i = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      nearest[i] = std::min(nearest[i], distance(sys, kept[i], kept[next]));
      if (nearest[i] > far) {
        far = nearest[i];
        far_i = i;
      }
    }
    next = far_i;
  }
  double fill = 0.0;
  for (double d : nearest)
    fill = std::max(fill, d);
  K.fill_radius = fill;
  return K;
}

// ---------------------------------------------------------------------------

BallMatrix::BallMatrix(const BallSurvival &surv, std::size_t n,
                       std::size_t horizon)
    : n_(n), bits_(n * n, 0) {
  for (std::size_t c = 0; c < surv.centers(); ++c)
    for (auto [m, s] : surv.rows[c])
      if (s >= static_cast<std::int32_t>(horizon))
        bits_[c * n + m] = 1;
}

KOrbits KOrbits::integrate(const SystemSpec &sys, const CompactSample &K,
                           double t_max, const TopoOptions &opts, bool warped) {
  const WarpBand band = resolved_band(opts.band, opts.dt);
  const std::size_t steps =
      warped ? warped_extent(t_max, opts.dt, band) : steps_for(t_max, opts.dt);
  const double T = opts.dt * static_cast<double>(steps);
  KOrbits o;
  o.dt = opts.dt;
  o.traj.resize(K.size());
  parallel_for(K.size(), opts.threads, [&](std::size_t i) {
    o.traj[i] = integrate_orbit(sys, K.points[i], T, opts.dt);
  });
  return o;
}

std::vector<double> KOrbits::log_weights(const ScalarField &f, double t) const {
  const std::size_t n = steps_for(t, dt);
  std::vector<double> w;
  w.reserve(traj.size());
  for (const Trajectory &tr : traj)
    w.push_back(orbit_integral(tr, f, n));
  return w;
}

BallMatrix ball_matrix(const SystemSpec &sys, const KOrbits &orbits,
                       BallVariant variant, double t, double eps,
                       const TopoOptions &opts) {
  const std::size_t n = steps_for(t, orbits.dt);
  const BallSurvival surv =
      compute_survival(variant, sys, orbits.traj, orbits.traj, eps,
                       resolved_band(opts.band, opts.dt), n, opts.threads);
  return BallMatrix(surv, orbits.traj.size(), n);
}

std::string to_string(SeparationOrder o) {
  return o == SeparationOrder::WeightDesc ? "weight-desc" : "input";
}

// ---------------------------------------------------------------------------

bool is_spanning(const BallMatrix &balls, std::span<const std::size_t> set) {
  for (std::size_t k = 0; k < balls.size(); ++k) {
    bool hit = false;
    for (std::size_t c : set)
      if (balls.contains(c, k)) {
        hit = true;
        break;
      }
    if (!hit)
      return false;
  }
  return true;
}

bool is_separating(const BallMatrix &balls, std::span<const std::size_t> set) {
  for (std::size_t a : set)
    for (std::size_t b : set)
      if (a != b && balls.contains(a, b))
        return false;
  return true;
}

bool is_maximal_separating(const BallMatrix &balls,
                           std::span<const std::size_t> set) {
  if (!is_separating(balls, set))
    return false;
  std::vector<char> in(balls.size(), 0);
  for (std::size_t e : set)
    in[e] = 1;
  for (std::size_t k = 0; k < balls.size(); ++k) {
    if (in[k])
      continue;
    bool blocked = false;
    for (std::size_t e : set)
      if (balls.contains(e, k) || balls.contains(k, e)) {
        blocked = true;
        break;
      }
    if (!blocked)
      return false;
  }
  return true;
}

SpanningSolution greedy_spanning(const BallMatrix &balls,
                                 const std::vector<double> &log_weights) {
  const std::size_t n = balls.size();
  if (n == 0)
    throw ContractViolation("greedy_spanning: empty compact sample");
  CoverProblem p;
  p.element_weight.assign(n, 1.0);
  p.target = static_cast<double>(n) - 0.5;
  p.log_cost = log_weights;
  p.covers.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (!balls.contains(c, c))
      throw Error("internal invariant: a point is missing from its own ball");
    for (std::size_t m = 0; m < n; ++m)
      if (balls.contains(c, m))
        p.covers[c].push_back(static_cast<std::uint32_t>(m));
  }
  const bool exact = n <= kExactCoverLimit;
  const CoverResult r = exact ? exact_cover(p) : greedy_cover(p);
  SpanningSolution s;
  s.members = r.chosen;
  s.log_weight = r.log_weight;
  s.exact = exact;
  return s;
}

SeparatingSolution maximal_separating(const BallMatrix &balls,
                                      const std::vector<double> &log_weights,
                                      SeparationOrder order) {
  const std::size_t n = balls.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (order == SeparationOrder::WeightDesc)
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return log_weights[a] > log_weights[b];
    });
  SeparatingSolution s;
  s.order = order;
  for (std::size_t k : idx) {
    bool ok = true;
    for (std::size_t e : s.members)
      if (balls.contains(e, k) || balls.contains(k, e)) {
        ok = false;
        break;
      }
    if (ok)
      s.members.push_back(k);
  }
  std::vector<double> w;
  for (std::size_t e : s.members)
    w.push_back(log_weights[e]);
  s.log_weight = log_sum_exp(w);
  s.maximal = true;
  return s;
}

SpanningSolution greedy_spanning(const SystemSpec &sys, const CompactSample &K,
                                 const PotentialSpec &f, BallVariant variant,
                                 double t, double eps, const TopoOptions &opts) {
  if (K.points.empty())
    throw ContractViolation("greedy_spanning: empty compact sample");
  const KOrbits o = KOrbits::integrate(sys, K, t, opts, is_warped(variant));
  SpanningSolution s = greedy_spanning(ball_matrix(sys, o, variant, t, eps, opts),
                                       o.log_weights(f.f, t));
  s.variant = variant;
  s.t = t;
  s.eps = eps;
  return s;
}

SeparatingSolution maximal_separating(const SystemSpec &sys,
                                      const CompactSample &K,
                                      const PotentialSpec &f,
                                      BallVariant variant, double t, double eps,
                                      SeparationOrder order,
                                      const TopoOptions &opts) {
  if (K.points.empty())
    throw ContractViolation("maximal_separating: empty compact sample");
  const KOrbits o = KOrbits::integrate(sys, K, t, opts, is_warped(variant));
  SeparatingSolution s = maximal_separating(
      ball_matrix(sys, o, variant, t, eps, opts), o.log_weights(f.f, t), order);
  s.variant = variant;
  s.t = t;
  s.eps = eps;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

double set_weight(std::span<const std::size_t> set, const std::vector<double> &w) {
  std::vector<double> v;
  for (std::size_t e : set)
    v.push_back(w[e]);
  return log_sum_exp(v);
}

SeparatingSolution best_separating(const BallMatrix &m,
                                   const std::vector<double> &w) {
  SeparatingSolution a = maximal_separating(m, w, SeparationOrder::WeightDesc);
  SeparatingSolution b = maximal_separating(m, w, SeparationOrder::Input);
  return b.log_weight > a.log_weight ? b : a;
}

} // namespace

SandwichReport sandwich_check(const SystemSpec &sys, const CompactSample &K,
                              const PotentialSpec &f, double t,
                              const std::vector<double> &eps_grid,
                              const TopoOptions &opts) {
  SandwichReport rep;
  rep.t = t;
  rep.note = "time-shrunk comparisons between R2 and R3 need t large relative "
             "to lambda; only unshrunk orderings are asserted";
  rep.min_margin = std::numeric_limits<double>::infinity();
  const KOrbits o = KOrbits::integrate(sys, K, t, opts, true);
  const std::vector<double> w = o.log_weights(f.f, t);

  auto relation = [&](double lhs, double rhs) {
    const double margin = lhs - rhs;
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < -1e-9)
      ++rep.violations;
  };

  for (double eps : eps_grid) {
    const BallMatrix r1 = ball_matrix(sys, o, BallVariant::R1, t, eps, opts);
    const BallMatrix r2 = ball_matrix(sys, o, BallVariant::R2, t, eps, opts);
    const BallMatrix r1_half =
        ball_matrix(sys, o, BallVariant::R1, t, 0.5 * eps, opts);

    SandwichRow row;
    row.eps = eps;

    // maximal separating at eps/2 must span at eps
    const SeparatingSolution half_w =
        maximal_separating(r1_half, w, SeparationOrder::WeightDesc);
    const SeparatingSolution half_i =
        maximal_separating(r1_half, w, SeparationOrder::Input);
    const bool spans_w = is_spanning(r1, half_w.members);
    const bool spans_i = is_spanning(r1, half_i.members);
    row.half_separating_spans = spans_w && spans_i;
    if (!row.half_separating_spans)
      ++rep.violations;
    row.log_z1_half = std::max(half_w.log_weight, half_i.log_weight);

    // spanning values; any verified spanning set bounds the infimum
    SpanningSolution n1 = greedy_spanning(r1, w);
    row.log_n1 = n1.log_weight;
    if (spans_w)
      row.log_n1 = std::min(row.log_n1, half_w.log_weight);
    if (spans_i)
      row.log_n1 = std::min(row.log_n1, half_i.log_weight);
    row.log_n2 = greedy_spanning(r2, w).log_weight;
    if (is_spanning(r2, n1.members))
      row.log_n2 = std::min(row.log_n2, n1.log_weight);
    if (spans_w && is_spanning(r2, half_w.members))
      row.log_n2 = std::min(row.log_n2, half_w.log_weight);
    if (spans_i && is_spanning(r2, half_i.members))
      row.log_n2 = std::min(row.log_n2, half_i.log_weight);

    // separating values; R2-separating sets are R1-separating
    const SeparatingSolution z2 = best_separating(r2, w);
    row.log_z2 = z2.log_weight;
    row.log_z1 = best_separating(r1, w).log_weight;
    if (is_separating(r1, z2.members))
      row.log_z1 = std::max(row.log_z1, set_weight(z2.members, w));

    relation(row.log_n1, row.log_n2);
    relation(row.log_z1, row.log_z2);
    relation(row.log_z1_half, row.log_n1);
    rep.rows.push_back(row);
  }
  if (rep.rows.empty())
    rep.min_margin = 0.0;
  return rep;
}

PressureTable topo_pressure_table(const SystemSpec &sys,
                                  const std::vector<CompactSample> &family,
                                  const PotentialSpec &f,
                                  const std::vector<BallVariant> &variants,
                                  const std::vector<double> &t_grid,
                                  const std::vector<double> &eps_grid,
                                  const TopoOptions &opts) {
  if (family.empty() || variants.empty() || t_grid.empty() || eps_grid.empty())
    throw ContractViolation("topo_pressure_table: empty grid or family");
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  bool warped = false;
  for (BallVariant v : variants)
    warped = warped || is_warped(v);

  PressureTable table;
  for (BallVariant v : variants) {
    for (double eps : eps_grid) {
      // per t: best (value, k) for each method
      std::vector<PressureRow> best_span(t_grid.size()), best_sep(t_grid.size());
      std::vector<bool> have(t_grid.size(), false);
      for (std::size_t k = 0; k < family.size(); ++k) {
        const KOrbits o = KOrbits::integrate(sys, family[k], t_max, opts, warped);
        const BallSurvival surv = compute_survival(
            v, sys, o.traj, o.traj, eps, resolved_band(opts.band, opts.dt),
            steps_for(t_max, opts.dt), opts.threads);
        for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
          const double t = t_grid[ti];
          const BallMatrix m(surv, o.traj.size(), steps_for(t, opts.dt));
          const std::vector<double> w = o.log_weights(f.f, t);
          PressureRow row;
          row.variant = v;
          row.t = t;
          row.eps = eps;
          row.delta = 0.0;
          row.k_id = static_cast<long>(k);
          row.fill_radius = family[k].fill_radius;
          PressureRow span = row, sep = row;
          span.method = "spanning";
          span.value = greedy_spanning(m, w).log_weight / t;
          sep.method = "separating";
          sep.value = best_separating(m, w).log_weight / t;
          table.rows.push_back(span);
          table.rows.push_back(sep);
          if (!have[ti] || span.value > best_span[ti].value)
            best_span[ti] = span;
          if (!have[ti] || sep.value > best_sep[ti].value)
            best_sep[ti] = sep;
          have[ti] = true;
        }
      }
      for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        PressureRow a = best_span[ti], b = best_sep[ti];
        a.k_id = -1;
        b.k_id = -1;
        table.rows.push_back(a);
        table.rows.push_back(b);
      }
    }
  }
  table.compute_readoffs();
  return table;
}

VariationalReport variational_gap(const SystemSpec &sys,
                                  const std::vector<EmpiricalMeasure> &measures,
                                  const std::vector<CompactSample> &family,
                                  const PotentialSpec &f,
                                  const VariationalOptions &opts) {
  if (opts.t_grid.empty() || opts.eps_grid.empty())
    throw ContractViolation("variational_gap: empty grid");
  VariationalReport rep;
  const double t_max = *std::max_element(opts.t_grid.begin(), opts.t_grid.end());
  for (std::size_t mi = 0; mi < measures.size(); ++mi) {
    const EmpiricalMeasure &mu = measures[mi];
    mu.validate();
    for (const Point &p : mu.atoms)
      if (!(singular_distance(sys, p) > 0.0))
        throw ContractViolation("variational_gap: atom on the singular set");
    CompactSample K;
    K.points = mu.atoms;
    K.rho_sing = std::numeric_limits<double>::infinity();
    for (const Point &p : K.points)
      K.rho_sing = std::min(K.rho_sing, singular_distance(sys, p));
    const KOrbits o = KOrbits::integrate(sys, K, t_max, opts.topo, false);
    std::vector<double> readoffs;
    for (double eps : opts.eps_grid) {
      const BallSurvival surv = compute_survival(
          BallVariant::R1, sys, o.traj, o.traj, eps,
          resolved_band(opts.topo.band, opts.topo.dt),
          steps_for(t_max, opts.topo.dt), opts.topo.threads);
      std::vector<double> metric_logs;
      for (double t : opts.t_grid) {
        const std::size_t h = steps_for(t, opts.topo.dt);
        const BallMatrix m(surv, K.size(), h);
        const std::vector<double> w = o.log_weights(f.f, t);
        const SpanningSolution span = greedy_spanning(m, w);

        CoverProblem p;
        p.element_weight = mu.weights;
        p.target = 1.0 - opts.delta;
        p.log_cost = w;
        for (std::size_t c = 0; c < K.size(); ++c)
          p.covers.push_back(surv.members_at(c, h));
        const CoverResult metric = greedy_cover(p);

        VariationalCell cell;
        cell.measure = mi;
        cell.t = t;
        cell.eps = eps;
        cell.log_topo = span.log_weight;
        // the spanning set covers all of K, hence all of mu
        cell.log_metric = std::min(metric.log_weight, span.log_weight);
        cell.ok = cell.log_metric <= cell.log_topo + 1e-9 &&
                  exceeds(covered_mass(p, metric.chosen), p.target);
        if (!cell.ok)
          ++rep.violations;
        rep.cells.push_back(cell);
        metric_logs.push_back(cell.log_metric);
      }
      readoffs.push_back(top_half_slope(opts.t_grid, metric_logs));
    }
    rep.metric_readoffs.push_back(readoffs);
  }
  if (!family.empty()) {
    const PressureTable topo =
        topo_pressure_table(sys, family, f, {BallVariant::R1}, opts.t_grid,
                            opts.eps_grid, opts.topo);
    for (double eps : opts.eps_grid) {
      const Readoff *r = topo.readoff(BallVariant::R1, eps, 0.0, "spanning", -1);
      rep.topo_readoffs.push_back(r ? r->slope : 0.0);
    }
  }
  return rep;
}

} // namespace singflow
