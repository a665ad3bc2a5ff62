#include "singflow/pressure_metric.hpp"

#include "singflow/errors.hpp"
#include "singflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <tuple>

namespace singflow {

PotentialSpec constant_potential(double c) {
  return {"constant", [c](const Point &) { return c; }, c};
}

PotentialSpec coordinate_sine_potential(std::size_t axis) {
  return {"coordinate-sine",
          [axis](const Point &p) {
            return std::sin(2.0 * std::numbers::pi * p[axis]);
          },
          0.0};
}

PotentialSpec bump_potential(const SystemSpec &sys, const Point &center,
                             double radius, double mass) {
  if (!(radius > 0.0 && radius < 0.5))
    throw ContractViolation("bump radius must lie in (0, 1/2)");
  if (sys.space == SpaceKind::EuclideanBox)
    throw ContractViolation("bump potential needs a unit-volume torus");
  // integral of (1 - (d/r)^2)^2 over the r-ball
  double unit = 0.0;
  if (sys.dim == 2)
    unit = std::numbers::pi * radius * radius / 3.0;
  else if (sys.dim == 3)
    unit = 4.0 * std::numbers::pi * radius * radius * radius * 8.0 / 105.0;
  else
    throw ContractViolation("bump potential supports dimension 2 or 3");
  const double amp = mass / unit;
  SystemSpec metric_only = sys;
  return {"bump",
          [metric_only, center, radius, amp](const Point &p) {
            const double d = distance(metric_only, p, center);
            if (d >= radius)
              return 0.0;
            const double q = 1.0 - (d / radius) * (d / radius);
            return amp * q * q;
          },
          mass};
}

PotentialSpec shifted(const PotentialSpec &p, double c) {
  PotentialSpec out;
  out.name = p.name + "+c";
  ScalarField g = p.f;
  out.f = [g, c](const Point &x) { return g(x) + c; };
  if (p.analytic_space_average)
    out.analytic_space_average = *p.analytic_space_average + c;
  return out;
}

double orbit_integral(const TrajView &tr, const ScalarField &f,
                      std::size_t last_index) {
  if (last_index >= tr.size())
    throw ContractViolation("orbit_integral: trajectory too short");
  if (last_index == 0)
    return 0.0;
  double sum = 0.5 * (f(tr.positions[0]) + f(tr.positions[last_index]));
  for (std::size_t k = 1; k < last_index; ++k)
    sum += f(tr.positions[k]);
  return sum * tr.dt;
}

double orbit_integral(const SystemSpec &sys, const Point &x,
                      const ScalarField &f, double t, double dt) {
  const Trajectory tr = integrate_orbit(sys, x, t, dt);
  return orbit_integral(tr, f, tr.last_index());
}

std::string to_string(CoverMode m) {
  return m == CoverMode::Exact ? "exact" : "greedy";
}

WarpBand resolved_band(const WarpBand &band, double dt) {
  WarpBand b = band;
  if (!(b.b > 0.0))
    b.b = 10.0 * dt;
  return b;
}

namespace {

std::size_t trajectory_steps(const std::vector<BallVariant> &variants, double t,
                             double dt, const WarpBand &band) {
  bool warped = false;
  for (BallVariant v : variants)
    warped = warped || is_warped(v);
  return warped ? warped_extent(t, dt, band) : steps_for(t, dt);
}

std::vector<Trajectory> integrate_all(const SystemSpec &sys,
                                      const std::vector<Point> &pts,
                                      std::size_t steps, double dt,
                                      std::size_t threads) {
  std::vector<Trajectory> out(pts.size());
  const double T = dt * static_cast<double>(steps);
  parallel_for(pts.size(), threads, [&](std::size_t i) {
    out[i] = integrate_orbit(sys, pts[i], T, dt);
  });
  return out;
}

CoverResult solve(const CoverProblem &p, CoverMode mode) {
  return mode == CoverMode::Exact ? exact_cover(p) : greedy_cover(p);
}

// The variant whose balls are contained in v's, so its covers are v-covers.
std::optional<BallVariant> inner_variant(BallVariant v) {
  switch (v) {
  case BallVariant::R2:
  case BallVariant::R3:
    return BallVariant::R1;
  case BallVariant::PlainReparam:
    return BallVariant::Plain;
  default:
    return std::nullopt;
  }
}

} // namespace

CoverSolution metric_cover_value(const SystemSpec &sys,
                                 const EmpiricalMeasure &mu,
                                 const PotentialSpec &f, BallVariant variant,
                                 double t, double eps, double delta,
                                 const std::vector<Point> &candidates,
                                 const MetricOptions &opts) {
  mu.validate();
  if (!(delta > 0.0 && delta < 1.0))
    throw ContractViolation("delta must lie in (0,1)");
  if (opts.mode == CoverMode::Exact && candidates.size() > kExactCoverLimit)
    throw ContractViolation("exact mode supports at most 18 candidates");
  for (const Point &c : candidates)
    if (!(singular_distance(sys, c) > 0.0))
      throw ContractViolation("cover candidates must be regular points");
  const WarpBand band = resolved_band(opts.band, opts.dt);
  const std::size_t n = steps_for(t, opts.dt);
  const std::size_t steps = trajectory_steps({variant}, t, opts.dt, band);

  const auto centers = integrate_all(sys, candidates, steps, opts.dt, opts.threads);
  const auto atoms = integrate_all(sys, mu.atoms, steps, opts.dt, opts.threads);
  const BallSurvival surv =
      compute_survival(variant, sys, centers, atoms, eps, band, n, opts.threads);

  CoverProblem prob;
  prob.element_weight = mu.weights;
  prob.target = 1.0 - delta;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    prob.covers.push_back(surv.members_at(c, n));
    prob.log_cost.push_back(orbit_integral(centers[c], f.f, n));
  }
  const CoverResult res = solve(prob, opts.mode);

  CoverSolution sol;
  sol.center_index = res.chosen;
  for (std::size_t c : res.chosen)
    sol.centers.push_back(candidates[c]);
  sol.log_weight = res.log_weight;
  sol.covered_mass = res.covered;
  sol.variant = variant;
  sol.t = t;
  sol.eps = eps;
  sol.delta = delta;
  sol.mode = opts.mode;
  return sol;
}

// ---------------------------------------------------------------------------

const PressureRow *PressureTable::find(BallVariant v, double t, double eps,
                                       double delta, const std::string &method,
                                       long k_id) const {
  for (const PressureRow &r : rows)
    if (r.variant == v && r.t == t && r.eps == eps && r.delta == delta &&
        r.method == method && r.k_id == k_id)
      return &r;
  return nullptr;
}

const Readoff *PressureTable::readoff(BallVariant v, double eps, double delta,
                                      const std::string &method,
                                      long k_id) const {
  for (const Readoff &r : readoffs)
    if (r.variant == v && r.eps == eps && r.delta == delta &&
        r.method == method && r.k_id == k_id)
      return &r;
  return nullptr;
}

double top_half_slope(const std::vector<double> &ts,
                      const std::vector<double> &ys) {
  const std::size_t m = ts.size();
  if (m == 0)
    throw ContractViolation("top_half_slope: empty series");
  if (m == 1)
    return ys[0] / ts[0];
  const std::size_t keep = std::max<std::size_t>(2, (m + 1) / 2);
  const std::size_t from = m - keep;
  double mt = 0.0, my = 0.0;
  for (std::size_t i = from; i < m; ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= static_cast<double>(keep);
  my /= static_cast<double>(keep);
  double num = 0.0, den = 0.0;
  for (std::size_t i = from; i < m; ++i) {
    num += (ts[i] - mt) * (ys[i] - my);
    den += (ts[i] - mt) * (ts[i] - mt);
  }
  return num / den;
}

void PressureTable::compute_readoffs() {
  using Key = std::tuple<int, double, double, std::string, long>;
  std::map<Key, std::vector<std::pair<double, double>>> groups;
  std::vector<Key> order;
  for (const PressureRow &r : rows) {
    Key k{static_cast<int>(r.variant), r.eps, r.delta, r.method, r.k_id};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted)
      order.push_back(k);
    it->second.emplace_back(r.t, r.log_value());
  }
  readoffs.clear();
  for (const Key &k : order) {
    auto pts = groups[k];
    std::sort(pts.begin(), pts.end());
    std::vector<double> ts, ys;
    for (auto [t, y] : pts) {
      ts.push_back(t);
      ys.push_back(y);
    }
    Readoff r;
    r.variant = static_cast<BallVariant>(std::get<0>(k));
    r.eps = std::get<1>(k);
    r.delta = std::get<2>(k);
    r.method = std::get<3>(k);
    r.k_id = std::get<4>(k);
    r.slope = top_half_slope(ts, ys);
    readoffs.push_back(r);
  }
}

EmpiricalMeasure subsample_measure(const EmpiricalMeasure &mu,
                                   std::size_t count) {
  if (count == 0 || count >= mu.size())
    return mu;
  EmpiricalMeasure out;
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = (k * mu.size()) / count;
    out.atoms.push_back(mu.atoms[i]);
    out.weights.push_back(mu.weights[i]);
    total += mu.weights[i];
  }
  for (double &w : out.weights)
    w /= total;
  return out;
}

PressureTable metric_pressure_table(const SystemSpec &sys,
                                    const EmpiricalMeasure &mu,
                                    const PotentialSpec &f,
                                    const std::vector<BallVariant> &variants,
                                    const std::vector<double> &t_grid,
                                    const std::vector<double> &eps_grid,
                                    const std::vector<double> &deltas,
                                    const MetricTableOptions &opts) {
  if (variants.empty() || t_grid.empty() || eps_grid.empty() || deltas.empty())
    throw ContractViolation("metric_pressure_table: empty grid");
  mu.validate();
  const EmpiricalMeasure atoms_mu = subsample_measure(mu, opts.atom_sample);
  const WarpBand band = resolved_band(opts.band, opts.dt);

  // candidate pool: evenly spaced regular atoms
  std::vector<std::size_t> regular;
  for (std::size_t i = 0; i < atoms_mu.size(); ++i)
    if (singular_distance(sys, atoms_mu.atoms[i]) > 0.0 &&
        norm(evaluate_field(sys, atoms_mu.atoms[i])) > 0.0)
      regular.push_back(i);
  if (regular.empty())
    throw ContractViolation("no regular atoms to draw candidates from");
  const std::size_t pool_n = std::min(opts.pool_size, regular.size());
  std::vector<std::size_t> pool;
  for (std::size_t k = 0; k < pool_n; ++k)
    pool.push_back(regular[(k * regular.size()) / pool_n]);

  std::vector<BallVariant> needed = variants;
  for (BallVariant v : variants)
    if (auto inner = inner_variant(v))
      if (std::find(needed.begin(), needed.end(), *inner) == needed.end())
        needed.push_back(*inner);

  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  const std::size_t steps = trajectory_steps(needed, t_max, opts.dt, band);
  const std::size_t n_max = steps_for(t_max, opts.dt);
  const auto atom_traj =
      integrate_all(sys, atoms_mu.atoms, steps, opts.dt, opts.threads);
  std::vector<Trajectory> pool_traj;
  pool_traj.reserve(pool.size());
  for (std::size_t i : pool)
    pool_traj.push_back(atom_traj[i]);

  std::vector<std::size_t> horizon;
  for (double t : t_grid)
    horizon.push_back(steps_for(t, opts.dt));
  std::vector<std::vector<double>> log_cost(t_grid.size());
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti)
    for (const Trajectory &tr : pool_traj)
      log_cost[ti].push_back(orbit_integral(tr, f.f, horizon[ti]));

  PressureTable table;
  for (double eps : eps_grid) {
    std::map<BallVariant, BallSurvival> surv;
    for (BallVariant v : needed)
      surv.emplace(v, compute_survival(v, sys, pool_traj, atom_traj, eps, band,
                                       n_max, opts.threads));
    for (double delta : deltas) {
      if (!(delta > 0.0 && delta < 1.0))
        throw ContractViolation("delta must lie in (0,1)");
      for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
        std::map<BallVariant, CoverProblem> problems;
        std::map<BallVariant, CoverResult> results;
        for (BallVariant v : needed) {
          CoverProblem p;
          p.element_weight = atoms_mu.weights;
          p.target = 1.0 - delta;
          p.log_cost = log_cost[ti];
          for (std::size_t c = 0; c < pool.size(); ++c)
            p.covers.push_back(surv.at(v).members_at(c, horizon[ti]));
          problems.emplace(v, std::move(p));
        }
        // inner variants first so their covers can seed the outer ones
        for (BallVariant v : needed)
          if (!inner_variant(v))
            results.emplace(v, solve(problems.at(v), opts.mode));
        for (BallVariant v : needed) {
          auto inner = inner_variant(v);
          if (!inner)
            continue;
          CoverResult r = solve(problems.at(v), opts.mode);
          const CoverResult &in = results.at(*inner);
          const double mass = covered_mass(problems.at(v), in.chosen);
          if (exceeds(mass, 1.0 - delta) && in.log_weight < r.log_weight) {
            r.chosen = in.chosen;
            r.log_weight = in.log_weight;
            r.covered = mass;
          }
          results.emplace(v, r);
        }
        for (BallVariant v : variants) {
          PressureRow row;
          row.variant = v;
          row.t = t_grid[ti];
          row.eps = eps;
          row.delta = delta;
          row.value = results.at(v).log_weight / t_grid[ti];
          row.method = to_string(opts.mode);
          table.rows.push_back(row);
        }
      }
    }
  }
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [&](const PressureRow &a, const PressureRow &b) {
                     auto rank = [&](BallVariant v) {
                       return std::find(variants.begin(), variants.end(), v) -
                              variants.begin();
                     };
                     return std::make_tuple(rank(a.variant), a.eps, a.delta, a.t) <
                            std::make_tuple(rank(b.variant), b.eps, b.delta, b.t);
                   });
  table.compute_readoffs();
  return table;
}

// ---------------------------------------------------------------------------

GammaResult bounded_variation_gamma(const SystemSpec &sys,
                                    const PotentialSpec &f, BallVariant variant,
                                    double t, double eps,
                                    std::size_t pair_samples,
                                    const GammaOptions &opts) {
  if (variant != BallVariant::R2 && variant != BallVariant::R3)
    throw ContractViolation("gamma diagnostic is defined for R2 and R3");
  if (pair_samples < 50)
    throw ContractViolation("gamma diagnostic needs at least 50 samples");
  const WarpBand band = resolved_band(opts.band, opts.dt);
  const std::size_t n = steps_for(t, opts.dt);
  const std::size_t steps = warped_extent(t, opts.dt, band);
  const double T = opts.dt * static_cast<double>(steps);

  // Draw all random numbers up front so the sample set depends on the seed only.
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<Point> centers;
  std::vector<std::vector<Point>> offsets(pair_samples);
  std::vector<std::vector<double>> scales(pair_samples);
  while (centers.size() < pair_samples) {
    const Point p = uniform_point(sys, rng);
    if (singular_distance(sys, p) < opts.min_singular_distance)
      continue;
    const std::size_t i = centers.size();
    centers.push_back(p);
    for (std::size_t k = 0; k < opts.perturbations; ++k) {
      Point dir = Point::zeros(sys.dim);
      for (std::size_t d = 0; d < sys.dim; ++d)
        dir[d] = gauss(rng);
      offsets[i].push_back((1.0 / norm(dir)) * dir);
      scales[i].push_back(u01(rng));
    }
  }

  std::vector<double> spread(pair_samples, 0.0);
  std::vector<std::size_t> admitted(pair_samples, 0);
  parallel_for(pair_samples, opts.threads, [&](std::size_t i) {
    const Trajectory x = integrate_orbit(sys, centers[i], T, opts.dt);
    const double speed = x.speeds[0];
    double lo = orbit_integral(x, f.f, n);
    double hi = lo;
    for (std::size_t k = 0; k < opts.perturbations; ++k) {
      const double r = scales[i][k] * eps * speed;
      const Point y0 = wrap(sys, centers[i] + r * offsets[i][k]);
      Trajectory y;
      try {
        y = integrate_orbit(sys, y0, T, opts.dt);
      } catch (const DomainEscape &) {
        continue;
      }
      if (survival_index(variant, sys, x, y, eps, band, n) <
          static_cast<std::ptrdiff_t>(n))
        continue;
      ++admitted[i];
      const double I = orbit_integral(y, f.f, n);
      lo = std::min(lo, I);
      hi = std::max(hi, I);
    }
    spread[i] = hi - lo;
  });

  GammaResult res;
  res.t = t;
  res.centers = pair_samples;
  for (std::size_t i = 0; i < pair_samples; ++i) {
    res.gamma = std::max(res.gamma, spread[i]);
    res.admissible += admitted[i];
  }
  res.no_pairs = res.admissible == 0;
  if (res.no_pairs)
    res.gamma = 0.0;
  return res;
}

// ---------------------------------------------------------------------------

KatokReport katok_check(const SystemSpec &sys, const EmpiricalMeasure &mu,
                        const PotentialSpec &f, BallVariant variant,
                        const GridPartition &partition,
                        const KatokOptions &opts) {
  mu.validate();
  KatokReport rep;
  rep.table = metric_pressure_table(sys, mu, f, {variant}, opts.t_grid,
                                    {opts.eps}, {opts.delta}, opts.metric);
  const Readoff *r =
      rep.table.readoff(variant, opts.eps, opts.delta, to_string(opts.metric.mode));
  rep.metric_readoff = r ? r->slope : 0.0;
  rep.smb = smb_entropy(sys, mu, partition, opts.tau, opts.n, opts.smb);

  double avg = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    avg += mu.weights[i] * f.f(mu.atoms[i]);
  rep.potential_average = avg;
  rep.entropy_side = rep.smb.entropy + avg;
  rep.difference = rep.metric_readoff - rep.entropy_side;

  std::vector<double> before(partition.cell_count(), 0.0);
  std::vector<double> after(partition.cell_count(), 0.0);
  const Rk4Stepper stepper(sys, opts.smb.dt);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    before[partition.label(mu.atoms[i]) - 1] += mu.weights[i];
    after[partition.label(stepper.step(mu.atoms[i])) - 1] += mu.weights[i];
  }
  double tv = 0.0;
  for (std::size_t c = 0; c < before.size(); ++c)
    tv += std::fabs(before[c] - after[c]);
  rep.transport_defect = 0.5 * tv;
  return rep;
}

} // namespace singflow
