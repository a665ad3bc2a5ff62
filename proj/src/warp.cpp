#include "singflow/warp.hpp"

#include "singflow/errors.hpp"
#include "singflow/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

namespace singflow {

std::string to_string(BallVariant v) {
  switch (v) {
  case BallVariant::Plain:
    return "PLAIN";
  case BallVariant::PlainReparam:
    return "PLAIN_REPARAM";
  case BallVariant::R1:
    return "R1";
  case BallVariant::R2:
    return "R2";
  case BallVariant::R3:
    return "R3";
  }
  return "?";
}

BallVariant parse_variant(const std::string &s) {
  std::string u = s;
  for (char &c : u)
    c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "PLAIN")
    return BallVariant::Plain;
  if (u == "PLAIN_REPARAM")
    return BallVariant::PlainReparam;
  if (u == "R1")
    return BallVariant::R1;
  if (u == "R2")
    return BallVariant::R2;
  if (u == "R3")
    return BallVariant::R3;
  throw ContractViolation("unknown ball variant '" + s + "'");
}

bool is_rescaled(BallVariant v) {
  return v == BallVariant::R1 || v == BallVariant::R2 || v == BallVariant::R3;
}

bool is_warped(BallVariant v) {
  return v == BallVariant::PlainReparam || v == BallVariant::R2 ||
         v == BallVariant::R3;
}

double WarpBand::half_width(double s) const {
  return std::max(lambda * s, lambda * b);
}

WarpBand WarpBand::standard(double dt, double lambda) {
  return WarpBand{lambda, 10.0 * dt};
}

std::size_t WarpPath::non_diagonal_steps() const {
  std::size_t n = 0;
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    const bool di = pairs[k].first != pairs[k - 1].first;
    const bool dj = pairs[k].second != pairs[k - 1].second;
    if (di != dj)
      ++n;
  }
  return n;
}

std::size_t warped_extent(double t, double dt, const WarpBand &band) {
  const double span = t + band.half_width(t);
  return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

namespace {

struct Row {
  std::size_t lo = 0;
  std::vector<char> reach;

  bool at(std::size_t w) const {
    return w >= lo && w < lo + reach.size() && reach[w - lo];
  }
  std::size_t hi() const { return lo + reach.size() - 1; }
};

// Computes row `u` from `prev`; returns false when no cell is reachable.
template <class Allowed>
bool advance_row(std::size_t u, std::size_t cols, const Row &prev,
                 Allowed &&allowed, Row &cur) {
  cur.reach.clear();
  const std::size_t plo = prev.lo;
  const std::size_t phi = prev.hi();
  cur.lo = plo;
  for (std::size_t w = plo; w < cols; ++w) {
    const bool from_prev = prev.at(w) || (w > 0 && prev.at(w - 1));
    const bool from_left = w > plo && cur.reach[w - plo - 1];
    if (!from_prev && !from_left) {
      if (w > phi + 1)
        break;
      cur.reach.push_back(0);
      continue;
    }
    const bool ok = allowed(u, w);
    cur.reach.push_back(ok ? 1 : 0);
    if (!ok && w > phi)
      break;
  }
  // trim to the reachable span
  auto first = std::find(cur.reach.begin(), cur.reach.end(), 1);
  if (first == cur.reach.end())
    return false;
  auto last = std::find(cur.reach.rbegin(), cur.reach.rend(), 1).base();
  const std::size_t shift = static_cast<std::size_t>(first - cur.reach.begin());
  cur.reach.erase(last, cur.reach.end());
  cur.reach.erase(cur.reach.begin(), first);
  cur.lo += shift;
  return true;
}

template <class Allowed>
bool first_row(std::size_t cols, Allowed &&allowed, Row &row) {
  row.lo = 0;
  row.reach.clear();
  if (cols == 0 || !allowed(0, 0))
    return false;
  row.reach.push_back(1);
  for (std::size_t w = 1; w < cols && allowed(0, w); ++w)
    row.reach.push_back(1);
  return true;
}

template <class Allowed>
std::optional<std::vector<std::pair<std::size_t, std::size_t>>>
witness_impl(std::size_t rows, std::size_t cols, Allowed &&allowed) {
  std::vector<Row> table(rows);
  if (rows == 0 || !first_row(cols, allowed, table[0]))
    return std::nullopt;
  for (std::size_t u = 1; u < rows; ++u)
    if (!advance_row(u, cols, table[u - 1], allowed, table[u]))
      return std::nullopt;

  std::size_t u = rows - 1;
  std::size_t w = table[u].hi();
  std::vector<std::pair<std::size_t, std::size_t>> path{{u, w}};
  while (u > 0 || w > 0) {
    if (u > 0 && w > 0 && table[u - 1].at(w - 1)) {
      --u;
      --w;
    } else if (u > 0 && table[u - 1].at(w)) {
      --u;
    } else {
      // horizontal predecessor must exist for a reachable cell
      --w;
    }
    path.emplace_back(u, w);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Interval form of the staircase DP. Row u may use the columns in band(u);
// run_end(w) is the last column whose tube predicate equals that of w, which
// lets flat stretches of the warped orbit be crossed in one step.
struct Span {
  std::size_t lo, hi; // inclusive
};

template <class BandFn, class RunEnd, class Tube>
std::ptrdiff_t reach_runs(std::size_t rows, std::size_t cols, BandFn &&band,
                          RunEnd &&run_end, Tube &&tube) {
  if (rows == 0 || cols == 0)
    return kNotMember;
  auto extend = [&](std::size_t u, std::size_t w, std::size_t bhi) {
    std::size_t e = w;
    while (true) {
      e = std::min(run_end(e), bhi);
      if (e + 1 > bhi || !tube(u, e + 1))
        return e;
      ++e;
    }
  };
  std::vector<Span> prev, cur, cand;
  {
    const auto [blo, bhi] = band(0);
    if (blo > 0 || !tube(0, 0))
      return kNotMember;
    prev.push_back({0, extend(0, 0, bhi)});
  }
  for (std::size_t u = 1; u < rows; ++u) {
    const auto [blo, bhi] = band(u);
    cand.clear();
    for (const Span &s : prev) {
      const std::size_t hi = std::min(s.hi + 1, cols - 1);
      if (!cand.empty() && s.lo <= cand.back().hi + 1)
        cand.back().hi = std::max(cand.back().hi, hi);
      else
        cand.push_back({s.lo, hi});
    }
    cur.clear();
    std::size_t next = blo; // first column not yet decided
    for (const Span &c : cand) {
      std::size_t w = std::max(c.lo, next);
      const std::size_t cb = std::min(c.hi, bhi);
      while (w <= cb) {
        if (tube(u, w)) {
          const std::size_t e = extend(u, w, bhi);
          cur.push_back({w, e});
          w = e + 2;
        } else {
          w = run_end(w) + 1;
        }
      }
      next = std::max(next, w);
    }
    if (cur.empty())
      return static_cast<std::ptrdiff_t>(u) - 1;
    std::swap(prev, cur);
  }
  return static_cast<std::ptrdiff_t>(rows) - 1;
}

void check_pair(const TrajView &x, const TrajView &y) {
  if (x.size() == 0 || y.size() == 0)
    throw ContractViolation("empty trajectory");
  if (std::fabs(x.dt - y.dt) > 1e-12 * std::max(x.dt, y.dt))
    throw ContractViolation("trajectories have different dt");
}

void check_regular(BallVariant v, const TrajView &x) {
  if (!is_rescaled(v))
    return;
  for (double s : x.speeds)
    if (!(s > 0.0))
      throw SingularOrbit("rescaled ball centred on an orbit with zero speed");
}

bool in_band(const WarpBand &band, double dt, std::size_t u, std::size_t w) {
  const double shift = std::fabs(static_cast<double>(u) - static_cast<double>(w)) * dt;
  return shift <= band.half_width(static_cast<double>(u) * dt) * (1.0 + 1e-12) + 1e-12;
}

// Lattice geometry of a warped variant: unwarped/warped orbits and the tube.
struct Lattice {
  const TrajView *unwarped;
  const TrajView *warped;
  BallVariant variant;
};

Lattice lattice_for(BallVariant v, const TrajView &x, const TrajView &y) {
  if (v == BallVariant::R3)
    return {&x, &y, v};
  return {&y, &x, v};
}

// Tube radius and distance at lattice cell (u, w).
inline bool tube(const SystemSpec &sys, const Lattice &lat, double eps,
                 std::size_t u, std::size_t w) {
  const Point &pu = lat.unwarped->positions[u];
  const Point &pw = lat.warped->positions[w];
  double radius = eps;
  if (lat.variant == BallVariant::R2)
    radius = eps * lat.warped->speeds[w];
  else if (lat.variant == BallVariant::R3)
    radius = eps * lat.unwarped->speeds[u];
  return distance(sys, pu, pw) < radius;
}

} // namespace

std::ptrdiff_t staircase_reach(
    std::size_t rows, std::size_t cols,
    const std::function<bool(std::size_t, std::size_t)> &allowed) {
  return reach_runs(
      rows, cols,
      [&](std::size_t) { return std::pair<std::size_t, std::size_t>{0, cols - 1}; },
      [](std::size_t w) { return w; }, allowed);
}

std::optional<std::vector<std::pair<std::size_t, std::size_t>>>
staircase_witness(std::size_t rows, std::size_t cols,
                  const std::function<bool(std::size_t, std::size_t)> &allowed) {
  return witness_impl(rows, cols, allowed);
}

namespace {

std::ptrdiff_t survival_unchecked(BallVariant variant, const SystemSpec &sys,
                                  const TrajView &x, const TrajView &y,
                                  double eps, const WarpBand &band,
                                  std::size_t max_index) {
  if (!is_warped(variant)) {
    const std::size_t last =
        std::min({max_index, x.last_index(), y.last_index()});
    const bool rescaled = variant == BallVariant::R1;
    for (std::size_t k = 0; k <= last; ++k) {
      const double radius = rescaled ? eps * x.speeds[k] : eps;
      if (!(distance(sys, x.positions[k], y.positions[k]) < radius))
        return static_cast<std::ptrdiff_t>(k) - 1;
    }
    return static_cast<std::ptrdiff_t>(last);
  }
  const Lattice lat = lattice_for(variant, x, y);
  const std::size_t rows = std::min(max_index, lat.unwarped->last_index()) + 1;
  const std::size_t cols = lat.warped->size();
  const double dt = x.dt;

  // runs of bitwise identical warped samples share the tube predicate
  const auto &pos = lat.warped->positions;
  const auto &spd = lat.warped->speeds;
  std::vector<std::size_t> run_end(cols);
  run_end[cols - 1] = cols - 1;
  for (std::size_t w = cols - 1; w-- > 0;)
    run_end[w] = pos[w] == pos[w + 1] && spd[w] == spd[w + 1] ? run_end[w + 1] : w;

  auto band_of = [&](std::size_t u) {
    auto k = static_cast<std::size_t>(
        std::floor(band.half_width(static_cast<double>(u) * dt) / dt));
    while (in_band(band, dt, u, u + k + 1))
      ++k;
    while (k > 0 && !in_band(band, dt, u, u + k))
      --k;
    const std::size_t lo = u > k ? u - k : 0;
    const std::size_t hi = std::min(u + k, cols - 1);
    // an empty band is signalled by lo > hi
    return std::pair<std::size_t, std::size_t>{lo, lo > cols - 1 ? 0 : hi};
  };
  return reach_runs(rows, cols, band_of,
                    [&](std::size_t w) { return run_end[w]; },
                    [&](std::size_t u, std::size_t w) {
                      return tube(sys, lat, eps, u, w);
                    });
}

} // namespace

std::ptrdiff_t survival_index(BallVariant variant, const SystemSpec &sys,
                              const TrajView &x, const TrajView &y, double eps,
                              const WarpBand &band, std::size_t max_index) {
  check_pair(x, y);
  check_regular(variant, x);
  return survival_unchecked(variant, sys, x, y, eps, band, max_index);
}

std::vector<std::uint32_t> BallSurvival::members_at(std::size_t c,
                                                    std::size_t h) const {
  std::vector<std::uint32_t> out;
  for (auto [m, s] : rows[c])
    if (s >= static_cast<std::int32_t>(h))
      out.push_back(m);
  return out;
}

bool BallSurvival::contains(std::size_t c, std::size_t member,
                            std::size_t h) const {
  const auto &row = rows[c];
  auto it = std::lower_bound(
      row.begin(), row.end(), static_cast<std::uint32_t>(member),
      [](const auto &e, std::uint32_t v) { return e.first < v; });
  return it != row.end() && it->first == member &&
         it->second >= static_cast<std::int32_t>(h);
}

BallSurvival compute_survival(BallVariant variant, const SystemSpec &sys,
                              std::span<const Trajectory> centers,
                              std::span<const Trajectory> members, double eps,
                              const WarpBand &band, std::size_t max_index,
                              std::size_t threads) {
  BallSurvival out;
  out.rows.resize(centers.size());
  parallel_for(centers.size(), threads, [&](std::size_t c) {
    const TrajView x = centers[c];
    check_regular(variant, x);
    auto &row = out.rows[c];
    for (std::size_t m = 0; m < members.size(); ++m) {
      const TrajView y = members[m];
      check_pair(x, y);
      const auto s = survival_unchecked(variant, sys, x, y, eps, band, max_index);
      if (s >= 0)
        row.emplace_back(static_cast<std::uint32_t>(m),
                         static_cast<std::int32_t>(s));
    }
  });
  return out;
}

bool in_ball(BallVariant variant, const SystemSpec &sys, const TrajView &x,
             const TrajView &y, double eps, const WarpBand &band) {
  check_pair(x, y);
  std::size_t horizon = 0;
  switch (variant) {
  case BallVariant::Plain:
  case BallVariant::R1:
    if (y.size() < x.size())
      throw ContractViolation("y trajectory shorter than x");
    horizon = x.last_index();
    break;
  case BallVariant::PlainReparam:
  case BallVariant::R2:
    horizon = y.last_index();
    break;
  case BallVariant::R3:
    horizon = x.last_index();
    break;
  }
  return survival_index(variant, sys, x, y, eps, band, horizon) ==
         static_cast<std::ptrdiff_t>(horizon);
}

std::optional<WarpPath> find_warp(BallVariant variant, const SystemSpec &sys,
                                  const TrajView &x, const TrajView &y,
                                  double eps, const WarpBand &band) {
  if (!is_warped(variant))
    throw ContractViolation("find_warp needs PLAIN_REPARAM, R2 or R3");
  check_pair(x, y);
  check_regular(variant, x);
  const Lattice lat = lattice_for(variant, x, y);
  const double dt = x.dt;
  auto lattice_path = witness_impl(
      lat.unwarped->size(), lat.warped->size(),
      [&](std::size_t u, std::size_t w) {
        return in_band(band, dt, u, w) && tube(sys, lat, eps, u, w);
      });
  if (!lattice_path)
    return std::nullopt;
  WarpPath out;
  out.pairs.reserve(lattice_path->size());
  for (auto [u, w] : *lattice_path) {
    if (variant == BallVariant::R3)
      out.pairs.emplace_back(u, w);
    else
      out.pairs.emplace_back(w, u);
  }
  return out;
}

InclusionReport inclusion_check_31(const SystemSpec &sys,
                                   std::span<const Trajectory> pool, double eps,
                                   const WarpBand &band, double t,
                                   std::size_t pairs_to_test,
                                   std::uint64_t seed) {
  InclusionReport rep;
  if (pool.empty())
    return rep;
  const double dt = pool.front().dt;
  const std::size_t n = steps_for(t, dt);
  const auto shrunk =
      static_cast<std::size_t>(std::floor((1.0 - band.lambda) * static_cast<double>(n) + 1e-9));
  for (const Trajectory &tr : pool)
    if (tr.last_index() < n)
      throw ContractViolation("inclusion_check_31: pool trajectory shorter than t");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  double slack_sum = 0.0;
  std::size_t slack_count = 0;
  rep.min_slack = std::numeric_limits<double>::infinity();

  auto record_slack = [&](BallVariant v, const TrajView &x, const TrajView &y) {
    const auto path = find_warp(v, sys, x, y, eps, band);
    if (!path)
      return;
    for (auto [i, j] : path->pairs) {
      const double radius = eps * x.speeds[i];
      const double slack = 1.0 - distance(sys, x.positions[i], y.positions[j]) / radius;
      rep.min_slack = std::min(rep.min_slack, slack);
      slack_sum += slack;
      ++slack_count;
    }
  };

  for (std::size_t k = 0; k < pairs_to_test; ++k) {
    const TrajView x = pool[pick(rng)];
    const TrajView y = pool[pick(rng)];
    ++rep.pairs;
    const auto reach = [&](BallVariant v, std::size_t horizon) {
      return survival_index(v, sys, x, y, eps, band, horizon) >=
             static_cast<std::ptrdiff_t>(horizon);
    };
    const bool r1 = reach(BallVariant::R1, n);
    const bool r2 = reach(BallVariant::R2, n);
    const bool r3 = reach(BallVariant::R3, n);
    rep.r1_members += r1;
    rep.r2_members += r2;
    rep.r3_members += r3;
    if (r1 && !r2)
      ++rep.r1_not_r2;
    if (r3) {
      if (reach(BallVariant::R2, shrunk))
        record_slack(BallVariant::R2, x, y.prefix(shrunk + 1));
      else
        ++rep.violations_r3_in_r2;
    }
    if (r2) {
      if (reach(BallVariant::R3, shrunk))
        record_slack(BallVariant::R3, x.prefix(shrunk + 1), y);
      else
        ++rep.violations_r2_in_r3;
    }
  }
  if (slack_count == 0) {
    rep.min_slack = 0.0;
    rep.mean_slack = 0.0;
  } else {
    rep.mean_slack = slack_sum / static_cast<double>(slack_count);
  }
  return rep;
}

} // namespace singflow
