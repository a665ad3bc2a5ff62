#include "singflow/ergodic.hpp"

#include "singflow/errors.hpp"
#include "singflow/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace singflow {

double EmpiricalMeasure::total_weight() const {
  double s = 0.0;
  for (double w : weights)
    s += w;
  return s;
}

void EmpiricalMeasure::validate() const {
  if (atoms.empty())
    throw DegenerateMeasure("empirical measure has no atoms");
  if (atoms.size() != weights.size())
    throw ContractViolation("atoms and weights differ in length");
  for (double w : weights)
    if (!(w > 0.0))
      throw ContractViolation("atom weights must be positive");
  const double total = total_weight();
  if (std::fabs(total - 1.0) > 1e-9)
    throw ContractViolation("atom weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<Point> atoms) {
  if (atoms.empty())
    throw DegenerateMeasure("empirical measure has no atoms");
  EmpiricalMeasure m;
  m.weights.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
  m.atoms = std::move(atoms);
  return m;
}

// ---------------------------------------------------------------------------

double GridPartition::default_offset(std::size_t axis) {
  return 1e-3 * std::numbers::sqrt2 * static_cast<double>(axis + 1) /
         (1.0 + std::numbers::sqrt3);
}

GridPartition::GridPartition(std::vector<std::size_t> boxes_per_axis,
                             const SystemSpec &sys)
    : GridPartition(boxes_per_axis, sys, [&] {
        std::vector<double> off(boxes_per_axis.size());
        for (std::size_t k = 0; k < off.size(); ++k)
          off[k] = default_offset(k);
        return off;
      }()) {}

GridPartition::GridPartition(std::vector<std::size_t> boxes_per_axis,
                             const SystemSpec &sys, std::vector<double> offset)
    : boxes_(std::move(boxes_per_axis)), offset_(std::move(offset)) {
  if (boxes_.size() != sys.dim)
    throw ContractViolation("partition dimension differs from the system");
  if (offset_.size() != boxes_.size())
    throw ContractViolation("partition offset has wrong length");
  lo_.assign(sys.dim, 0.0);
  width_.assign(sys.dim, 1.0);
  if (sys.space == SpaceKind::EuclideanBox) {
    if (!sys.box)
      throw ContractViolation("euclidean system without a box");
    for (std::size_t k = 0; k < sys.dim; ++k) {
      lo_[k] = sys.box->lo[k];
      width_[k] = sys.box->hi[k] - sys.box->lo[k];
    }
  }
  cells_ = 1;
  for (std::size_t b : boxes_) {
    if (b == 0)
      throw ContractViolation("partition needs at least one box per axis");
    cells_ *= b;
  }
  if (cells_ < 2)
    throw ContractViolation("partition needs at least two cells");
}

GridPartition GridPartition::uniform(std::size_t boxes_per_side,
                                     const SystemSpec &sys) {
  return GridPartition(std::vector<std::size_t>(sys.dim, boxes_per_side), sys);
}

std::uint32_t GridPartition::label(const Point &p) const {
  std::size_t idx = 0;
  for (std::size_t k = boxes_.size(); k-- > 0;) {
    double u = (p[k] - lo_[k]) / width_[k] - offset_[k];
    u -= std::floor(u);
    auto cell = static_cast<std::size_t>(u * static_cast<double>(boxes_[k]));
    cell = std::min(cell, boxes_[k] - 1);
    idx = idx * boxes_[k] + cell;
  }
  return static_cast<std::uint32_t>(idx + 1);
}

// ---------------------------------------------------------------------------

double birkhoff_average(const SystemSpec &sys, const Point &x0,
                        const ScalarField &f, double T, double dt) {
  if (T < 10.0 * dt * (1.0 - 1e-12))
    throw ContractViolation("birkhoff_average needs T >= 10 dt");
  const std::size_t n = steps_for(T, dt);
  const Rk4Stepper stepper(sys, dt);
  Point p = wrap(sys, x0);
  double sum = 0.5 * f(p);
  for (std::size_t k = 1; k <= n; ++k) {
    p = stepper.step(p);
    if (sys.space == SpaceKind::EuclideanBox && sys.box) {
      for (std::size_t i = 0; i < sys.dim; ++i)
        if (!(p[i] >= sys.box->lo[i] && p[i] <= sys.box->hi[i]))
          throw DomainEscape(dt * static_cast<double>(k),
                             "orbit escaped the box of " + sys.name);
    }
    sum += (k == n ? 0.5 : 1.0) * f(p);
  }
  return sum * dt / T;
}

namespace {

struct PointHash {
  std::size_t operator()(const Point &p) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < p.dim; ++i) {
      h ^= std::hash<double>{}(p[i]);
      h *= 1099511628211ull;
    }
    return h;
  }
};

} // namespace

EmpiricalMeasure empirical_from_orbit(const SystemSpec &sys, const Point &x0,
                                      double T, double dt, double burn_in,
                                      std::size_t thin) {
  if (!(burn_in < T))
    throw ContractViolation("burn_in must be smaller than T");
  if (thin == 0)
    throw ContractViolation("thin must be positive");
  const std::size_t n = steps_for(T, dt);
  const auto first = static_cast<std::size_t>(std::ceil(burn_in / dt - 1e-9));
  const Rk4Stepper stepper(sys, dt);

  std::vector<Point> atoms;
  std::vector<double> counts;
  std::unordered_map<Point, std::size_t, PointHash> index;
  Point p = wrap(sys, x0);
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) {
      p = stepper.step(p);
      if (sys.space == SpaceKind::EuclideanBox && sys.box)
        for (std::size_t i = 0; i < sys.dim; ++i)
          if (!(p[i] >= sys.box->lo[i] && p[i] <= sys.box->hi[i]))
            throw DomainEscape(dt * static_cast<double>(k),
                               "orbit escaped the box of " + sys.name);
    }
    if (k < first || (k - first) % thin != 0)
      continue;
    if (singular_distance(sys, p) <= 1e-9)
      continue;
    auto [it, inserted] = index.try_emplace(p, atoms.size());
    if (inserted) {
      atoms.push_back(p);
      counts.push_back(1.0);
    } else {
      counts[it->second] += 1.0;
    }
  }
  if (atoms.empty())
    throw DegenerateMeasure("orbit produced no admissible atoms");
  double total = 0.0;
  for (double c : counts)
    total += c;
  EmpiricalMeasure m;
  m.atoms = std::move(atoms);
  m.weights.reserve(counts.size());
  for (double c : counts)
    m.weights.push_back(c / total);
  return m;
}

ItineraryWord itinerary(const SystemSpec &sys, const Point &x0,
                        const GridPartition &partition, double tau,
                        std::size_t n, double dt) {
  if (n == 0)
    throw ContractViolation("itinerary length must be positive");
  if (!(tau > 0.0))
    throw ContractViolation("tau must be positive");
  const std::size_t per = steps_for(tau, dt);
  const Rk4Stepper stepper(sys, dt);
  ItineraryWord w;
  w.alphabet = partition.cell_count();
  w.symbols.reserve(n);
  Point p = wrap(sys, x0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      for (std::size_t k = 0; k < per; ++k)
        p = stepper.step(p);
      if (sys.space == SpaceKind::EuclideanBox && sys.box)
        for (std::size_t d = 0; d < sys.dim; ++d)
          if (!(p[d] >= sys.box->lo[d] && p[d] <= sys.box->hi[d]))
            throw DomainEscape(tau * static_cast<double>(i),
                               "orbit escaped the box of " + sys.name);
    }
    w.symbols.push_back(partition.label(p));
  }
  return w;
}

namespace {

struct WordHash {
  std::size_t operator()(const std::vector<std::uint32_t> &w) const noexcept {
    std::size_t h = 1469598103934665603ull;
    for (std::uint32_t s : w) {
      h ^= s;
      h *= 1099511628211ull;
    }
    return h;
  }
};

} // namespace

SmbEstimate smb_entropy(const SystemSpec &sys, const EmpiricalMeasure &measure,
                        const GridPartition &partition, double tau,
                        std::size_t n, const SmbOptions &opts) {
  measure.validate();
  if (opts.probe_count < 30)
    throw ContractViolation("smb_entropy needs at least 30 probes");
  const std::size_t m = measure.size();

  std::vector<std::vector<std::uint32_t>> words(m);
  parallel_for(m, opts.threads, [&](std::size_t i) {
    words[i] = itinerary(sys, measure.atoms[i], partition, tau, n, opts.dt).symbols;
  });

  std::unordered_map<std::vector<std::uint32_t>, double, WordHash> mass;
  std::unordered_map<std::vector<std::uint32_t>, std::size_t, WordHash> count;
  mass.reserve(m);
  count.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    mass[words[i]] += measure.weights[i];
    count[words[i]] += 1;
  }

  SmbEstimate est;
  est.distinct_classes = mass.size();
  // evenly spaced probes; all atoms when there are fewer than requested
  const std::size_t probes = std::min(opts.probe_count, m);
  double weighted = 0.0, wsum = 0.0;
  std::size_t low = 0;
  for (std::size_t k = 0; k < probes; ++k) {
    const std::size_t i = (k * m) / probes;
    const double cls = mass[words[i]];
    if (!(cls > 0.0)) {
      ++est.excluded;
      continue;
    }
    if (count[words[i]] < 5)
      ++low;
    const double w = measure.weights[i];
    weighted += w * (-std::log(cls) / (static_cast<double>(n) * tau));
    wsum += w;
  }
  est.probes = probes;
  if (wsum <= 0.0)
    throw EstimationFailure("every SMB probe fell in a zero-mass class");
  est.entropy = weighted / wsum;
  est.low_count_fraction =
      static_cast<double>(low) / static_cast<double>(probes - est.excluded);

  double log_speed = 0.0, log_w = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = norm(evaluate_field(sys, measure.atoms[i]));
    if (v < 1e-6) {
      ++est.slow_atoms;
      continue;
    }
    log_speed += measure.weights[i] * std::log(v);
    log_w += measure.weights[i];
  }
  est.mean_log_speed = log_w > 0.0 ? log_speed / log_w : 0.0;
  return est;
}

// ---------------------------------------------------------------------------

double hamming_rho(const ItineraryWord &w, const ItineraryWord &v) {
  if (w.length() != v.length() || w.alphabet != v.alphabet)
    throw ContractViolation("hamming_rho: words differ in length or alphabet");
  if (w.length() == 0)
    throw ContractViolation("hamming_rho: empty words");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < w.length(); ++i)
    mismatches += w.symbols[i] != v.symbols[i];
  return static_cast<double>(mismatches) / static_cast<double>(w.length());
}

namespace {

std::size_t radius_terms(std::size_t n, double r) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * r + 1e-9));
}

// C(n,k) (N-1)^k summed exactly; nullopt on 64-bit overflow.
std::optional<std::uint64_t> exact_ball(std::size_t N, std::size_t n,
                                        std::size_t kmax) {
  unsigned __int128 total = 0;
  unsigned __int128 binom = 1;
  unsigned __int128 power = 1;
  constexpr unsigned __int128 cap = std::numeric_limits<std::uint64_t>::max();
  for (std::size_t k = 0; k <= kmax; ++k) {
    if (k > 0) {
      binom = binom * (n - k + 1) / k;
      power *= (N - 1);
    }
    if (binom > cap || power > cap)
      return std::nullopt;
    const unsigned __int128 term = binom * power;
    if (term > cap)
      return std::nullopt;
    total += term;
    if (total > cap)
      return std::nullopt;
  }
  return static_cast<std::uint64_t>(total);
}

} // namespace

HammingCount hamming_ball_count(std::size_t N, std::size_t n, double r) {
  if (N < 3)
    throw ContractViolation("hamming_ball_count needs N >= 3");
  if (n == 0)
    throw ContractViolation("hamming_ball_count needs n >= 1");
  if (!(r >= 0.0 && r <= 1.0))
    throw ContractViolation("hamming_ball_count needs r in [0,1]");
  const std::size_t kmax = std::min(radius_terms(n, r), n);
  const double log_nm1 = std::log(static_cast<double>(N - 1));
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  std::vector<double> terms(kmax + 1);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= kmax; ++k) {
    const double kd = static_cast<double>(k);
    terms[k] = lg_n1 - std::lgamma(kd + 1.0) -
               std::lgamma(static_cast<double>(n - k) + 1.0) + kd * log_nm1;
    top = std::max(top, terms[k]);
  }
  double acc = 0.0;
  for (double t : terms)
    acc += std::exp(t - top);
  HammingCount out;
  out.log_count = top + std::log(acc);
  out.exact = exact_ball(N, n, kmax);
  if (out.exact)
    out.log_count = std::log(static_cast<double>(*out.exact));
  return out;
}

double hamming_ball_rate(std::size_t N, double r) {
  if (N < 3)
    throw RangeError("hamming_ball_rate needs N >= 3");
  const double limit = static_cast<double>(N - 2) / static_cast<double>(N);
  if (!(r >= 0.0 && r < limit)) {
    std::ostringstream os;
    os << "hamming_ball_rate: r=" << r << " outside [0, " << limit << ")";
    throw RangeError(os.str());
  }
  if (r == 0.0)
    return 0.0;
  return r * std::log(static_cast<double>(N - 1)) - r * std::log(r) -
         (1.0 - r) * std::log(1.0 - r);
}

} // namespace singflow
