#include "singflow/cli.hpp"

#include "singflow/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace singflow::cli {

using nlohmann::json;

namespace {

std::size_t line_at_byte(const std::string &text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(byte), '\n'));
}

class Reader {
public:
  Reader(const std::string &text, const std::string &source)
      : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string &key, const std::string &msg) const {
    const std::size_t line = line_of_key(text_, key);
    std::ostringstream os;
    os << source_ << ":" << line << ": " << key << ": " << msg;
    throw ConfigError(line, os.str());
  }

  void check_keys(const json &obj, const std::string &where,
                  std::initializer_list<const char *> allowed) const {
    if (!obj.is_object())
      fail(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char *a : allowed)
        ok = ok || it.key() == a;
      if (!ok)
        fail(it.key(), "unknown key");
    }
  }

  double number(const json &obj, const char *key, double fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_number())
      fail(key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
      fail(key, "must be finite");
    return d;
  }

  std::size_t count(const json &obj, const char *key, std::size_t fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_number_unsigned())
      fail(key, "expected a nonnegative integer");
    return v.get<std::size_t>();
  }

  std::string string(const json &obj, const char *key,
                     const std::string &fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_string())
      fail(key, "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const json &obj, const char *key,
                              std::vector<double> fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_array())
      fail(key, "expected an array of numbers");
    std::vector<double> out;
    for (const json &e : v) {
      if (!e.is_number())
        fail(key, "expected an array of numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back()))
        fail(key, "entries must be finite");
    }
    return out;
  }

  std::vector<std::size_t> counts(const json &obj, const char *key,
                                  std::vector<std::size_t> fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_array())
      fail(key, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const json &e : v) {
      if (!e.is_number_unsigned())
        fail(key, "expected an array of nonnegative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::vector<std::string> strings(const json &obj, const char *key,
                                   std::vector<std::string> fallback) const {
    if (!obj.contains(key))
      return fallback;
    const json &v = obj.at(key);
    if (!v.is_array())
      fail(key, "expected an array of strings");
    std::vector<std::string> out;
    for (const json &e : v) {
      if (!e.is_string())
        fail(key, "expected an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  void increasing(const std::string &key, const std::vector<double> &g,
                  bool positive) const {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (positive && !(g[i] > 0.0))
        fail(key, "entries must be positive");
      if (i > 0 && !(g[i] > g[i - 1]))
        fail(key, "must be strictly increasing");
    }
  }

  void nonempty_if_present(const json &obj, const char *key,
                           const std::vector<double> &g) const {
    if (obj.contains(key) && g.empty())
      fail(key, "must not be empty");
  }

private:
  const std::string &text_;
  const std::string &source_;
};

MeasureConfig read_measure(const Reader &r, const json &j) {
  r.check_keys(j, "measure",
               {"source", "x0", "count", "T", "burn_in", "thin", "seed"});
  MeasureConfig m;
  m.source = r.string(j, "source", m.source);
  if (m.source != "uniform" && m.source != "orbit" && m.source != "atom")
    r.fail("source", "expected uniform, orbit or atom");
  m.x0 = r.numbers(j, "x0", {});
  m.count = r.count(j, "count", m.count);
  m.T = r.number(j, "T", m.T);
  m.burn_in = r.number(j, "burn_in", m.burn_in);
  m.thin = r.count(j, "thin", m.thin);
  m.seed = r.count(j, "seed", m.seed);
  if (m.source == "uniform" && m.count == 0)
    r.fail("count", "must be positive");
  if (m.source != "uniform" && m.x0.empty())
    r.fail("x0", "required for orbit and atom measures");
  if (m.source == "orbit" && (!(m.T > 0.0) || m.thin == 0 || m.burn_in < 0.0))
    r.fail("T", "orbit measure needs T > 0, thin > 0, burn_in >= 0");
  return m;
}

} // namespace

std::size_t line_of_key(const std::string &text, const std::string &key) {
  const std::string quoted = "\"" + key + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string::npos)
    return 0;
  return line_at_byte(text, pos);
}

const std::vector<std::string> &command_names() {
  static const std::vector<std::string> names{
      "estimate-metric",    "estimate-topo",        "verify-katok",
      "verify-equivalence", "verify-sandwich",      "verify-variational",
      "verify-combinatorics", "gamma"};
  return names;
}

RunConfig parse_config(const std::string &text, const std::string &source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error &e) {
    const std::size_t line = line_at_byte(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(line, source + ":" + std::to_string(line) +
                                ": malformed JSON: " + e.what());
  }
  const Reader r(text, source);
  r.check_keys(j, "config",
               {"system", "omega", "potential", "variants", "t_grid",
                "eps_grid", "deltas", "dt", "pool_size", "atom_sample",
                "cover_mode", "lambda", "b", "partition", "measure",
                "measures", "compact", "gamma", "combinatorics",
                "inclusion_pairs", "seed", "threads"});

  RunConfig c;
  c.raw = text;
  c.source = source;
  c.system = r.string(j, "system", c.system);
  if (std::find(catalog_names().begin(), catalog_names().end(), c.system) ==
      catalog_names().end())
    r.fail("system", "unknown system '" + c.system + "'");
  c.omega = r.numbers(j, "omega", {});
  if (!c.omega.empty() && c.omega.size() != 2)
    r.fail("omega", "expected two components");

  if (j.contains("potential")) {
    const json &p = j.at("potential");
    r.check_keys(p, "potential",
                 {"kind", "c", "axis", "center", "radius", "mass", "shift"});
    c.potential.kind = r.string(p, "kind", c.potential.kind);
    c.potential.c = r.number(p, "c", 0.0);
    c.potential.axis = r.count(p, "axis", 0);
    c.potential.center = r.numbers(p, "center", {});
    c.potential.radius = r.number(p, "radius", c.potential.radius);
    c.potential.mass = r.number(p, "mass", c.potential.mass);
    c.potential.shift = r.number(p, "shift", 0.0);
    const std::string &k = c.potential.kind;
    if (k != "constant" && k != "coordinate-sine" && k != "bump")
      r.fail("kind", "expected constant, coordinate-sine or bump");
    if (k == "bump" && (c.potential.center.empty() ||
                        !(c.potential.radius > 0.0 && c.potential.radius < 0.5)))
      r.fail("potential", "bump needs a center and 0 < radius < 1/2");
  }

  c.variants = r.strings(j, "variants", c.variants);
  if (c.variants.empty())
    r.fail("variants", "must not be empty");
  for (const std::string &v : c.variants) {
    try {
      parse_variant(v);
    } catch (const std::exception &) {
      r.fail("variants", "unknown variant '" + v + "'");
    }
  }

  c.dt = r.number(j, "dt", c.dt);
  if (!(c.dt > 0.0))
    r.fail("dt", "must be positive");

  c.t_grid = r.numbers(j, "t_grid", {});
  r.nonempty_if_present(j, "t_grid", c.t_grid);
  r.increasing("t_grid", c.t_grid, true);
  for (double t : c.t_grid) {
    const double k = t / c.dt;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k) || t < c.dt)
      r.fail("t_grid", "dt must divide every t");
  }
  c.eps_grid = r.numbers(j, "eps_grid", {});
  r.nonempty_if_present(j, "eps_grid", c.eps_grid);
  r.increasing("eps_grid", c.eps_grid, true);
  c.deltas = r.numbers(j, "deltas", c.deltas);
  if (c.deltas.empty())
    r.fail("deltas", "must not be empty");
  for (double d : c.deltas)
    if (!(d > 0.0 && d < 1.0))
      r.fail("deltas", "entries must lie in (0, 1)");
  if (std::set<double>(c.deltas.begin(), c.deltas.end()).size() != c.deltas.size())
    r.fail("deltas", "entries must be distinct");

  c.pool_size = r.count(j, "pool_size", c.pool_size);
  if (c.pool_size == 0)
    r.fail("pool_size", "must be positive");
  c.atom_sample = r.count(j, "atom_sample", 0);
  c.cover_mode = r.string(j, "cover_mode", c.cover_mode);
  if (c.cover_mode != "greedy" && c.cover_mode != "exact")
    r.fail("cover_mode", "expected greedy or exact");
  c.lambda = r.number(j, "lambda", c.lambda);
  if (!(c.lambda > 0.0 && c.lambda < 1.0))
    r.fail("lambda", "must lie in (0, 1)");
  c.b = r.number(j, "b", 0.0);
  if (c.b < 0.0)
    r.fail("b", "must be nonnegative");

  if (j.contains("partition")) {
    const json &p = j.at("partition");
    r.check_keys(p, "partition", {"boxes", "tau", "n", "probes"});
    c.partition.boxes = r.counts(p, "boxes", {});
    c.partition.tau = r.number(p, "tau", c.partition.tau);
    c.partition.n = r.count(p, "n", c.partition.n);
    c.partition.probes = r.count(p, "probes", c.partition.probes);
    if (!(c.partition.tau > 0.0))
      r.fail("tau", "must be positive");
    if (c.partition.n == 0)
      r.fail("n", "must be positive");
  }
  if (j.contains("measure"))
    c.measure = read_measure(r, j.at("measure"));
  if (j.contains("measures")) {
    if (!j.at("measures").is_array())
      r.fail("measures", "expected an array");
    for (const json &m : j.at("measures"))
      c.measures.push_back(read_measure(r, m));
  }
  if (j.contains("compact")) {
    const json &k = j.at("compact");
    r.check_keys(k, "compact", {"rho_sing", "max_points", "source", "source_points", "seed"});
    c.compact.rho_sing = r.number(k, "rho_sing", c.compact.rho_sing);
    c.compact.max_points = r.counts(k, "max_points", c.compact.max_points);
    c.compact.source = r.string(k, "source", c.compact.source);
    if (c.compact.source != "uniform" && c.compact.source != "measure")
      r.fail("source", "expected uniform or measure");
    c.compact.source_points = r.count(k, "source_points", c.compact.source_points);
    c.compact.seed = r.count(k, "seed", c.compact.seed);
    if (!(c.compact.rho_sing > 0.0))
      r.fail("rho_sing", "must be positive");
    if (c.compact.max_points.empty() ||
        std::count(c.compact.max_points.begin(), c.compact.max_points.end(), 0u))
      r.fail("max_points", "entries must be positive");
  }
  if (j.contains("gamma")) {
    const json &g = j.at("gamma");
    r.check_keys(g, "gamma",
                 {"variant", "t_grid", "eps", "pair_samples", "perturbations",
                  "min_singular_distance"});
    c.gamma.variant = r.string(g, "variant", c.gamma.variant);
    if (c.gamma.variant != "R2" && c.gamma.variant != "R3")
      r.fail("variant", "gamma supports R2 or R3");
    c.gamma.t_grid = r.numbers(g, "t_grid", c.gamma.t_grid);
    if (c.gamma.t_grid.empty())
      r.fail("t_grid", "must not be empty");
    r.increasing("t_grid", c.gamma.t_grid, true);
    c.gamma.eps = r.number(g, "eps", c.gamma.eps);
    c.gamma.pair_samples = r.count(g, "pair_samples", c.gamma.pair_samples);
    c.gamma.perturbations = r.count(g, "perturbations", c.gamma.perturbations);
    c.gamma.min_singular_distance =
        r.number(g, "min_singular_distance", c.gamma.min_singular_distance);
    if (!(c.gamma.eps > 0.0))
      r.fail("eps", "must be positive");
    if (c.gamma.pair_samples < 50)
      r.fail("pair_samples", "must be at least 50");
  }
  if (j.contains("combinatorics")) {
    const json &k = j.at("combinatorics");
    r.check_keys(k, "combinatorics",
                 {"alphabet", "n_max", "radii", "rate_lengths", "rate_radii"});
    auto &cb = c.combinatorics;
    cb.alphabet = r.counts(k, "alphabet", cb.alphabet);
    cb.n_max = r.count(k, "n_max", cb.n_max);
    cb.radii = r.numbers(k, "radii", cb.radii);
    cb.rate_lengths = r.counts(k, "rate_lengths", cb.rate_lengths);
    cb.rate_radii = r.numbers(k, "rate_radii", cb.rate_radii);
    for (std::size_t N : cb.alphabet)
      if (N < 3)
        r.fail("alphabet", "entries must be at least 3");
    if (cb.n_max == 0 || cb.n_max > 12)
      r.fail("n_max", "must lie in [1, 12] for enumeration");
    for (double x : cb.radii)
      if (!(x >= 0.0 && x <= 1.0))
        r.fail("radii", "entries must lie in [0, 1]");
  }
  c.inclusion_pairs = r.count(j, "inclusion_pairs", c.inclusion_pairs);
  c.seed = r.count(j, "seed", c.seed);
  c.threads = r.count(j, "threads", 0);
  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError(0, path.string() + ": cannot open config file");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

void validate_for(const std::string &command, const RunConfig &cfg) {
  const Reader r(cfg.raw, cfg.source);
  auto need_grids = [&] {
    if (cfg.t_grid.empty())
      r.fail("t_grid", "must not be empty");
    if (cfg.eps_grid.empty())
      r.fail("eps_grid", "must not be empty");
  };
  if (std::find(command_names().begin(), command_names().end(), command) ==
      command_names().end())
    throw ConfigError(0, "unknown command '" + command + "'");
  if (command == "verify-combinatorics")
    return;
  Benchmark b;
  try {
    b = build_system(cfg);
  } catch (const ContractViolation &e) {
    r.fail("system", e.what());
  }
  if (b.sys.lipschitz_hint && cfg.dt * *b.sys.lipschitz_hint >= 0.1) {
    std::ostringstream os;
    os << "too large for " << b.sys.name << " (need dt * " << *b.sys.lipschitz_hint
       << " < 0.1)";
    r.fail("dt", os.str());
  }
  if (command == "gamma") {
    for (double t : cfg.gamma.t_grid) {
      const double k = t / cfg.dt;
      if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k))
        r.fail("t_grid", "dt must divide every gamma t");
    }
    return;
  }
  need_grids();
  if (command == "verify-katok" && cfg.eps_grid.size() != 1)
    r.fail("eps_grid", "verify-katok takes a single eps");
  if (command == "verify-sandwich" && cfg.t_grid.size() != 1)
    r.fail("t_grid", "verify-sandwich takes a single t");
}

Benchmark build_system(const RunConfig &cfg) {
  return make_benchmark(cfg.system, cfg.omega);
}

PotentialSpec build_potential(const RunConfig &cfg, const SystemSpec &sys) {
  const PotentialConfig &p = cfg.potential;
  PotentialSpec f;
  if (p.kind == "constant") {
    f = constant_potential(p.c);
  } else if (p.kind == "coordinate-sine") {
    if (p.axis >= sys.dim)
      throw ConfigError(line_of_key(cfg.raw, "axis"),
                        cfg.source + ": axis out of range for " + sys.name);
    f = coordinate_sine_potential(p.axis);
  } else {
    if (p.center.size() != sys.dim)
      throw ConfigError(line_of_key(cfg.raw, "center"),
                        cfg.source + ": bump center dimension mismatch");
    f = bump_potential(sys, Point(std::span<const double>(p.center)), p.radius,
                       p.mass);
  }
  return p.shift == 0.0 ? f : shifted(f, p.shift);
}

EmpiricalMeasure build_measure(const MeasureConfig &m, const RunConfig &cfg,
                               const SystemSpec &sys) {
  if (m.source != "uniform" && m.x0.size() != sys.dim)
    throw ConfigError(line_of_key(cfg.raw, "x0"),
                      cfg.source + ": x0 dimension mismatch");
  if (m.source == "atom")
    return EmpiricalMeasure::uniform({Point(std::span<const double>(m.x0))});
  if (m.source == "orbit")
    return empirical_from_orbit(sys, Point(std::span<const double>(m.x0)), m.T,
                                cfg.dt, m.burn_in, m.thin);
  std::mt19937_64 rng(m.seed);
  std::vector<Point> atoms;
  atoms.reserve(m.count);
  while (atoms.size() < m.count) {
    const Point p = uniform_point(sys, rng);
    if (singular_distance(sys, p) > 1e-9)
      atoms.push_back(p);
  }
  return EmpiricalMeasure::uniform(std::move(atoms));
}

std::vector<CompactSample> build_family(const RunConfig &cfg,
                                        const SystemSpec &sys) {
  std::vector<Point> source;
  if (cfg.compact.source == "measure") {
    const EmpiricalMeasure mu = build_measure(cfg.measure, cfg, sys);
    const std::size_t count = std::min(mu.atoms.size(), cfg.compact.source_points);
    source = subsample_measure(mu, count).atoms;
  } else {
    std::mt19937_64 rng(cfg.compact.seed);
    source.reserve(cfg.compact.source_points);
    for (std::size_t i = 0; i < cfg.compact.source_points; ++i)
      source.push_back(uniform_point(sys, rng));
  }
  std::vector<CompactSample> family;
  for (std::size_t mp : cfg.compact.max_points)
    family.push_back(build_compact_sample(sys, source, cfg.compact.rho_sing, mp));
  return family;
}

std::string config_hash(const std::string &text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double v) {
  if (!std::isfinite(v))
    throw EstimationFailure("non-finite value reached the output");
  if (v == 0.0)
    return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pressure_csv(const PressureTable &table) {
  std::string out = "variant,t,eps,delta,value,method,K_id,fill_radius\n";
  for (const PressureRow &row : table.rows) {
    out += to_string(row.variant);
    out += ',' + format_number(row.t);
    out += ',' + format_number(row.eps);
    out += ',' + format_number(row.delta);
    out += ',' + format_number(row.value);
    out += ',' + row.method;
    out += ',' + std::to_string(row.k_id);
    out += ',' + format_number(row.fill_radius);
    out += '\n';
  }
  return out;
}

} // namespace singflow::cli
