#include "singflow/cli.hpp"

#include "singflow/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

namespace singflow::cli {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct Context {
  const RunConfig &cfg;
  Benchmark bench;
  PotentialSpec f;
  std::vector<BallVariant> variants;
  fs::path out;
  ordered_json bundle;
  std::vector<std::pair<std::string, std::string>> files;

  const SystemSpec &sys() const { return bench.sys; }

  void table(const std::string &name, std::string csv) {
    files.emplace_back(name, std::move(csv));
  }
};

MetricTableOptions metric_options(const RunConfig &c) {
  MetricTableOptions o;
  o.dt = c.dt;
  o.band = WarpBand{c.lambda, c.b};
  o.mode = c.cover_mode == "exact" ? CoverMode::Exact : CoverMode::Greedy;
  o.pool_size = c.pool_size;
  o.atom_sample = c.atom_sample;
  o.threads = c.threads;
  return o;
}

TopoOptions topo_options(const RunConfig &c) {
  TopoOptions o;
  o.dt = c.dt;
  o.band = WarpBand{c.lambda, c.b};
  o.threads = c.threads;
  return o;
}

GridPartition build_partition(const RunConfig &c, const SystemSpec &sys) {
  const auto &b = c.partition.boxes;
  if (b.empty())
    return GridPartition::uniform(4, sys);
  if (b.size() == 1)
    return GridPartition::uniform(b[0], sys);
  if (b.size() != sys.dim)
    throw ConfigError(line_of_key(c.raw, "boxes"),
                      c.source + ": partition boxes dimension mismatch");
  return GridPartition(b, sys);
}

ordered_json readoffs_json(const PressureTable &t) {
  ordered_json a = ordered_json::array();
  for (const Readoff &r : t.readoffs)
    a.push_back({{"variant", to_string(r.variant)},
                 {"eps", r.eps},
                 {"delta", r.delta},
                 {"method", r.method},
                 {"K_id", r.k_id},
                 {"slope", r.slope}});
  return a;
}

std::string readoffs_csv(const PressureTable &t) {
  std::string out = "variant,eps,delta,method,K_id,slope\n";
  for (const Readoff &r : t.readoffs)
    out += to_string(r.variant) + ',' + format_number(r.eps) + ',' +
           format_number(r.delta) + ',' + r.method + ',' +
           std::to_string(r.k_id) + ',' + format_number(r.slope) + '\n';
  return out;
}

ordered_json measure_json(const EmpiricalMeasure &mu) {
  return {{"atoms", mu.atoms.size()}, {"total_weight", mu.total_weight()}};
}

// ---------------------------------------------------------------------------

void cmd_estimate_metric(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const EmpiricalMeasure mu = build_measure(c.measure, c, ctx.sys());
  const PressureTable t =
      metric_pressure_table(ctx.sys(), mu, ctx.f, ctx.variants, c.t_grid,
                            c.eps_grid, c.deltas, metric_options(c));
  ctx.bundle["measure"] = measure_json(mu);
  ctx.bundle["readoffs"] = readoffs_json(t);
  ctx.table("metric.csv", pressure_csv(t));
  ctx.table("metric_readoffs.csv", readoffs_csv(t));
}

void cmd_estimate_topo(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const std::vector<CompactSample> family = build_family(c, ctx.sys());
  const PressureTable t = topo_pressure_table(
      ctx.sys(), family, ctx.f, ctx.variants, c.t_grid, c.eps_grid, topo_options(c));
  ordered_json fam = ordered_json::array();
  for (const CompactSample &K : family)
    fam.push_back({{"points", K.size()},
                   {"rho_sing", K.rho_sing},
                   {"fill_radius", K.fill_radius}});
  ctx.bundle["compact_family"] = fam;
  ctx.bundle["readoffs"] = readoffs_json(t);
  ctx.bundle["note"] = "separating values are the max of two insertion orders "
                       "and are lower bounds";
  ctx.table("topo.csv", pressure_csv(t));
  ctx.table("topo_readoffs.csv", readoffs_csv(t));
}

void cmd_verify_katok(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const EmpiricalMeasure mu = build_measure(c.measure, c, ctx.sys());
  const GridPartition part = build_partition(c, ctx.sys());
  KatokOptions o;
  o.metric = metric_options(c);
  o.smb.probe_count = c.partition.probes;
  o.smb.dt = c.dt;
  o.smb.threads = c.threads;
  o.t_grid = c.t_grid;
  o.eps = c.eps_grid.front();
  o.delta = c.deltas.front();
  o.tau = c.partition.tau;
  o.n = c.partition.n;
  const KatokReport rep =
      katok_check(ctx.sys(), mu, ctx.f, ctx.variants.front(), part, o);
  ctx.bundle["measure"] = measure_json(mu);
  ctx.bundle["katok"] = {
      {"variant", to_string(ctx.variants.front())},
      {"metric_readoff", rep.metric_readoff},
      {"smb_entropy", rep.smb.entropy},
      {"potential_average", rep.potential_average},
      {"entropy_side", rep.entropy_side},
      {"difference", rep.difference},
      {"transport_defect", rep.transport_defect},
      {"smb_probes", rep.smb.probes},
      {"smb_excluded", rep.smb.excluded},
      {"smb_low_count_fraction", rep.smb.low_count_fraction},
      {"smb_distinct_classes", rep.smb.distinct_classes},
      {"mean_log_speed", rep.smb.mean_log_speed},
      {"slow_atoms", rep.smb.slow_atoms},
      {"partition_cells", part.cell_count()},
      {"tau", o.tau},
      {"n", o.n},
      {"eps", o.eps},
      {"delta", o.delta},
      {"t_grid", o.t_grid}};
  ctx.table("metric.csv", pressure_csv(rep.table));
}

void cmd_verify_equivalence(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const EmpiricalMeasure mu = build_measure(c.measure, c, ctx.sys());
  const MetricTableOptions mo = metric_options(c);
  const PressureTable t = metric_pressure_table(
      ctx.sys(), mu, ctx.f, ctx.variants, c.t_grid, c.eps_grid, c.deltas, mo);

  // cell-wise R1 >= R2 and pairwise read-off gaps
  std::size_t order_violations = 0;
  for (const PressureRow &row : t.rows) {
    if (row.variant != BallVariant::R1)
      continue;
    const PressureRow *r2 =
        t.find(BallVariant::R2, row.t, row.eps, row.delta, row.method, row.k_id);
    if (r2 && row.value < r2->value)
      ++order_violations;
  }
  double max_gap = 0.0;
  for (const Readoff &a : t.readoffs)
    for (const Readoff &b : t.readoffs)
      if (a.eps == b.eps && a.delta == b.delta && a.method == b.method)
        max_gap = std::max(max_gap, std::abs(a.slope - b.slope));

  // inclusion check on a pool of regular atoms
  const WarpBand band = resolved_band(mo.band, c.dt);
  const double t_max = c.t_grid.back();
  const EmpiricalMeasure pool_mu =
      subsample_measure(mu, std::min(mu.atoms.size(), c.pool_size));
  const double T = c.dt * static_cast<double>(warped_extent(t_max, c.dt, band));
  std::vector<Trajectory> pool;
  for (const Point &p : pool_mu.atoms)
    pool.push_back(integrate_orbit(ctx.sys(), p, T, c.dt));
  std::string csv = "eps,t,pairs,r1_members,r2_members,r3_members,"
                    "violations_r3_in_r2,violations_r2_in_r3,r1_not_r2,"
                    "min_slack,mean_slack\n";
  ordered_json inc = ordered_json::array();
  std::size_t inclusion_violations = 0;
  for (double eps : c.eps_grid) {
    const InclusionReport r = inclusion_check_31(
        ctx.sys(), pool, eps, band, t_max, c.inclusion_pairs, c.seed);
    inclusion_violations += r.violations();
    csv += format_number(eps) + ',' + format_number(t_max) + ',' +
           std::to_string(r.pairs) + ',' + std::to_string(r.r1_members) + ',' +
           std::to_string(r.r2_members) + ',' + std::to_string(r.r3_members) +
           ',' + std::to_string(r.violations_r3_in_r2) + ',' +
           std::to_string(r.violations_r2_in_r3) + ',' +
           std::to_string(r.r1_not_r2) + ',' + format_number(r.min_slack) +
           ',' + format_number(r.mean_slack) + '\n';
    inc.push_back({{"eps", eps},
                   {"pairs", r.pairs},
                   {"violations", r.violations()},
                   {"min_slack", r.min_slack}});
  }
  ctx.bundle["measure"] = measure_json(mu);
  ctx.bundle["readoffs"] = readoffs_json(t);
  ctx.bundle["equivalence"] = {{"max_readoff_gap", max_gap},
                               {"r1_below_r2_cells", order_violations},
                               {"inclusion_violations", inclusion_violations},
                               {"inclusion", inc}};
  ctx.table("metric.csv", pressure_csv(t));
  ctx.table("metric_readoffs.csv", readoffs_csv(t));
  ctx.table("inclusion.csv", csv);
}

void cmd_verify_sandwich(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const std::vector<CompactSample> family = build_family(c, ctx.sys());
  std::string csv = "K_id,t,eps,log_n1,log_n2,log_z1,log_z2,log_z1_half,"
                    "half_separating_spans,fill_radius\n";
  ordered_json reps = ordered_json::array();
  std::size_t violations = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const SandwichReport r = sandwich_check(ctx.sys(), family[k], ctx.f,
                                            c.t_grid.front(), c.eps_grid,
                                            topo_options(c));
    violations += r.violations;
    for (const SandwichRow &row : r.rows)
      csv += std::to_string(k) + ',' + format_number(r.t) + ',' +
             format_number(row.eps) + ',' + format_number(row.log_n1) + ',' +
             format_number(row.log_n2) + ',' + format_number(row.log_z1) + ',' +
             format_number(row.log_z2) + ',' + format_number(row.log_z1_half) +
             ',' + (row.half_separating_spans ? "1" : "0") + ',' +
             format_number(family[k].fill_radius) + '\n';
    reps.push_back({{"K_id", k},
                    {"points", family[k].size()},
                    {"violations", r.violations},
                    {"min_margin", r.min_margin},
                    {"note", r.note}});
  }
  ctx.bundle["sandwich"] = {{"violations", violations}, {"per_K", reps}};
  ctx.table("sandwich.csv", csv);
}

void cmd_verify_variational(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  std::vector<EmpiricalMeasure> measures;
  for (const MeasureConfig &m : c.measures)
    measures.push_back(build_measure(m, c, ctx.sys()));
  const std::vector<CompactSample> family = build_family(c, ctx.sys());
  VariationalOptions o;
  o.topo = topo_options(c);
  o.delta = c.deltas.front();
  o.t_grid = c.t_grid;
  o.eps_grid = c.eps_grid;
  const VariationalReport rep =
      variational_gap(ctx.sys(), measures, family, ctx.f, o);
  std::string csv = "measure,t,eps,log_metric,log_topo,ok\n";
  for (const VariationalCell &cell : rep.cells)
    csv += std::to_string(cell.measure) + ',' + format_number(cell.t) + ',' +
           format_number(cell.eps) + ',' + format_number(cell.log_metric) +
           ',' + format_number(cell.log_topo) + ',' + (cell.ok ? "1" : "0") +
           '\n';
  std::string ro = "source,eps,slope\n";
  for (std::size_t m = 0; m < rep.metric_readoffs.size(); ++m)
    for (std::size_t e = 0; e < c.eps_grid.size(); ++e)
      ro += "measure" + std::to_string(m) + ',' + format_number(c.eps_grid[e]) +
            ',' + format_number(rep.metric_readoffs[m][e]) + '\n';
  for (std::size_t e = 0; e < rep.topo_readoffs.size(); ++e)
    ro += "topological," + format_number(c.eps_grid[e]) + ',' +
          format_number(rep.topo_readoffs[e]) + '\n';
  ctx.bundle["variational"] = {{"violations", rep.violations},
                               {"cells", rep.cells.size()},
                               {"metric_readoffs", rep.metric_readoffs},
                               {"topo_readoffs", rep.topo_readoffs}};
  ctx.table("variational.csv", csv);
  ctx.table("variational_readoffs.csv", ro);
}

std::uint64_t enumerate_hamming(std::size_t N, std::size_t n, double r) {
  const std::size_t kmax = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * r + 1e-9));
  std::vector<std::size_t> word(n, 0);
  std::uint64_t count = 0;
  while (true) {
    std::size_t diff = 0;
    for (std::size_t s : word)
      diff += s != 0;
    if (diff <= kmax)
      ++count;
    std::size_t i = 0;
    while (i < n && ++word[i] == N)
      word[i++] = 0;
    if (i == n)
      break;
  }
  return count;
}

void cmd_verify_combinatorics(Context &ctx) {
  const CombinatoricsConfig &cb = ctx.cfg.combinatorics;
  std::string csv = "N,n,r,exact,enumerated,log_count,match\n";
  std::size_t mismatches = 0;
  for (std::size_t N : cb.alphabet)
    for (std::size_t n = 1; n <= cb.n_max; ++n)
      for (double r : cb.radii) {
        const HammingCount h = hamming_ball_count(N, n, r);
        const std::uint64_t e = enumerate_hamming(N, n, r);
        const bool match = h.exact && *h.exact == e;
        mismatches += !match;
        csv += std::to_string(N) + ',' + std::to_string(n) + ',' +
               format_number(r) + ',' +
               (h.exact ? std::to_string(*h.exact) : std::string("")) + ',' +
               std::to_string(e) + ',' + format_number(h.log_count) + ',' +
               (match ? "1" : "0") + '\n';
      }
  std::string rates = "N,n,r,log_count_per_n,rate,abs_diff\n";
  double worst = 0.0;
  for (std::size_t N : cb.alphabet)
    for (std::size_t n : cb.rate_lengths)
      for (double r : cb.rate_radii) {
        if (!(r < static_cast<double>(N - 2) / static_cast<double>(N)))
          continue;
        const double per_n = hamming_ball_count(N, n, r).log_count /
                             static_cast<double>(n);
        const double rate = hamming_ball_rate(N, r);
        worst = std::max(worst, std::abs(per_n - rate));
        rates += std::to_string(N) + ',' + std::to_string(n) + ',' +
                 format_number(r) + ',' + format_number(per_n) + ',' +
                 format_number(rate) + ',' + format_number(std::abs(per_n - rate)) +
                 '\n';
      }
  ctx.bundle["combinatorics"] = {{"mismatches", mismatches},
                                 {"max_rate_gap", worst}};
  ctx.table("combinatorics.csv", csv);
  ctx.table("hamming_rate.csv", rates);
}

void cmd_gamma(Context &ctx) {
  const RunConfig &c = ctx.cfg;
  const GammaConfig &g = c.gamma;
  GammaOptions o;
  o.dt = c.dt;
  o.band = WarpBand{c.lambda, c.b};
  o.perturbations = g.perturbations;
  o.seed = c.seed;
  o.threads = c.threads;
  o.min_singular_distance = g.min_singular_distance;
  const BallVariant v = parse_variant(g.variant);
  std::string csv = "variant,t,eps,gamma,gamma_per_t,centers,admissible,no_pairs\n";
  ordered_json rows = ordered_json::array();
  for (double t : g.t_grid) {
    const GammaResult r =
        bounded_variation_gamma(ctx.sys(), ctx.f, v, t, g.eps, g.pair_samples, o);
    csv += to_string(v) + ',' + format_number(t) + ',' + format_number(g.eps) +
           ',' + format_number(r.gamma) + ',' + format_number(r.per_time()) +
           ',' + std::to_string(r.centers) + ',' + std::to_string(r.admissible) +
           ',' + (r.no_pairs ? "1" : "0") + '\n';
    rows.push_back({{"t", t},
                    {"gamma", r.gamma},
                    {"gamma_per_t", r.per_time()},
                    {"admissible", r.admissible},
                    {"no_pairs", r.no_pairs}});
  }
  ctx.bundle["gamma"] = rows;
  ctx.table("gamma.csv", csv);
}

void write_file(const fs::path &p, const std::string &s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out)
    throw Error("cannot write " + p.string());
  out << s;
}

} // namespace

int run(const std::string &command, const RunConfig &cfg, const fs::path &out) {
  validate_for(command, cfg);
  Context ctx{cfg, build_system(cfg), {}, {}, out, {}, {}};
  ctx.f = build_potential(cfg, ctx.sys());
  for (const std::string &v : cfg.variants)
    ctx.variants.push_back(parse_variant(v));

  ctx.bundle["command"] = command;
  ctx.bundle["provenance"] = {
      {"tool_version", kToolVersion},
      {"config_hash", config_hash(cfg.raw)},
      {"seeds",
       {{"seed", cfg.seed},
        {"measure", cfg.measure.seed},
        {"compact", cfg.compact.seed}}},
      {"config", ordered_json::parse(cfg.raw)}};
  ctx.bundle["system"] = {{"name", ctx.sys().name},
                          {"dim", ctx.sys().dim},
                          {"space", to_string(ctx.sys().space)},
                          {"singular_points", ctx.sys().singular_points.size()}};
  ctx.bundle["potential"] = ctx.f.name;

  fs::create_directories(out);
  const fs::path bundle_path = out / (command + ".json");
  try {
    if (command == "estimate-metric")
      cmd_estimate_metric(ctx);
    else if (command == "estimate-topo")
      cmd_estimate_topo(ctx);
    else if (command == "verify-katok")
      cmd_verify_katok(ctx);
    else if (command == "verify-equivalence")
      cmd_verify_equivalence(ctx);
    else if (command == "verify-sandwich")
      cmd_verify_sandwich(ctx);
    else if (command == "verify-variational")
      cmd_verify_variational(ctx);
    else if (command == "verify-combinatorics")
      cmd_verify_combinatorics(ctx);
    else
      cmd_gamma(ctx);
  } catch (const InfeasibleCover &e) {
    ctx.bundle["error"] = {{"kind", "infeasible-cover"},
                           {"message", e.what()},
                           {"max_achievable_mass", e.max_achievable_mass()}};
    write_file(bundle_path, ctx.bundle.dump(2) + "\n");
    std::cerr << "error: " << e.what()
              << " (max achievable mass " << e.max_achievable_mass() << ")\n";
    return 1;
  } catch (const ConfigError &) {
    throw;
  } catch (const std::exception &e) {
    ctx.bundle["error"] = {{"kind", "runtime"}, {"message", e.what()}};
    write_file(bundle_path, ctx.bundle.dump(2) + "\n");
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  ordered_json tables = ordered_json::array();
  for (const auto &[name, csv] : ctx.files) {
    write_file(out / name, csv);
    tables.push_back(name);
  }
  ctx.bundle["tables"] = tables;
  write_file(bundle_path, ctx.bundle.dump(2) + "\n");
  return 0;
}

} // namespace singflow::cli
