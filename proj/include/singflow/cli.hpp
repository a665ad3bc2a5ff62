#pragma once

#include "singflow/ergodic.hpp"
#include "singflow/pressure_metric.hpp"
#include "singflow/pressure_topo.hpp"
#include "singflow/systems.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace singflow::cli {

inline constexpr const char *kToolVersion = "0.3.0";

/// Invalid configuration. `line` is 1-based, 0 when unknown.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::size_t line, const std::string &what)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct PotentialConfig {
  std::string kind = "constant"; // constant | coordinate-sine | bump
  double c = 0.0;
  std::size_t axis = 0;
  std::vector<double> center;
  double radius = 0.1;
  double mass = 1.0;
  double shift = 0.0;
};

struct MeasureConfig {
  std::string source = "uniform"; // uniform | orbit | atom
  std::vector<double> x0;
  std::size_t count = 400;
  double T = 100.0;
  double burn_in = 0.0;
  std::size_t thin = 10;
  std::uint64_t seed = 1;
};

struct PartitionConfig {
  std::vector<std::size_t> boxes; // one entry means the same count per axis
  double tau = 1.0;
  std::size_t n = 10;
  std::size_t probes = 1000;
};

struct CompactConfig {
  double rho_sing = 0.05;
  /// One compact sample per entry, each thinned to that many points.
  std::vector<std::size_t> max_points{40};
  /// "uniform" draws source points in the domain; "measure" uses the atoms
  /// of the configured measure.
  std::string source = "uniform";
  std::size_t source_points = 2000;
  std::uint64_t seed = 7;
};

struct GammaConfig {
  std::string variant = "R2";
  std::vector<double> t_grid{10, 20, 40, 80};
  double eps = 0.02;
  std::size_t pair_samples = 200;
  std::size_t perturbations = 8;
  double min_singular_distance = 1e-3;
};

struct CombinatoricsConfig {
  std::vector<std::size_t> alphabet{3, 4};
  std::size_t n_max = 8;
  std::vector<double> radii{0.0, 0.25, 0.5, 0.9};
  std::vector<std::size_t> rate_lengths{4000};
  std::vector<double> rate_radii{0.1, 0.25};
};

struct RunConfig {
  std::string raw;       // config text as read
  std::string source;    // path for messages
  std::string system = "linear-torus";
  std::vector<double> omega;
  PotentialConfig potential;
  std::vector<std::string> variants{"R1"};
  std::vector<double> t_grid;
  std::vector<double> eps_grid;
  std::vector<double> deltas{0.1};
  double dt = 0.01;
  std::size_t pool_size = 400;
  std::size_t atom_sample = 0;
  std::string cover_mode = "greedy";
  double lambda = 0.5;
  double b = 0.0; // 0 means 10 dt
  PartitionConfig partition;
  MeasureConfig measure;
  std::vector<MeasureConfig> measures; // verify-variational
  CompactConfig compact;
  GammaConfig gamma;
  CombinatoricsConfig combinatorics;
  std::size_t inclusion_pairs = 200;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
};

/// Parse and validate. Throws ConfigError.
RunConfig parse_config(const std::string &text, const std::string &source);
RunConfig load_config(const std::filesystem::path &path);
/// Checks that the fields a command needs are present. Throws ConfigError.
void validate_for(const std::string &command, const RunConfig &cfg);

/// Line of the first occurrence of "key" in the raw text, 0 if absent.
std::size_t line_of_key(const std::string &text, const std::string &key);

const std::vector<std::string> &command_names();

Benchmark build_system(const RunConfig &cfg);
PotentialSpec build_potential(const RunConfig &cfg, const SystemSpec &sys);
EmpiricalMeasure build_measure(const MeasureConfig &m, const RunConfig &cfg,
                               const SystemSpec &sys);
std::vector<CompactSample> build_family(const RunConfig &cfg,
                                        const SystemSpec &sys);

/// FNV-1a of the config text, as 16 hex digits.
std::string config_hash(const std::string &text);

/// Fixed-format CSV of pressure rows:
/// variant,t,eps,delta,value,method,K_id,fill_radius
std::string pressure_csv(const PressureTable &table);
/// Shortest round-trip formatting; non-finite values throw.
std::string format_number(double v);

/// Runs a command and writes <out>/<command>.json plus CSV tables.
/// Returns the process exit status: 0 ok, 1 runtime or infeasible cover.
int run(const std::string &command, const RunConfig &cfg,
        const std::filesystem::path &out);

} // namespace singflow::cli
