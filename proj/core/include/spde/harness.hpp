#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spde/noise.hpp"
#include "spde/regularity.hpp"
#include "spde/solvability.hpp"
#include "spde/solver.hpp"
#include "spde/toml_lite.hpp"

namespace spde {

// A fully resolved experiment: problem, discretization, runs, monitors,
// outputs.  Built from the TOML-subset config grammar (see FORMATS.md) and
// validated; the admissibility and assumption reports are recorded at load
// time so callers can refuse inadmissible runs unless forced.
struct ExperimentConfig {
  std::string name = "experiment";

  ProblemSpec problem;        // covariance, lambda, gamma, p, d
  std::string preset = "heat";
  double xi_scale = 1.0;      // multiplies the preset's noise amplitude field
  DiffusionSpec diffusion;    // lambda mirrors problem.lambda; truncation m

  GridSpec grid;
  double T = 0.01;
  double dt = 1e-4;
  int record_every = 1;

  std::string u0_kind = "bump";  // constant | bump | sine
  double u0_amplitude = 1.0;
  double u0_width = 1.0;

  int paths = 1;
  std::uint64_t seed = 1;
  int threads = 1;

  std::vector<double> thresholds;      // absolute sup-norm levels for tau
  std::vector<double> snapshot_times;
  int probe_count = 0;                 // cells probed at record cadence
  std::optional<double> bessel_gamma;

  std::string out_dir;          // empty: compute only, write nothing
  std::string format = "csv";   // monitors format: csv | json
  double epsilon = 0.05;        // regularity target offset
  double tolerance = 0.0;       // regularity verdict tolerance

  AdmissibilityReport admissibility;  // filled by load_config
  AssumptionReport assumptions;

  void validate() const;  // structural consistency (not admissibility)
};

// Initial data generator: "constant" (= amplitude), "bump"
// (amplitude * exp(-|x|^2 / (2 width^2)), centered), or "sine"
// (amplitude * (1 + sin(2 pi x_1 / L)) / 2, nonnegative).
std::vector<double> make_initial_condition(const GridSpec& g,
                                           const std::string& kind,
                                           double amplitude, double width);

// Probe cells spread evenly along the main diagonal of the grid.
std::vector<std::size_t> default_probe_cells(const GridSpec& g, int count);

ExperimentConfig config_from_toml(const TomlTable& t);
ExperimentConfig load_config(const std::string& path);

struct ManifestEntry {
  std::string name;
  std::size_t bytes = 0;
  std::string fnv1a64;  // 16 hex digits
};

struct RunManifest {
  std::string json;                    // full manifest document
  std::vector<ManifestEntry> artifacts;
};

struct ExperimentOutput {
  RunManifest manifest;
  std::vector<TrajectoryRecord> records;  // path order; empty slot = failed
  std::vector<int> failed_paths;
  int blowups = 0;
  bool mass_stat_valid = false;
  MassDriftStat mass_stat;
  std::vector<double> tau_hit_fraction;   // per threshold, over completed paths
  std::optional<RegularityReport> regularity;
};

// Runs cfg.paths independent paths (stream = path index) on cfg.threads
// workers, aggregates in path order, and writes artifacts plus manifest.json
// under cfg.out_dir (if set).  Output bytes depend only on (config, seed),
// never on the thread count; manifest timing fields are informational and
// excluded from the artifact hash list.  Throws numeric_error if every path
// fails; individual path failures are recorded and skipped otherwise.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace spde
