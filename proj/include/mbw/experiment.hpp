#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mbw/config.hpp"
#include "mbw/evolution.hpp"
#include "mbw/initial_state.hpp"
#include "mbw/observables.hpp"
#include "mbw/potential.hpp"
#include "mbw/wigner_kernel.hpp"

namespace mbw {

struct PotentialSpec {
  std::string kind = "zero";  // zero | gaussian_barrier
  double height = 0.3;        // eV
  double center = 25.0;       // nm
  double width = 1.0;         // nm

  Potential build(int bodies) const;
};

struct ExperimentPreset {
  std::string name = "custom";
  std::string initial = "entangled_pair";  // entangled_pair | ferry_pair
  EntangledParams entangled;
  FerryPairParams ferry;
  std::string noise = "none";  // none | noise_strong | noise_weak | custom
  SimConfig cfg;
  std::vector<double> snapshot_times;  // fs
  std::size_t particles = 500'000;
  ReduceBody reduce_body = ReduceBody::both;
  PotentialSpec potential;
  KernelOptions kernel;
  std::optional<std::filesystem::path> kernel_cache;
  std::optional<double> momentum_step;  // only checked against hbar * pi / L_C
};

const std::vector<std::string>& preset_names();
/// Throws ConfigError for unknown names.
ExperimentPreset builtin_preset(const std::string& name);
/// noise_strong (0.02, 0.15), noise_weak (0.01, 0.05), none.
DissipationParams noise_preset(const std::string& name);

/// INI file with sections run / geometry / initial / dissipation / potential /
/// reduce / kernel. `run.preset` selects a base preset that the other keys
/// override. Throws ConfigError on unreadable or unparseable input and on
/// unknown keys or malformed values.
ExperimentPreset load_config(const std::filesystem::path& path);
ExperimentPreset parse_config(std::istream& is);

/// Every violated invariant of the preset; empty when valid.
std::vector<std::string> validate_preset(const ExperimentPreset& p);
/// load_config + validate_preset.
std::vector<std::string> validate_config(const std::filesystem::path& path);

struct MetricSample {
  double t = 0.0;
  double nu = 0.0;
  double amplitude = 0.0;
  std::size_t particles = 0;
};

struct SimulationOptions {
  int threads = 1;
  std::ostream* progress = nullptr;
  std::size_t particle_cap = 50'000'000;
  std::size_t descendant_cap = 1'000'000;
};

struct SimulationResult {
  std::vector<MetricSample> metrics;  // t = 0, then one per epoch
  std::vector<EpochReport> epochs;
  std::vector<ReducedDistribution> snapshots;
  EnsembleCounters counters;
  std::size_t seeded = 0;
  double normalization = 0.0;
  Ensemble final_state;
};

/// Seeds, evolves and observes one preset in memory. Throws ConfigError for an
/// invalid preset and RuntimeAbort when a cap is exceeded.
SimulationResult simulate(const ExperimentPreset& p, const SimulationOptions& opt = {});

/// simulate() plus snapshot files, metrics.log and report.json in out_dir.
/// Output bytes depend only on the preset (including its seed).
SimulationResult run_experiment(const ExperimentPreset& p, const std::filesystem::path& out_dir,
                                const SimulationOptions& opt = {});

std::string snapshot_file_name(double t);

}  // namespace mbw
