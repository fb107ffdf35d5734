#pragma once

// Run configuration: every model and pipeline parameter for one simulated
// measurement campaign, loadable from a JSON document. Lengths in the
// document carry their unit in the key name (_nm, _um).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qolcr/calib.hpp"
#include "qolcr/core_model.hpp"
#include "qolcr/measure.hpp"
#include "qolcr/scan_synth.hpp"

namespace qolcr {

struct PipelineOptions {
  BandpassSpec bandpass;     ///< center 0 = derived from the pump
  PhaseOptions phase;
  double grid_step = 0.0;    ///< m; 0 = reported spacing
  MeasureOptions measure;    ///< zero windows = derived from the spectrum
  double min_margin_coherence_lengths = 1.0;
};

struct ExperimentOptions {
  std::uint64_t seed = 20170101;
  std::size_t runs = 70;
  std::vector<std::size_t> forced_outlier_runs;  ///< runs whose refinement seed is shifted by lambda0/2
  double step = 5e-9;                             ///< linearity step, m
  std::size_t steps = 10;
  std::size_t moving_surface = 0;  ///< index of the surface moved in the linearity sweep
  std::size_t threads = 0;         ///< 0 = hardware concurrency
};

struct RunConfig {
  std::vector<Surface> surfaces;
  double lambda0 = 810e-9;
  double bandwidth = 30e-9;
  double power = 1.0;
  double lambda_p = 405e-9;
  double degeneracy_tolerance = 1e-6;
  StageModel stage;
  NoiseModel noise;
  InterferenceAmplitudes amplitudes;
  ScanRange scan;
  PipelineOptions pipeline;
  ExperimentOptions experiments;

  Sample sample() const { return Sample(surfaces); }
  Spectrum spectrum() const { return Spectrum(lambda0, bandwidth, power); }
  PumpReference pump() const { return PumpReference(lambda_p); }
};

/// The experimental parameter set: two surfaces 280.228 um apart in a
/// 0.3 mm scan at 500 nm/s read out at 100 Hz, 810 nm / 30 nm source,
/// 405 nm pump, moderate stage errors and Poisson noise.
RunConfig default_config();

/// Throws ConfigError with a field-qualified message on the first violation.
void validate(const RunConfig& config);

/// Unknown keys and wrong types are errors; missing keys keep defaults.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// si * per_unit as the shortest decimal that divides back to `si` exactly.
double to_unit(double si, double per_unit);

/// Independent stream seed for (master, run, stream) via std::seed_seq.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream);

}  // namespace qolcr
