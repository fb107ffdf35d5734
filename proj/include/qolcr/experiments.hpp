#pragma once

// Monte Carlo studies over the full simulate -> calibrate -> measure pipeline.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qolcr/config.hpp"
#include "qolcr/measure.hpp"

namespace qolcr {

struct PipelineSeeds {
  std::uint64_t stage = 0;
  std::uint64_t noise = 0;
};

struct PipelineResult {
  ScanTrace trace;
  CalibrationMap map;
  CalibrationQuality quality;
  CalibratedRecord record;
  MeasurementReport report;
};

struct CalibrationResult {
  CalibrationMap map;
  CalibrationQuality quality;
  CalibratedRecord record;
};

/// TPI extraction, phase unwrapping, position map and resampled record.
CalibrationResult calibrate_trace(const ScanTrace& trace, const PipelineOptions& options);

/// Autocorrelation of a calibrated record and separation estimates.
MeasurementReport measure_record(const CalibratedRecord& record, const PipelineOptions& options,
                                 std::size_t expected_peaks, double refinement_seed_offset = 0.0);

/// Calibration and measurement of an existing trace.
PipelineResult process_trace(ScanTrace trace, const PipelineOptions& options, std::size_t expected_peaks,
                             double refinement_seed_offset = 0.0);

/// One full pipeline pass for `sample` with the given seeds.
PipelineResult run_pipeline(const RunConfig& config, const Sample& sample, const PipelineSeeds& seeds,
                            double refinement_seed_offset = 0.0);

/// Outcome of one run in a batch.
struct RunOutcome {
  std::size_t index = 0;
  PipelineSeeds seeds;
  bool ok = false;
  double separation = 0.0;  ///< m, outermost surface pair
  double uncertainty = 0.0;
  bool outlier = false;
  bool forced = false;  ///< refinement seed deliberately shifted
  std::string error;
};

struct Summary {
  std::size_t n_runs = 0;
  std::size_t included = 0;
  std::size_t outliers = 0;
  std::size_t failed = 0;
  double mean = 0.0;
  double std_dev = 0.0;  ///< sample convention, n - 1
  double min = 0.0;
  double max = 0.0;
};

/// Statistics over non-flagged, successful runs.
Summary summarize(std::span<const RunOutcome> runs);

struct RepeatabilityResult {
  std::size_t n_runs = 0;
  std::vector<RunOutcome> runs;
  double std_dev = 0.0;  ///< m, outliers excluded
  std::size_t outlier_count = 0;
  Summary summary;
};

/// n_runs independent pipeline runs with seeds derived from
/// config.experiments.seed; runs listed in forced_outlier_runs get their
/// carrier-refinement seed shifted by lambda0/2.
RepeatabilityResult repeatability_experiment(const RunConfig& config, std::size_t n_runs);

struct LinearityResult {
  double step_size = 0.0;
  std::vector<double> commanded_positions;   ///< k * step
  std::vector<double> measured_separations;  ///< NaN for failed runs
  std::vector<double> deviations;            ///< measured - (measured_0 + commanded)
  double max_abs_deviation = 0.0;             ///< NaN when any step failed
  std::vector<RunOutcome> runs;
};

/// Moves surface config.experiments.moving_surface by k * step, k = 0..n_steps-1.
LinearityResult linearity_experiment(const RunConfig& config, double step, std::size_t n_steps);

nlohmann::ordered_json summary_to_json(const Summary& summary);
nlohmann::ordered_json to_json(const RepeatabilityResult& result);
nlohmann::ordered_json to_json(const LinearityResult& result);
nlohmann::ordered_json to_json(const MeasurementReport& report);

}  // namespace qolcr
