#include "qolcr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs body(i) for i in [0, n) on up to `threads` workers; results are
// written by index so the fold order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
}

RunOutcome run_one(const RunConfig& config, const Sample& sample, std::size_t index, const PipelineSeeds& seeds,
                   bool forced) {
  RunOutcome out;
  out.index = index;
  out.seeds = seeds;
  out.forced = forced;
  try {
    const double offset = forced ? 0.5 * config.lambda0 : 0.0;
    const auto result = run_pipeline(config, sample, seeds, offset);
    const auto& seps = result.report.separations;
    if (seps.empty()) throw QualityError("no separation estimated");
    const auto& outer = seps.back();
    out.ok = true;
    out.separation = outer.separation;
    out.uncertainty = outer.uncertainty;
    out.outlier = outer.outlier_flag;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

nlohmann::ordered_json run_to_json(const RunOutcome& r) {
  nlohmann::ordered_json j;
  j["index"] = r.index;
  j["stage_seed"] = r.seeds.stage;
  j["noise_seed"] = r.seeds.noise;
  j["ok"] = r.ok;
  j["separation_um"] = r.ok ? to_unit(r.separation, 1e6) : kNaN;
  j["uncertainty_nm"] = r.ok ? to_unit(r.uncertainty, 1e9) : kNaN;
  j["outlier"] = r.outlier;
  j["forced"] = r.forced;
  if (!r.ok) j["error"] = r.error;
  return j;
}

}  // namespace

CalibrationResult calibrate_trace(const ScanTrace& trace, const PipelineOptions& options) {
  const PumpReference pump(trace.metadata.lambda_p);
  const double spacing = trace.spacing();
  const auto tpi = extract_tpi(trace.coincidence, spacing, options.bandpass.resolved(pump));
  const auto phase = extract_phase(tpi, options.phase);
  auto map = build_calibration(phase, pump, trace);
  const auto quality = calibration_quality(phase, map);
  auto record = resample_intensity(trace, map, options.grid_step > 0.0 ? options.grid_step : spacing);
  return CalibrationResult{std::move(map), quality, std::move(record)};
}

MeasurementReport measure_record(const CalibratedRecord& record, const PipelineOptions& options,
                                 std::size_t expected_peaks, double refinement_seed_offset) {
  const Spectrum spectrum(record.metadata.lambda0, record.metadata.bandwidth);
  const auto acf = autocorrelate(record);
  auto measure = options.measure;
  measure.lambda0 = spectrum.lambda0();
  measure.refinement_seed_offset = refinement_seed_offset;
  auto report = estimate_separations(acf, expected_peaks, measure.resolved(spectrum.coherence_length()));
  report.metadata = record.metadata;
  return report;
}

PipelineResult process_trace(ScanTrace trace, const PipelineOptions& options, std::size_t expected_peaks,
                             double refinement_seed_offset) {
  auto cal = calibrate_trace(trace, options);
  auto report = measure_record(cal.record, options, expected_peaks, refinement_seed_offset);
  report.metadata = trace.metadata;
  report.calibration = cal.quality;
  return PipelineResult{std::move(trace), std::move(cal.map), cal.quality, std::move(cal.record), std::move(report)};
}

PipelineResult run_pipeline(const RunConfig& config, const Sample& sample, const PipelineSeeds& seeds,
                            double refinement_seed_offset) {
  auto stage = config.stage;
  stage.seed = seeds.stage;
  auto noise = config.noise;
  noise.seed = seeds.noise;
  auto trace = simulate_scan(sample, config.spectrum(), config.pump(), stage, noise, config.scan, config.amplitudes,
                             config.pipeline.min_margin_coherence_lengths);
  const auto n = sample.size();
  return process_trace(std::move(trace), config.pipeline, n * (n - 1) / 2, refinement_seed_offset);
}

Summary summarize(std::span<const RunOutcome> runs) {
  Summary s;
  s.n_runs = runs.size();
  std::vector<double> values;
  for (const auto& r : runs) {
    if (!r.ok) {
      ++s.failed;
    } else if (r.outlier) {
      ++s.outliers;
    } else {
      values.push_back(r.separation);
    }
  }
  s.included = values.size();
  if (values.empty()) {
    s.mean = s.std_dev = s.min = s.max = kNaN;
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

RepeatabilityResult repeatability_experiment(const RunConfig& config, std::size_t n_runs) {
  if (n_runs < 2) throw ConfigError("repeatability: at least two runs are required");
  const auto sample = config.sample();
  const auto& forced = config.experiments.forced_outlier_runs;

  RepeatabilityResult result;
  result.n_runs = n_runs;
  result.runs.resize(n_runs);
  parallel_for(n_runs, config.experiments.threads, [&](std::size_t i) {
    const PipelineSeeds seeds{derive_seed(config.experiments.seed, i, 0), derive_seed(config.experiments.seed, i, 1)};
    const bool is_forced = std::find(forced.begin(), forced.end(), i) != forced.end();
    result.runs[i] = run_one(config, sample, i, seeds, is_forced);
  });
  result.summary = summarize(result.runs);
  result.std_dev = result.summary.std_dev;
  result.outlier_count = result.summary.outliers;
  return result;
}

LinearityResult linearity_experiment(const RunConfig& config, double step, std::size_t n_steps) {
  if (!(step > 0.0)) throw ConfigError("linearity: step must be positive");
  if (n_steps < 2) throw ConfigError("linearity: at least two steps are required");
  const auto base = config.sample();
  const auto moving = config.experiments.moving_surface;

  LinearityResult result;
  result.step_size = step;
  result.runs.resize(n_steps);
  parallel_for(n_steps, config.experiments.threads, [&](std::size_t k) {
    const PipelineSeeds seeds{derive_seed(config.experiments.seed, k, 2), derive_seed(config.experiments.seed, k, 3)};
    try {
      const auto sample = base.with_surface_moved(moving, static_cast<double>(k) * step);
      result.runs[k] = run_one(config, sample, k, seeds, false);
    } catch (const std::exception& e) {
      result.runs[k].index = k;
      result.runs[k].seeds = seeds;
      result.runs[k].error = e.what();
    }
  });

  // Moving the first surface shrinks the separation.
  const double direction = moving == 0 && base.size() > 1 ? -1.0 : 1.0;
  const double first = result.runs[0].ok ? result.runs[0].separation : kNaN;
  for (std::size_t k = 0; k < n_steps; ++k) {
    const double commanded = static_cast<double>(k) * step;
    const double measured = result.runs[k].ok ? result.runs[k].separation : kNaN;
    const double deviation = measured - (first + direction * commanded);
    result.commanded_positions.push_back(commanded);
    result.measured_separations.push_back(measured);
    result.deviations.push_back(deviation);
    result.max_abs_deviation = std::isfinite(deviation) && std::isfinite(result.max_abs_deviation)
                                   ? std::max(result.max_abs_deviation, std::abs(deviation))
                                   : kNaN;
  }
  return result;
}

nlohmann::ordered_json summary_to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["n_runs"] = s.n_runs;
  j["included"] = s.included;
  j["outliers"] = s.outliers;
  j["failed"] = s.failed;
  j["mean_um"] = to_unit(s.mean, 1e6);
  j["std_dev_nm"] = to_unit(s.std_dev, 1e9);
  j["min_um"] = to_unit(s.min, 1e6);
  j["max_um"] = to_unit(s.max, 1e6);
  j["std_dev_convention"] = "sample (n-1), outliers and failed runs excluded";
  return j;
}

nlohmann::ordered_json to_json(const RepeatabilityResult& r) {
  nlohmann::ordered_json j;
  j["experiment"] = "repeatability";
  j["summary"] = summary_to_json(r.summary);
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : r.runs) runs.push_back(run_to_json(run));
  j["runs"] = runs;
  return j;
}

nlohmann::ordered_json to_json(const LinearityResult& r) {
  nlohmann::ordered_json j;
  j["experiment"] = "linearity";
  j["step_nm"] = to_unit(r.step_size, 1e9);
  j["max_abs_deviation_nm"] = to_unit(r.max_abs_deviation, 1e9);
  auto points = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < r.commanded_positions.size(); ++k) {
    nlohmann::ordered_json p;
    p["commanded_nm"] = to_unit(r.commanded_positions[k], 1e9);
    p["measured_um"] = to_unit(r.measured_separations[k], 1e6);
    p["deviation_nm"] = to_unit(r.deviations[k], 1e9);
    p["outlier"] = r.runs[k].outlier;
    if (!r.runs[k].ok) p["error"] = r.runs[k].error;
    points.push_back(p);
  }
  j["points"] = points;
  return j;
}

nlohmann::ordered_json to_json(const MeasurementReport& report) {
  nlohmann::ordered_json j;
  auto seps = nlohmann::ordered_json::array();
  for (const auto& p : report.separations) {
    nlohmann::ordered_json e;
    e["separation_um"] = to_unit(p.separation, 1e6);
    e["uncertainty_nm"] = to_unit(p.uncertainty, 1e9);
    e["envelope_vertex_um"] = to_unit(p.envelope_fit.vertex, 1e6);
    e["envelope_uncertainty_nm"] = to_unit(p.envelope_fit.uncertainty, 1e9);
    e["fit_window_um"] = {to_unit(p.envelope_fit.window_low, 1e6), to_unit(p.envelope_fit.window_high, 1e6)};
    e["carrier_refinement_um"] = to_unit(p.carrier_refinement, 1e6);
    e["fringe_period_nm"] = to_unit(p.fringe_period, 1e9);
    e["peak_height"] = p.peak_height;
    e["outlier"] = p.outlier_flag;
    seps.push_back(e);
  }
  j["separations"] = seps;
  j["metadata"] = {{"lambda0_nm", report.metadata.lambda0 * 1e9},
                   {"bandwidth_nm", to_unit(report.metadata.bandwidth, 1e9)},
                   {"lambda_p_nm", to_unit(report.metadata.lambda_p, 1e9)},
                   {"stage_seed", report.metadata.stage_seed},
                   {"noise_seed", report.metadata.noise_seed}};
  if (report.calibration) {
    j["calibration"] = {{"edge_samples", report.calibration->edge_samples},
                        {"low_amplitude_fraction", report.calibration->low_amplitude_fraction},
                        {"slope", report.calibration->slope}};
  }
  return j;
}

}  // namespace qolcr
