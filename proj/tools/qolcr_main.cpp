// qolcr: simulate scans, self-calibrate them and measure surface separations.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qolcr/config.hpp"
#include "qolcr/errors.hpp"
#include "qolcr/experiments.hpp"
#include "qolcr/trace_io.hpp"

namespace {

using namespace qolcr;

enum ExitCode : int { kOk = 0, kUsage = 1, kQuality = 2, kIo = 3 };

struct Args {
  std::string config;
  std::string output;
  std::string input;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<double> step_size_nm;
  std::optional<std::size_t> runs;
  std::optional<std::size_t> expected_peaks;
  std::optional<double> grid_step_nm;
};

RunConfig config_for(const Args& a) {
  auto c = a.config.empty() ? default_config() : load_config(a.config);
  validate(c);
  return c;
}

std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const Args& a) {
  auto c = config_for(a);
  if (a.seed) {
    c.stage.seed = derive_seed(*a.seed, 0, 0);
    c.noise.seed = derive_seed(*a.seed, 0, 1);
  }
  const auto trace = simulate_scan(c.sample(), c.spectrum(), c.pump(), c.stage, c.noise, c.scan, c.amplitudes,
                                   c.pipeline.min_margin_coherence_lengths);
  write_trace(a.output, trace);
  std::printf("samples %zu\nrange_um %s %s\nstage_seed %llu\nnoise_seed %llu\nwrote %s\n", trace.size(),
              format_double(trace.reported_d.front() * 1e6).c_str(),
              format_double(trace.reported_d.back() * 1e6).c_str(),
              static_cast<unsigned long long>(c.stage.seed), static_cast<unsigned long long>(c.noise.seed),
              a.output.c_str());
  return kOk;
}

int cmd_calibrate(const Args& a) {
  auto c = config_for(a);
  if (a.grid_step_nm) c.pipeline.grid_step = *a.grid_step_nm / 1e9;
  const auto trace = read_trace(a.input);
  const auto cal = calibrate_trace(trace, c.pipeline);
  const std::string table = a.output + ".calib.txt";
  const std::string record = a.output + ".record.txt";
  write_text_atomic(table, format_calibration_table(trace, cal.map));
  write_record(record, cal.record);
  std::printf("knots %zu\nedge_samples %zu\nlow_amplitude_fraction %s\nslope %s\nrecord_samples %zu\nwrote %s\nwrote %s\n",
              cal.map.reported_knots().size(), cal.quality.edge_samples,
              format_double(cal.quality.low_amplitude_fraction).c_str(), format_double(cal.quality.slope).c_str(),
              cal.record.size(), table.c_str(), record.c_str());
  return kOk;
}

int cmd_measure(const Args& a) {
  const auto c = config_for(a);
  const auto record = read_record(a.input);
  const std::size_t expected = a.expected_peaks.value_or(1);
  const auto report = measure_record(record, c.pipeline, expected);
  const auto doc = dump(to_json(report));
  if (a.output.empty()) {
    std::cout << doc;
  } else {
    write_text_atomic(a.output, doc);
    for (const auto& p : report.separations) {
      std::printf("separation_um %s outlier %d\n", format_double(p.separation * 1e6).c_str(), p.outlier_flag ? 1 : 0);
    }
  }
  return kOk;
}

int cmd_repeat(const Args& a) {
  auto c = config_for(a);
  if (a.seed) c.experiments.seed = *a.seed;
  const std::size_t runs = a.runs.value_or(c.experiments.runs);
  if (runs < 2) throw ConfigError("--runs: at least two runs are required");
  const auto result = repeatability_experiment(c, runs);
  std::string dat = "# index separation_um outlier ok\n";
  for (const auto& r : result.runs) {
    dat += std::to_string(r.index) + ' ' + format_double(r.ok ? r.separation * 1e6 : std::nan("")) + ' ' +
           (r.outlier ? '1' : '0') + ' ' + (r.ok ? '1' : '0') + '\n';
  }
  write_text_atomic(a.output + ".json", dump(to_json(result)));
  write_text_atomic(a.output + ".dat", dat);
  const auto& s = result.summary;
  std::printf("runs %zu included %zu outliers %zu failed %zu\nmean_um %s\nstd_dev_nm %s\n", s.n_runs, s.included,
              s.outliers, s.failed, format_double(s.mean * 1e6).c_str(), format_double(s.std_dev * 1e9).c_str());
  return s.included >= 2 ? kOk : kQuality;
}

int cmd_linearity(const Args& a) {
  auto c = config_for(a);
  if (a.seed) c.experiments.seed = *a.seed;
  const double step = a.step_size_nm ? *a.step_size_nm / 1e9 : c.experiments.step;
  const std::size_t steps = a.steps.value_or(c.experiments.steps);
  const auto result = linearity_experiment(c, step, steps);
  std::string dat = "# commanded_nm measured_um deviation_nm\n";
  for (std::size_t k = 0; k < result.commanded_positions.size(); ++k) {
    dat += format_double(result.commanded_positions[k] * 1e9) + ' ' +
           format_double(result.measured_separations[k] * 1e6) + ' ' + format_double(result.deviations[k] * 1e9) +
           '\n';
  }
  write_text_atomic(a.output + ".json", dump(to_json(result)));
  write_text_atomic(a.output + ".dat", dat);
  std::printf("steps %zu\nstep_nm %s\nmax_abs_deviation_nm %s\n", steps, format_double(step * 1e9).c_str(),
              format_double(result.max_abs_deviation * 1e9).c_str());
  return std::isfinite(result.max_abs_deviation) ? kOk : kQuality;
}

int cmd_print_config(const Args& a) {
  const auto doc = dump(config_to_json(config_for(a)));
  if (a.output.empty()) {
    std::cout << doc;
  } else {
    write_text_atomic(a.output, doc);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum low-coherence reflectometry simulator and analysis pipeline"};
  app.require_subcommand(1);
  Args a;

  auto* sim = app.add_subcommand("simulate", "Simulate a scan and write a trace file");
  sim->add_option("--config", a.config, "Run configuration (JSON)");
  sim->add_option("--output", a.output, "Trace file to write")->required();
  sim->add_option("--seed", a.seed, "Master seed overriding the stage and noise seeds");

  auto* cal = app.add_subcommand("calibrate", "Self-calibrate a trace");
  cal->add_option("trace", a.input, "Trace file")->required();
  cal->add_option("--output", a.output, "Output base name (.calib.txt, .record.txt)")->required();
  cal->add_option("--config", a.config, "Pipeline parameters (JSON)");
  cal->add_option("--grid-step", a.grid_step_nm, "Calibrated grid step, nm")->check(CLI::PositiveNumber);

  auto* mea = app.add_subcommand("measure", "Estimate separations from a calibrated record");
  mea->add_option("record", a.input, "Calibrated record file")->required();
  mea->add_option("--expected-peaks", a.expected_peaks, "Number of separations to report")->required();
  mea->add_option("--output", a.output, "Report file (JSON); stdout when omitted");
  mea->add_option("--config", a.config, "Pipeline parameters (JSON)");

  auto* rep = app.add_subcommand("repeat", "Repeatability study");
  rep->add_option("--config", a.config, "Run configuration (JSON)");
  rep->add_option("--runs", a.runs, "Number of runs");
  rep->add_option("--seed", a.seed, "Master seed");
  rep->add_option("--output", a.output, "Output base name (.json, .dat)")->required();

  auto* lin = app.add_subcommand("linearity", "Linearity sweep");
  lin->add_option("--config", a.config, "Run configuration (JSON)");
  lin->add_option("--steps", a.steps, "Number of positions");
  lin->add_option("--step-size", a.step_size_nm, "Step, nm")->check(CLI::PositiveNumber);
  lin->add_option("--seed", a.seed, "Master seed");
  lin->add_option("--output", a.output, "Output base name (.json, .dat)")->required();

  auto* pc = app.add_subcommand("print-config", "Print the effective configuration");
  pc->add_option("--config", a.config, "Run configuration (JSON)");
  pc->add_option("--output", a.output, "File to write; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(a);
    if (*cal) return cmd_calibrate(a);
    if (*mea) return cmd_measure(a);
    if (*rep) return cmd_repeat(a);
    if (*lin) return cmd_linearity(a);
    if (*pc) return cmd_print_config(a);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const QualityError& e) {
    std::cerr << "quality failure: " << e.what() << "\n";
    return kQuality;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
