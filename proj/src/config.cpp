#include "qolcr/config.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Unit divisors are exact doubles, so value / divisor is correctly rounded.
constexpr double kNano = 1e9;
constexpr double kMicro = 1e6;

// Strict view of one JSON object: typed lookups plus an unknown-key check.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!it->is_number_unsigned()) throw ConfigError("");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError(field(key) + ": wrong type");
    }
  }

  void read_length(const char* key, double divisor, double& out) {
    double value = out * divisor;
    read(key, value);
    if (obj_.contains(key)) out = value / divisor;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key.c_str()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field + ": " + message);
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.surfaces = {{0.5, 9.886e-6}, {0.5, 290.114e-6}};
  c.stage.velocity = 500e-9;
  c.stage.sample_rate = 100.0;
  c.stage.scale_error = 2e-4;
  c.stage.periodic_amplitude = 30e-9;
  c.stage.periodic_period = 50e-6;
  c.stage.drift_step = 0.05e-9;
  c.stage.drift_smoothing = 2000;
  c.stage.seed = 1;
  c.noise.singles_scale = 1000.0;
  c.noise.coincidence_scale = 10.0;
  c.noise.background_rate = 2.0;
  c.noise.poisson_enabled = true;
  c.noise.seed = 2;
  c.scan.start = 0.0;
  c.scan.length = 300e-6;
  return c;
}

void validate(const RunConfig& c) {
  try {
    (void)c.sample();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("sample.surfaces: ") + e.what());
  }
  require(c.lambda0 > 0.0, "spectrum.lambda0_nm", "must be positive");
  require(c.bandwidth > 0.0 && c.bandwidth < c.lambda0, "spectrum.bandwidth_nm", "must be positive and below lambda0");
  require(c.power > 0.0, "spectrum.power", "must be positive");
  require(c.lambda_p > 0.0, "pump.lambda_p_nm", "must be positive");
  require(c.degeneracy_tolerance > 0.0, "pump.degeneracy_tolerance", "must be positive");
  try {
    c.pump().check_degenerate(c.spectrum(), c.degeneracy_tolerance);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("pump.lambda_p_nm: ") + e.what());
  }

  require(c.stage.velocity > 0.0, "stage.velocity_nm_per_s", "must be positive");
  require(c.stage.sample_rate > 0.0, "stage.sample_rate_hz", "must be positive");
  require(c.stage.periodic_period > 0.0, "stage.periodic_period_um", "must be positive");
  require(c.stage.drift_step >= 0.0, "stage.drift_step_nm", "must be nonnegative");
  require(c.stage.drift_smoothing >= 1, "stage.drift_smoothing_samples", "must be at least 1");

  require(c.noise.singles_scale >= 0.0, "noise.singles_per_bin", "must be nonnegative");
  require(c.noise.coincidence_scale >= 0.0, "noise.coincidences_per_bin", "must be nonnegative");
  require(c.noise.background_rate >= 0.0, "noise.background_per_bin", "must be nonnegative");
  require(c.amplitudes.baseline_factor > 0.0, "interference.baseline_factor", "must be positive");

  require(c.scan.length > 0.0, "scan.length_um", "must be positive");
  const double end = c.scan.start + c.scan.length;
  for (std::size_t i = 0; i < c.surfaces.size(); ++i) {
    require(c.surfaces[i].z > c.scan.start && c.surfaces[i].z < end, "sample.surfaces[" + std::to_string(i) + "].z_um",
            "lies outside the scan range");
  }

  const auto& p = c.pipeline;
  require(p.bandpass.filter_length >= 31 && p.bandpass.filter_length % 2 == 1, "pipeline.bandpass.filter_length",
          "must be odd and at least 31");
  require(p.bandpass.relative_bandwidth > 0.0, "pipeline.bandpass.relative_bandwidth", "must be positive");
  require(p.bandpass.center_frequency >= 0.0, "pipeline.bandpass.center_per_um", "must be nonnegative");
  require(p.grid_step >= 0.0 && p.grid_step <= c.stage.spacing() * (1.0 + 1e-9), "pipeline.grid_step_nm",
          "must not exceed the reported sample spacing");
  require(p.phase.amplitude_floor >= 0.0, "pipeline.phase.amplitude_floor", "must be nonnegative");
  require(p.measure.fit_half_window >= 0.0, "pipeline.fit_half_window_um", "must be nonnegative");
  require(p.min_margin_coherence_lengths >= 0.0, "pipeline.min_margin_coherence_lengths", "must be nonnegative");

  require(c.experiments.runs >= 1, "experiments.runs", "must be at least 1");
  require(c.experiments.steps >= 2, "experiments.steps", "must be at least 2");
  require(c.experiments.step > 0.0, "experiments.step_nm", "must be positive");
  require(c.experiments.moving_surface < c.surfaces.size(), "experiments.moving_surface", "index out of range");
}

RunConfig config_from_json(const json& doc) {
  RunConfig c = default_config();
  ObjectReader root(doc, "");

  if (const auto* node = root.child("sample")) {
    ObjectReader sample(*node, "sample");
    if (const auto* list = sample.child("surfaces")) {
      if (!list->is_array()) throw ConfigError("sample.surfaces: expected an array");
      c.surfaces.clear();
      for (std::size_t i = 0; i < list->size(); ++i) {
        ObjectReader s((*list)[i], "sample.surfaces[" + std::to_string(i) + "]");
        Surface surface;
        s.read("r", surface.r);
        s.read_length("z_um", kMicro, surface.z);
        s.finish();
        c.surfaces.push_back(surface);
      }
    }
    sample.finish();
  }
  if (const auto* node = root.child("spectrum")) {
    ObjectReader r(*node, "spectrum");
    r.read_length("lambda0_nm", kNano, c.lambda0);
    r.read_length("bandwidth_nm", kNano, c.bandwidth);
    r.read("power", c.power);
    r.finish();
  }
  if (const auto* node = root.child("pump")) {
    ObjectReader r(*node, "pump");
    r.read_length("lambda_p_nm", kNano, c.lambda_p);
    r.read("degeneracy_tolerance", c.degeneracy_tolerance);
    r.finish();
  }
  if (const auto* node = root.child("stage")) {
    ObjectReader r(*node, "stage");
    r.read_length("velocity_nm_per_s", kNano, c.stage.velocity);
    r.read("sample_rate_hz", c.stage.sample_rate);
    r.read("scale_error", c.stage.scale_error);
    r.read_length("periodic_amplitude_nm", kNano, c.stage.periodic_amplitude);
    r.read_length("periodic_period_um", kMicro, c.stage.periodic_period);
    r.read_length("drift_step_nm", kNano, c.stage.drift_step);
    r.read("drift_smoothing_samples", c.stage.drift_smoothing);
    r.read("seed", c.stage.seed);
    r.finish();
  }
  if (const auto* node = root.child("noise")) {
    ObjectReader r(*node, "noise");
    r.read("singles_per_bin", c.noise.singles_scale);
    r.read("coincidences_per_bin", c.noise.coincidence_scale);
    r.read("background_per_bin", c.noise.background_rate);
    r.read("poisson", c.noise.poisson_enabled);
    r.read("seed", c.noise.seed);
    r.finish();
  }
  if (const auto* node = root.child("interference")) {
    ObjectReader r(*node, "interference");
    r.read("hom", c.amplitudes.hom);
    r.read("single_photon", c.amplitudes.single_photon);
    r.read("baseline_factor", c.amplitudes.baseline_factor);
    r.finish();
  }
  if (const auto* node = root.child("scan")) {
    ObjectReader r(*node, "scan");
    r.read_length("start_um", kMicro, c.scan.start);
    r.read_length("length_um", kMicro, c.scan.length);
    r.finish();
  }
  if (const auto* node = root.child("pipeline")) {
    ObjectReader r(*node, "pipeline");
    auto& p = c.pipeline;
    if (const auto* bp = r.child("bandpass")) {
      ObjectReader b(*bp, "pipeline.bandpass");
      // cycles per um -> cycles per m
      double center = p.bandpass.center_frequency / kMicro;
      b.read("center_per_um", center);
      p.bandpass.center_frequency = center * kMicro;
      b.read("relative_bandwidth", p.bandpass.relative_bandwidth);
      b.read("filter_length", p.bandpass.filter_length);
      b.read("stopband_db", p.bandpass.stopband_attenuation_db);
      b.finish();
    }
    if (const auto* ph = r.child("phase")) {
      ObjectReader b(*ph, "pipeline.phase");
      b.read("amplitude_floor", p.phase.amplitude_floor);
      b.read("max_low_fraction", p.phase.max_low_fraction);
      b.finish();
    }
    r.read_length("grid_step_nm", kNano, p.grid_step);
    r.read_length("fit_half_window_um", kMicro, p.measure.fit_half_window);
    r.read_length("min_separation_um", kMicro, p.measure.min_separation);
    r.read("min_peak_height", p.measure.min_peak_height);
    r.read("noise_floor_factor", p.measure.noise_floor_factor);
    r.read("min_margin_coherence_lengths", p.min_margin_coherence_lengths);
    r.finish();
  }
  if (const auto* node = root.child("experiments")) {
    ObjectReader r(*node, "experiments");
    auto& e = c.experiments;
    r.read("seed", e.seed);
    r.read("runs", e.runs);
    r.read("forced_outlier_runs", e.forced_outlier_runs);
    r.read_length("step_nm", kNano, e.step);
    r.read("steps", e.steps);
    r.read("moving_surface", e.moving_surface);
    r.read("threads", e.threads);
    r.finish();
  }
  root.finish();
  c.pipeline.measure.lambda0 = c.lambda0;
  validate(c);
  return c;
}

ordered_json config_to_json(const RunConfig& c) {
  ordered_json doc;
  ordered_json surfaces = ordered_json::array();
  for (const auto& s : c.surfaces) surfaces.push_back({{"r", s.r}, {"z_um", to_unit(s.z, kMicro)}});
  doc["sample"] = {{"surfaces", surfaces}};
  doc["spectrum"] = {{"lambda0_nm", to_unit(c.lambda0, kNano)}, {"bandwidth_nm", to_unit(c.bandwidth, kNano)}, {"power", c.power}};
  doc["pump"] = {{"lambda_p_nm", to_unit(c.lambda_p, kNano)}, {"degeneracy_tolerance", c.degeneracy_tolerance}};
  doc["stage"] = {{"velocity_nm_per_s", to_unit(c.stage.velocity, kNano)},
                  {"sample_rate_hz", c.stage.sample_rate},
                  {"scale_error", c.stage.scale_error},
                  {"periodic_amplitude_nm", to_unit(c.stage.periodic_amplitude, kNano)},
                  {"periodic_period_um", to_unit(c.stage.periodic_period, kMicro)},
                  {"drift_step_nm", to_unit(c.stage.drift_step, kNano)},
                  {"drift_smoothing_samples", c.stage.drift_smoothing},
                  {"seed", c.stage.seed}};
  doc["noise"] = {{"singles_per_bin", c.noise.singles_scale},
                  {"coincidences_per_bin", c.noise.coincidence_scale},
                  {"background_per_bin", c.noise.background_rate},
                  {"poisson", c.noise.poisson_enabled},
                  {"seed", c.noise.seed}};
  doc["interference"] = {{"hom", c.amplitudes.hom},
                         {"single_photon", c.amplitudes.single_photon},
                         {"baseline_factor", c.amplitudes.baseline_factor}};
  doc["scan"] = {{"start_um", to_unit(c.scan.start, kMicro)}, {"length_um", to_unit(c.scan.length, kMicro)}};
  const auto& p = c.pipeline;
  doc["pipeline"] = {
      {"bandpass",
       {{"center_per_um", p.bandpass.center_frequency / kMicro},
        {"relative_bandwidth", p.bandpass.relative_bandwidth},
        {"filter_length", p.bandpass.filter_length},
        {"stopband_db", p.bandpass.stopband_attenuation_db}}},
      {"phase", {{"amplitude_floor", p.phase.amplitude_floor}, {"max_low_fraction", p.phase.max_low_fraction}}},
      {"grid_step_nm", to_unit(p.grid_step, kNano)},
      {"fit_half_window_um", to_unit(p.measure.fit_half_window, kMicro)},
      {"min_separation_um", to_unit(p.measure.min_separation, kMicro)},
      {"min_peak_height", p.measure.min_peak_height},
      {"noise_floor_factor", p.measure.noise_floor_factor},
      {"min_margin_coherence_lengths", p.min_margin_coherence_lengths}};
  const auto& e = c.experiments;
  doc["experiments"] = {{"seed", e.seed},
                        {"runs", e.runs},
                        {"forced_outlier_runs", e.forced_outlier_runs},
                        {"step_nm", to_unit(e.step, kNano)},
                        {"steps", e.steps},
                        {"moving_surface", e.moving_surface},
                        {"threads", e.threads}};
  return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return config_from_json(doc);
}

double to_unit(double si, double per_unit) {
  const double direct = si * per_unit;
  if (!std::isfinite(direct)) return direct;
  for (int digits = 1; digits <= 17; ++digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, direct);
    const double candidate = std::strtod(buf, nullptr);
    if (candidate / per_unit == si) return candidate;
  }
  return direct;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

}  // namespace qolcr
