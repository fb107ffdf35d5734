#include "qolcr/scan_synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

// Centered moving average, window shrinking at the edges.
std::vector<double> moving_average(std::span<const double> x, std::size_t width) {
  if (width <= 1) return {x.begin(), x.end()};
  const auto n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  const auto half = width / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = i >= half ? i - half : 0;
    const auto hi = std::min(n, i + (width - half));
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

double draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0.0;
  std::poisson_distribution<long long> dist(mean);
  return static_cast<double>(dist(rng));
}

}  // namespace

CoincidenceTerms coincidence_terms(const Sample& sample, const Spectrum& spectrum,
                                   const PumpReference& pump, const InterferenceAmplitudes& amps) {
  CoincidenceTerms t;
  t.m1_amp = amps.hom;
  t.m2_amp = amps.single_photon;
  for (const auto& s : sample.surfaces()) {
    t.m3 += spectrum.power() * s.r * s.r * std::polar(1.0, -pump.omega_p() * surface_delay(s.z));
  }
  double pair_sum = 0.0;
  const auto surfaces = sample.surfaces();
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    for (std::size_t j = i + 1; j < surfaces.size(); ++j) pair_sum += surfaces[i].r * surfaces[j].r;
  }
  const double f0 = response_function(spectrum, 0.0);
  const double swing = 2.0 * std::abs(amps.hom) * spectrum.power() * pair_sum +
                       2.0 * std::abs(amps.single_photon) * f0 * sample.sum_r() + 2.0 * std::abs(t.m3);
  t.m0 = amps.baseline_factor * swing;
  return t;
}

IntensityModel::IntensityModel(const Sample& sample, const Spectrum& spectrum, double baseline_factor)
    : sample_(sample),
      spectrum_(spectrum),
      baseline_(baseline_factor * response_function(spectrum, 0.0) * sample.sum_r()) {}

double IntensityModel::fringes(double d) const noexcept {
  const double tau = surface_delay(d);
  double sum = 0.0;
  for (const auto& s : sample_.surfaces()) {
    sum += s.r * response_function(spectrum_, tau - surface_delay(s.z));
  }
  return sum;
}

CoincidenceModel::CoincidenceModel(const Sample& sample, const Spectrum& spectrum,
                                   const PumpReference& pump, const InterferenceAmplitudes& amps)
    : sample_(sample), spectrum_(spectrum), pump_(pump), terms_(coincidence_terms(sample, spectrum, pump, amps)) {}

CoincidenceComponents CoincidenceModel::components(double d) const noexcept {
  CoincidenceComponents c;
  c.baseline = terms_.m0;
  const double tau = surface_delay(d);
  const auto surfaces = sample_.surfaces();
  const double s0 = coherence_envelope(spectrum_, 0.0).real();

  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    const double tau_i = surface_delay(surfaces[i].z);
    for (std::size_t j = i + 1; j < surfaces.size(); ++j) {
      const double mid = 0.5 * (tau_i + surface_delay(surfaces[j].z));
      const double shape = std::abs(coherence_envelope(spectrum_, tau - mid)) / s0;
      c.hom -= 2.0 * terms_.m1_amp * spectrum_.power() * surfaces[i].r * surfaces[j].r * shape;
    }
  }

  std::complex<double> m2{0.0, 0.0};
  for (const auto& s : surfaces) {
    const double tau_j = surface_delay(s.z);
    m2 += s.r * coherence_envelope(spectrum_, tau - tau_j) * std::polar(1.0, spectrum_.omega0() * tau_j);
  }
  m2 *= terms_.m2_amp;
  c.single_photon = 4.0 * std::real(m2 * std::polar(1.0, -spectrum_.omega0() * tau));
  c.tpi = 2.0 * std::real(terms_.m3 * std::polar(1.0, -pump_.omega_p() * tau));
  return c;
}

double intensity_rate(const Sample& sample, const Spectrum& spectrum, double d) {
  return IntensityModel(sample, spectrum).rate(d);
}

double coincidence_rate(const Sample& sample, const Spectrum& spectrum, const PumpReference& pump,
                        const InterferenceAmplitudes& amps, double d) {
  return CoincidenceModel(sample, spectrum, pump, amps).rate(d);
}

std::vector<double> reported_positions(const StageModel& stage, double start, std::size_t n_samples) {
  std::vector<double> d(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) / stage.sample_rate;
    d[k] = start + stage.velocity * t;
  }
  return d;
}

std::vector<double> true_positions(const StageModel& stage, std::span<const double> reported) {
  const auto n = reported.size();
  if (n < 2) throw ConfigError("stage: at least two samples are required");
  if (!(stage.velocity > 0.0) || !(stage.sample_rate > 0.0)) {
    throw ConfigError("stage: velocity and sample rate must be positive");
  }
  if (stage.periodic_amplitude != 0.0 && !(stage.periodic_period > 0.0)) {
    throw ConfigError("stage: periodic error period must be positive");
  }
  if (stage.drift_step < 0.0) throw ConfigError("stage: drift step must be nonnegative");

  std::vector<double> walk(n, 0.0);
  if (stage.drift_step > 0.0) {
    std::mt19937_64 rng(stage.seed);
    std::normal_distribution<double> step(0.0, stage.drift_step);
    for (std::size_t k = 1; k < n; ++k) walk[k] = walk[k - 1] + step(rng);
    // Two passes give a triangular kernel with a continuous derivative.
    walk = moving_average(moving_average(walk, stage.drift_smoothing), stage.drift_smoothing);
  }

  std::vector<double> d(n);
  for (std::size_t k = 0; k < n; ++k) {
    double periodic = 0.0;
    if (stage.periodic_amplitude != 0.0) {
      periodic = stage.periodic_amplitude * std::sin(2.0 * kPi * reported[k] / stage.periodic_period);
    }
    d[k] = reported[k] * (1.0 + stage.scale_error) + periodic + walk[k];
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(d[k] > d[k - 1])) {
      throw ConfigError("stage: distortion makes true positions non-monotone at sample " + std::to_string(k));
    }
  }
  return d;
}

std::vector<double> true_positions(const StageModel& stage, std::size_t n_samples) {
  if (n_samples < 2) throw ConfigError("stage: at least two samples are required");
  return true_positions(stage, reported_positions(stage, 0.0, n_samples));
}

double ScanTrace::spacing() const {
  if (reported_d.size() < 2) throw ConfigError("trace: at least two samples are required");
  return (reported_d.back() - reported_d.front()) / static_cast<double>(reported_d.size() - 1);
}

ScanTrace simulate_scan(const Sample& sample, const Spectrum& spectrum, const PumpReference& pump,
                        const StageModel& stage, const NoiseModel& noise, const ScanRange& range,
                        const InterferenceAmplitudes& amps, double min_margin_coherence_lengths) {
  if (!(range.length > 0.0)) throw ConfigError("scan: range must be nonempty");
  if (!(stage.velocity > 0.0) || !(stage.sample_rate > 0.0)) {
    throw ConfigError("stage: velocity and sample rate must be positive");
  }
  if (noise.singles_scale < 0.0 || noise.coincidence_scale < 0.0 || noise.background_rate < 0.0) {
    throw ConfigError("noise: scales and background must be nonnegative");
  }
  pump.check_degenerate(spectrum);

  const auto n = static_cast<std::size_t>(std::llround(range.length / stage.spacing()));
  if (n < 2) throw ConfigError("scan: range shorter than two samples");

  const double margin = min_margin_coherence_lengths * spectrum.coherence_length();
  const double end = range.start + range.length;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double z = sample[i].z;
    if (z - range.start < margin || end - z < margin) {
      throw ConfigError("scan: surface " + std::to_string(i) + " is closer than " +
                        std::to_string(min_margin_coherence_lengths) +
                        " coherence lengths to the scan edge");
    }
  }

  ScanTrace trace;
  trace.reported_d = reported_positions(stage, range.start, n);
  ScanTruth truth;
  truth.true_d = true_positions(stage, trace.reported_d);

  const IntensityModel intensity(sample, spectrum, amps.baseline_factor);
  const CoincidenceModel coincidence(sample, spectrum, pump, amps);
  const double i_norm = noise.singles_scale / intensity.baseline();
  const double m_norm = noise.coincidence_scale / coincidence.terms().m0;

  truth.intensity.resize(n);
  truth.coincidence.resize(n);
  truth.tpi.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = truth.true_d[k];
    const auto comps = coincidence.components(d);
    truth.intensity[k] = i_norm * intensity.rate(d) + noise.background_rate;
    truth.coincidence[k] = m_norm * comps.total() + noise.background_rate;
    truth.tpi[k] = m_norm * comps.tpi;
    if (truth.intensity[k] < 0.0 || truth.coincidence[k] < 0.0) {
      throw ConfigError("noise: expected counts become negative at sample " + std::to_string(k) +
                        "; increase the baseline factor");
    }
  }

  if (noise.poisson_enabled) {
    std::mt19937_64 rng(noise.seed);
    trace.intensity.resize(n);
    trace.coincidence.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      trace.intensity[k] = draw_poisson(rng, truth.intensity[k]);
      trace.coincidence[k] = draw_poisson(rng, truth.coincidence[k]);
    }
  } else {
    trace.intensity = truth.intensity;
    trace.coincidence = truth.coincidence;
  }

  trace.metadata.lambda0 = spectrum.lambda0();
  trace.metadata.bandwidth = spectrum.bandwidth();
  trace.metadata.lambda_p = pump.lambda_p();
  trace.metadata.velocity = stage.velocity;
  trace.metadata.sample_rate = stage.sample_rate;
  trace.metadata.stage_seed = stage.seed;
  trace.metadata.noise_seed = noise.seed;
  trace.metadata.poisson = noise.poisson_enabled;
  trace.metadata.surfaces.assign(sample.surfaces().begin(), sample.surfaces().end());
  trace.truth = std::move(truth);
  return trace;
}

}  // namespace qolcr
