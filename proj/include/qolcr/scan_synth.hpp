#pragma once

// Synthetic interferometer scans: intensity I(d) and two-photon coincidences
// M(d) versus reported stage position, with a distorted stage and Poisson
// counting noise.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qolcr/core_model.hpp"

namespace qolcr {

/// Reference-arm stage driven at constant speed. Reported positions are the
/// ideal grid d'_k = start + v k / sample_rate; the true positions carry a
/// scale error, a sinusoidal lead-screw error and a smoothed random walk.
struct StageModel {
  double velocity = 500e-9;      ///< m/s
  double sample_rate = 100.0;    ///< Hz
  double scale_error = 0.0;      ///< multiplicative
  double periodic_amplitude = 0.0;  ///< m
  double periodic_period = 50e-6;   ///< m
  double drift_step = 0.0;          ///< random-walk step rms, m per sample
  std::size_t drift_smoothing = 1;  ///< moving-average length, samples
  std::uint64_t seed = 0;

  double spacing() const noexcept { return velocity / sample_rate; }
};

struct NoiseModel {
  double singles_scale = 1000.0;     ///< mean intensity counts per bin at the fringe-free baseline
  double coincidence_scale = 100.0;  ///< mean coincidence counts per bin at the baseline
  double background_rate = 0.0;      ///< uncorrelated counts per bin, added to both channels
  bool poisson_enabled = true;
  std::uint64_t seed = 0;
};

/// Relative sizes of the non-TPI coincidence terms and of the baselines.
struct InterferenceAmplitudes {
  double hom = 0.5;              ///< M1 scale
  double single_photon = 1.0;    ///< M2 scale
  double baseline_factor = 1.2;  ///< I0, M0 as a multiple of the largest interference swing
};

struct ScanRange {
  double start = 0.0;      ///< m
  double length = 300e-6;  ///< m
};

/// Terms of M(tau) = M0 + 2Re{M1(2tau)} + 4Re{M2(tau) e^{-i w0 tau}} + 2Re{M3 e^{-i wp tau}}.
struct CoincidenceTerms {
  double m0 = 0.0;
  double m1_amp = 0.0;
  double m2_amp = 0.0;
  std::complex<double> m3{0.0, 0.0};
};

/// Closed-form M3 = S0 sum_j r_j^2 exp(-i wp tau_j), plus the baseline M0
/// sized from the largest possible interference swing.
CoincidenceTerms coincidence_terms(const Sample& sample, const Spectrum& spectrum,
                                   const PumpReference& pump, const InterferenceAmplitudes& amps = {});

/// I(d) = I0 + sum_j r_j f(2d/c - tau_j). Rates are in units of the source
/// power S0 and scale linearly with it.
class IntensityModel {
 public:
  IntensityModel(const Sample& sample, const Spectrum& spectrum, double baseline_factor = 1.2);

  double baseline() const noexcept { return baseline_; }
  /// Interference part sum_j r_j f(2d/c - tau_j).
  double fringes(double d) const noexcept;
  double rate(double d) const noexcept { return baseline_ + fringes(d); }

 private:
  Sample sample_;
  Spectrum spectrum_;
  double baseline_;
};

struct CoincidenceComponents {
  double baseline = 0.0;       ///< M0
  double hom = 0.0;            ///< 2 Re{M1(2 tau)}
  double single_photon = 0.0;  ///< 4 Re{M2(tau) e^{-i w0 tau}}
  double tpi = 0.0;            ///< 2 Re{M3 e^{-i wp tau}}

  double total() const noexcept { return baseline + hom + single_photon + tpi; }
};

/// M1 is a real Hong-Ou-Mandel dip centered midway between each surface pair
/// with the first-order coherence width; M2 = m2_amp sum_j r_j s(tau - tau_j) e^{i w0 tau_j}
/// carries the single-photon fringes.
class CoincidenceModel {
 public:
  CoincidenceModel(const Sample& sample, const Spectrum& spectrum, const PumpReference& pump,
                   const InterferenceAmplitudes& amps = {});

  const CoincidenceTerms& terms() const noexcept { return terms_; }
  CoincidenceComponents components(double d) const noexcept;
  double rate(double d) const noexcept { return components(d).total(); }

 private:
  Sample sample_;
  Spectrum spectrum_;
  PumpReference pump_;
  CoincidenceTerms terms_;
};

double intensity_rate(const Sample& sample, const Spectrum& spectrum, double d);
double coincidence_rate(const Sample& sample, const Spectrum& spectrum, const PumpReference& pump,
                        const InterferenceAmplitudes& amps, double d);

/// Ideal reported grid start + k * spacing, k = 0..n-1.
std::vector<double> reported_positions(const StageModel& stage, double start, std::size_t n_samples);

/// True positions for the given reported grid. Throws ConfigError when the
/// distortion makes the sequence non-monotone.
std::vector<double> true_positions(const StageModel& stage, std::span<const double> reported);
/// Convenience overload for a grid starting at zero.
std::vector<double> true_positions(const StageModel& stage, std::size_t n_samples);

struct ScanTruth {
  std::vector<double> true_d;
  std::vector<double> intensity;    ///< expected counts per bin
  std::vector<double> coincidence;  ///< expected counts per bin
  std::vector<double> tpi;          ///< TPI contribution to coincidence, counts per bin
};

/// Provenance carried with a trace into files and downstream stages.
struct TraceMetadata {
  double lambda0 = 810e-9;
  double bandwidth = 30e-9;
  double lambda_p = 405e-9;
  double velocity = 500e-9;
  double sample_rate = 100.0;
  std::uint64_t stage_seed = 0;
  std::uint64_t noise_seed = 0;
  bool poisson = false;
  std::vector<Surface> surfaces;
};

struct ScanTrace {
  std::vector<double> reported_d;   ///< m, uniform
  std::vector<double> intensity;    ///< counts per bin
  std::vector<double> coincidence;  ///< counts per bin
  std::optional<ScanTruth> truth;
  TraceMetadata metadata;

  std::size_t size() const noexcept { return reported_d.size(); }
  /// Reported grid spacing, m.
  double spacing() const;
};

/// Bins of duration 1/sample_rate across `range`; expected counts are the
/// model rates normalized so the fringe-free baseline equals the noise
/// model's per-bin scale, then Poisson sampled when enabled.
ScanTrace simulate_scan(const Sample& sample, const Spectrum& spectrum, const PumpReference& pump,
                        const StageModel& stage, const NoiseModel& noise, const ScanRange& range,
                        const InterferenceAmplitudes& amps = {}, double min_margin_coherence_lengths = 1.0);

}  // namespace qolcr
