#pragma once

// Self-calibration of the scan axis: the two-photon interference (TPI)
// carrier is isolated from the coincidence trace with a linear-phase FIR
// band-pass, its unwrapped phase is converted into calibrated positions
// anchored to the pump wavelength, and the intensity trace is resampled onto
// a uniform calibrated grid.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qolcr/core_model.hpp"
#include "qolcr/scan_synth.hpp"

namespace qolcr {

struct BandpassSpec {
  double center_frequency = 0.0;   ///< cycles per meter of reported position; 0 = 2 / lambda_p
  double relative_bandwidth = 0.2; ///< passband width as a fraction of the center frequency
  std::size_t filter_length = 1001;  ///< taps, odd
  double stopband_attenuation_db = 90.0;

  /// Center frequency resolved against the pump when left at zero.
  BandpassSpec resolved(const PumpReference& pump) const;
};

/// Kaiser-windowed sinc band-pass with symmetric (linear-phase) taps.
struct FirFilter {
  std::vector<double> taps;
  double sample_spacing = 0.0;  ///< m
  double passband_low = 0.0;    ///< cycles/m
  double passband_high = 0.0;
  double stopband_low = 0.0;    ///< below this: stopband
  double stopband_high = 0.0;   ///< above this: stopband

  /// Complex frequency response at `frequency` cycles/m, referenced to the center tap.
  std::complex<double> response(double frequency) const;
  /// sqrt(sum h^2): rms gain for white noise.
  double noise_gain() const;
  std::size_t half_length() const noexcept { return taps.size() / 2; }
};

/// Throws ConfigError naming the violated constraint for infeasible specs
/// (even or too-short filter, passband touching DC or Nyquist, transition
/// band too wide for the requested attenuation).
FirFilter design_bandpass(const BandpassSpec& spec, double sample_spacing);

/// Band-passed coincidence signal. Samples outside [valid_begin, valid_end)
/// are within half a filter length of the record edge.
struct TpiSignal {
  std::vector<double> values;
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;
  double sample_spacing = 0.0;
};

TpiSignal extract_tpi(std::span<const double> coincidence, double sample_spacing, const BandpassSpec& spec);
/// `spec` must already be resolved (nonzero center frequency) or the trace's
/// pump wavelength is used.
TpiSignal extract_tpi(const ScanTrace& trace, const BandpassSpec& spec);

struct PhaseOptions {
  double amplitude_floor = 0.2;   ///< relative to the median TPI amplitude
  double max_low_fraction = 0.1;  ///< QualityError above this fraction of low-amplitude samples
};

struct PhaseTrace {
  std::vector<double> unwrapped_phase;  ///< rad
  std::vector<double> amplitude;
  std::vector<std::uint8_t> quality_mask;  ///< 1 where amplitude is below the floor or outside the valid region
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;
  double low_amplitude_fraction = 0.0;  ///< over the valid region
};

/// Quadrature by one-sided spectral selection; the invalid edge zones are
/// tapered to zero first so the transform sees no truncation step.
PhaseTrace extract_phase(const TpiSignal& tpi, const PhaseOptions& options = {});

/// Monotone map from reported position d' to calibrated position d.
/// Linear interpolation between knots; linear extrapolation outside them
/// using the slope fitted over the outermost knots.
class CalibrationMap {
 public:
  CalibrationMap(std::vector<double> reported, std::vector<double> calibrated, std::size_t edge_fit_knots = 200);

  double operator()(double reported) const;
  std::vector<double> operator()(std::span<const double> reported) const;

  std::span<const double> reported_knots() const noexcept { return reported_; }
  std::span<const double> calibrated_knots() const noexcept { return calibrated_; }
  double domain_begin() const noexcept { return reported_.front(); }
  double domain_end() const noexcept { return reported_.back(); }
  bool extrapolated(double reported) const noexcept {
    return reported < reported_.front() || reported > reported_.back();
  }
  static constexpr const char* interpolation() noexcept { return "linear"; }

 private:
  std::vector<double> reported_;
  std::vector<double> calibrated_;
  double slope_begin_ = 1.0;
  double slope_end_ = 1.0;
};

/// d_k = phase_k lambda_p / (4 pi) + anchor over the valid region, with the
/// anchor chosen so that d equals d' at the scan midpoint. Throws QualityError
/// if the calibrated positions are not strictly increasing.
CalibrationMap build_calibration(const PhaseTrace& phase, const PumpReference& pump, const ScanTrace& trace);

/// Intensity on a uniform calibrated grid.
struct CalibratedRecord {
  double start = 0.0;  ///< m
  double step = 0.0;   ///< m
  std::vector<double> intensity;
  TraceMetadata metadata;

  std::size_t size() const noexcept { return intensity.size(); }
  double position(std::size_t i) const noexcept { return start + step * static_cast<double>(i); }
};

/// I_c(d) = I(d'(d)): cubic-spline interpolation from the calibrated
/// positions of all samples onto start + k * grid_step.
CalibratedRecord resample_intensity(const ScanTrace& trace, const CalibrationMap& map, double grid_step);

struct CalibrationQuality {
  std::size_t edge_samples = 0;  ///< extrapolated samples at each end
  double low_amplitude_fraction = 0.0;
  double slope = 1.0;  ///< least-squares d/d' over the knots
};

CalibrationQuality calibration_quality(const PhaseTrace& phase, const CalibrationMap& map);

}  // namespace qolcr
