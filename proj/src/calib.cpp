#include "qolcr/calib.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "qolcr/dsp.hpp"
#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  return std::sin(kPi * x) / (kPi * x);
}

double kaiser_beta(double attenuation_db) {
  if (attenuation_db > 50.0) return 0.1102 * (attenuation_db - 8.7);
  if (attenuation_db >= 21.0) {
    return 0.5842 * std::pow(attenuation_db - 21.0, 0.4) + 0.07886 * (attenuation_db - 21.0);
  }
  return 0.0;
}

double wrap_to_pi(double x) {
  // Result in (-pi, pi].
  x = std::remainder(x, 2.0 * kPi);
  return x <= -kPi ? x + 2.0 * kPi : x;
}

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

struct SplineDeleter {
  void operator()(gsl_spline* s) const noexcept { gsl_spline_free(s); }
};
struct AccelDeleter {
  void operator()(gsl_interp_accel* a) const noexcept { gsl_interp_accel_free(a); }
};

}  // namespace

BandpassSpec BandpassSpec::resolved(const PumpReference& pump) const {
  BandpassSpec out = *this;
  if (out.center_frequency == 0.0) out.center_frequency = 2.0 / pump.lambda_p();
  return out;
}

std::complex<double> FirFilter::response(double frequency) const {
  const double w = 2.0 * kPi * frequency * sample_spacing;
  const auto mid = static_cast<double>(half_length());
  std::complex<double> h{0.0, 0.0};
  for (std::size_t n = 0; n < taps.size(); ++n) {
    h += taps[n] * std::polar(1.0, -w * (static_cast<double>(n) - mid));
  }
  return h;
}

double FirFilter::noise_gain() const {
  double sum = 0.0;
  for (double t : taps) sum += t * t;
  return std::sqrt(sum);
}

FirFilter design_bandpass(const BandpassSpec& spec, double sample_spacing) {
  const auto len = spec.filter_length;
  if (len < 31 || len % 2 == 0) {
    throw ConfigError("bandpass: filter_length must be odd and at least 31 (got " + std::to_string(len) + ")");
  }
  if (!(sample_spacing > 0.0)) throw ConfigError("bandpass: sample spacing must be positive");
  if (!(spec.center_frequency > 0.0)) throw ConfigError("bandpass: center frequency must be positive");
  if (!(spec.relative_bandwidth > 0.0)) throw ConfigError("bandpass: relative bandwidth must be positive");
  if (!(spec.stopband_attenuation_db > 0.0)) throw ConfigError("bandpass: stopband attenuation must be positive");

  const double fc = spec.center_frequency * sample_spacing;  // cycles/sample
  const double pass_lo = fc * (1.0 - 0.5 * spec.relative_bandwidth);
  const double pass_hi = fc * (1.0 + 0.5 * spec.relative_bandwidth);
  const double transition = (spec.stopband_attenuation_db - 7.95) / (14.36 * static_cast<double>(len - 1));

  if (pass_lo <= 0.0) throw ConfigError("bandpass: passband reaches DC (relative bandwidth too large)");
  if (pass_hi >= 0.5) throw ConfigError("bandpass: passband reaches the Nyquist frequency");
  if (pass_lo - transition <= 0.0) {
    throw ConfigError("bandpass: filter too short, lower transition band (" + std::to_string(transition) +
                      " cycles/sample) overlaps DC");
  }
  if (pass_hi + transition >= 0.5) {
    throw ConfigError("bandpass: filter too short, upper transition band reaches the Nyquist frequency");
  }

  const double cut_lo = pass_lo - 0.5 * transition;
  const double cut_hi = pass_hi + 0.5 * transition;
  const double beta = kaiser_beta(spec.stopband_attenuation_db);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  const auto half = static_cast<double>(len / 2);

  FirFilter filter;
  filter.sample_spacing = sample_spacing;
  filter.taps.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double m = static_cast<double>(n) - half;
    const double ratio = m / half;
    const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0_beta;
    filter.taps[n] = window * (2.0 * cut_hi * sinc(2.0 * cut_hi * m) - 2.0 * cut_lo * sinc(2.0 * cut_lo * m));
  }
  // Symmetrize explicitly so the response is exactly linear phase.
  for (std::size_t n = 0; n < len / 2; ++n) {
    const double avg = 0.5 * (filter.taps[n] + filter.taps[len - 1 - n]);
    filter.taps[n] = filter.taps[len - 1 - n] = avg;
  }
  const double gain = std::abs(filter.response(spec.center_frequency));
  for (auto& t : filter.taps) t /= gain;

  filter.passband_low = pass_lo / sample_spacing;
  filter.passband_high = pass_hi / sample_spacing;
  filter.stopband_low = (pass_lo - transition) / sample_spacing;
  filter.stopband_high = (pass_hi + transition) / sample_spacing;
  return filter;
}

TpiSignal extract_tpi(std::span<const double> coincidence, double sample_spacing, const BandpassSpec& spec) {
  const auto filter = design_bandpass(spec, sample_spacing);
  if (coincidence.size() < filter.taps.size()) {
    throw ConfigError("extract_tpi: trace (" + std::to_string(coincidence.size()) +
                      " samples) is shorter than the filter (" + std::to_string(filter.taps.size()) + " taps)");
  }
  TpiSignal out;
  out.values = dsp::convolve_same(coincidence, filter.taps);
  out.valid_begin = filter.half_length();
  out.valid_end = coincidence.size() - filter.half_length();
  out.sample_spacing = sample_spacing;
  return out;
}

TpiSignal extract_tpi(const ScanTrace& trace, const BandpassSpec& spec) {
  return extract_tpi(trace.coincidence, trace.spacing(), spec.resolved(PumpReference(trace.metadata.lambda_p)));
}

PhaseTrace extract_phase(const TpiSignal& tpi, const PhaseOptions& options) {
  const auto n = tpi.values.size();
  if (tpi.valid_end <= tpi.valid_begin || tpi.valid_end > n) {
    throw QualityError("extract_phase: empty valid region");
  }

  std::vector<double> tapered = tpi.values;
  const auto head = tpi.valid_begin;
  for (std::size_t i = 0; i < head; ++i) {
    tapered[i] *= 0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(head)));
  }
  const auto tail = n - tpi.valid_end;
  for (std::size_t i = 0; i < tail; ++i) {
    tapered[n - 1 - i] *= 0.5 * (1.0 - std::cos(kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(tail)));
  }

  const auto analytic = dsp::analytic_signal(tapered);

  PhaseTrace out;
  out.valid_begin = tpi.valid_begin;
  out.valid_end = tpi.valid_end;
  out.amplitude.resize(n);
  out.unwrapped_phase.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.amplitude[i] = std::abs(analytic[i]);
    out.unwrapped_phase[i] = std::arg(analytic[i]);
  }
  // Unwrap outward from the center of the valid region.
  const auto center = tpi.valid_begin + (tpi.valid_end - tpi.valid_begin) / 2;
  for (std::size_t i = center + 1; i < n; ++i) {
    const double raw = std::arg(analytic[i]);
    out.unwrapped_phase[i] = out.unwrapped_phase[i - 1] + wrap_to_pi(raw - out.unwrapped_phase[i - 1]);
  }
  for (std::size_t i = center; i-- > 0;) {
    const double raw = std::arg(analytic[i]);
    out.unwrapped_phase[i] = out.unwrapped_phase[i + 1] + wrap_to_pi(raw - out.unwrapped_phase[i + 1]);
  }

  std::vector<double> valid_amp(out.amplitude.begin() + static_cast<std::ptrdiff_t>(tpi.valid_begin),
                                out.amplitude.begin() + static_cast<std::ptrdiff_t>(tpi.valid_end));
  auto mid = valid_amp.begin() + static_cast<std::ptrdiff_t>(valid_amp.size() / 2);
  std::nth_element(valid_amp.begin(), mid, valid_amp.end());
  const double floor = options.amplitude_floor * *mid;

  out.quality_mask.assign(n, 1);
  std::size_t low = 0;
  for (std::size_t i = tpi.valid_begin; i < tpi.valid_end; ++i) {
    const bool is_low = !(out.amplitude[i] > floor);
    out.quality_mask[i] = is_low ? 1 : 0;
    low += is_low ? 1 : 0;
  }
  out.low_amplitude_fraction = static_cast<double>(low) / static_cast<double>(tpi.valid_end - tpi.valid_begin);
  if (out.low_amplitude_fraction > options.max_low_fraction) {
    throw QualityError("extract_phase: TPI amplitude below floor on " +
                       std::to_string(100.0 * out.low_amplitude_fraction) + "% of samples");
  }
  return out;
}

CalibrationMap::CalibrationMap(std::vector<double> reported, std::vector<double> calibrated,
                               std::size_t edge_fit_knots)
    : reported_(std::move(reported)), calibrated_(std::move(calibrated)) {
  if (reported_.size() != calibrated_.size()) throw ConfigError("calibration map: knot arrays differ in length");
  if (reported_.size() < 2) throw ConfigError("calibration map: at least two knots are required");
  for (std::size_t i = 1; i < reported_.size(); ++i) {
    if (!(reported_[i] > reported_[i - 1])) {
      throw QualityError("calibration map: reported positions not strictly increasing at knot " + std::to_string(i));
    }
    if (!(calibrated_[i] > calibrated_[i - 1])) {
      throw QualityError("calibration map: calibrated positions not strictly increasing at knot " +
                         std::to_string(i) + " (stage reversal or phase-extraction failure)");
    }
  }
  const auto m = std::clamp<std::size_t>(edge_fit_knots, 2, reported_.size());
  const std::span<const double> rep(reported_), cal(calibrated_);
  slope_begin_ = fit_slope(rep.first(m), cal.first(m));
  slope_end_ = fit_slope(rep.last(m), cal.last(m));
}

double CalibrationMap::operator()(double x) const {
  if (x < reported_.front()) return calibrated_.front() + slope_begin_ * (x - reported_.front());
  if (x > reported_.back()) return calibrated_.back() + slope_end_ * (x - reported_.back());
  const auto it = std::upper_bound(reported_.begin(), reported_.end(), x);
  const auto i = static_cast<std::size_t>(it - reported_.begin()) - 1;
  if (reported_[i] == x || i + 1 == reported_.size()) return calibrated_[i];
  const double t = (x - reported_[i]) / (reported_[i + 1] - reported_[i]);
  return calibrated_[i] + t * (calibrated_[i + 1] - calibrated_[i]);
}

std::vector<double> CalibrationMap::operator()(std::span<const double> reported) const {
  std::vector<double> out(reported.size());
  std::transform(reported.begin(), reported.end(), out.begin(), [this](double x) { return (*this)(x); });
  return out;
}

CalibrationMap build_calibration(const PhaseTrace& phase, const PumpReference& pump, const ScanTrace& trace) {
  const auto n = trace.size();
  if (phase.unwrapped_phase.size() != n) throw ConfigError("build_calibration: phase and trace lengths differ");
  if (phase.valid_end <= phase.valid_begin + 1) throw QualityError("build_calibration: too few valid samples");

  const double to_length = pump.lambda_p() / (4.0 * kPi);
  std::vector<double> reported(trace.reported_d.begin() + static_cast<std::ptrdiff_t>(phase.valid_begin),
                               trace.reported_d.begin() + static_cast<std::ptrdiff_t>(phase.valid_end));
  std::vector<double> calibrated(reported.size());
  for (std::size_t i = 0; i < calibrated.size(); ++i) {
    calibrated[i] = phase.unwrapped_phase[phase.valid_begin + i] * to_length;
  }

  // Anchor: calibrated == reported at the scan midpoint.
  const auto a = (n - 1) / 2;
  const auto b = n / 2;
  if (a < phase.valid_begin || b >= phase.valid_end) {
    throw QualityError("build_calibration: scan midpoint lies outside the valid region");
  }
  const double mid_reported = 0.5 * (trace.reported_d[a] + trace.reported_d[b]);
  const double mid_raw = 0.5 * (phase.unwrapped_phase[a] + phase.unwrapped_phase[b]) * to_length;
  const double anchor = mid_reported - mid_raw;
  for (auto& c : calibrated) c += anchor;

  const auto edge = std::max<std::size_t>(phase.valid_begin, 2);
  return CalibrationMap(std::move(reported), std::move(calibrated), edge);
}

CalibratedRecord resample_intensity(const ScanTrace& trace, const CalibrationMap& map, double grid_step) {
  const auto n = trace.size();
  if (n < 3) throw ConfigError("resample_intensity: at least three samples are required");
  const double spacing = trace.spacing();
  if (!(grid_step > 0.0) || grid_step > spacing * (1.0 + 1e-9)) {
    throw ConfigError("resample_intensity: grid step must be positive and not exceed the reported spacing");
  }
  const auto positions = map(std::span<const double>(trace.reported_d));
  for (std::size_t i = 1; i < n; ++i) {
    if (!(positions[i] > positions[i - 1])) {
      throw QualityError("resample_intensity: calibrated positions not strictly increasing");
    }
  }

  gsl_set_error_handler_off();
  std::unique_ptr<gsl_spline, SplineDeleter> spline(gsl_spline_alloc(gsl_interp_cspline, n));
  std::unique_ptr<gsl_interp_accel, AccelDeleter> accel(gsl_interp_accel_alloc());
  if (gsl_spline_init(spline.get(), positions.data(), trace.intensity.data(), n) != GSL_SUCCESS) {
    throw QualityError("resample_intensity: spline construction failed");
  }

  CalibratedRecord out;
  out.start = positions.front();
  out.step = grid_step;
  out.metadata = trace.metadata;
  const double span = positions.back() - positions.front();
  const auto count = static_cast<std::size_t>(std::floor(span / grid_step * (1.0 + 1e-12))) + 1;
  out.intensity.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = std::min(out.position(i), positions.back());
    out.intensity[i] = gsl_spline_eval(spline.get(), x, accel.get());
  }
  return out;
}

CalibrationQuality calibration_quality(const PhaseTrace& phase, const CalibrationMap& map) {
  CalibrationQuality q;
  q.edge_samples = phase.valid_begin;
  q.low_amplitude_fraction = phase.low_amplitude_fraction;
  q.slope = fit_slope(map.reported_knots(), map.calibrated_knots());
  return q;
}

}  // namespace qolcr
