#pragma once

// Surface separations from the autocorrelation of a calibrated intensity
// record: find the side-peak clusters, fit a parabola to the cluster
// envelope, then refine to the nearest carrier fringe maximum.

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qolcr/calib.hpp"

namespace qolcr {

/// Mean-subtracted, A(0)-normalized autocorrelation on lags -max_lag..max_lag.
struct Autocorrelogram {
  double lag_step = 0.0;  ///< m
  std::size_t max_lag = 0;
  std::vector<double> values;  ///< values[i] <-> lag (i - max_lag) * lag_step
  bool dc_removed = true;

  std::size_t size() const noexcept { return values.size(); }
  double lag(std::size_t i) const noexcept {
    return (static_cast<double>(i) - static_cast<double>(max_lag)) * lag_step;
  }
  double at(std::ptrdiff_t k) const { return values.at(static_cast<std::size_t>(k + static_cast<std::ptrdiff_t>(max_lag))); }
};

/// Spectral-method autocorrelation. `max_lag` defaults to the full record;
/// throws ConfigError when max_lag >= record length. Checks symmetry and the
/// zero-lag maximum on every call.
Autocorrelogram autocorrelate(std::span<const double> record, double step,
                              std::optional<std::size_t> max_lag = std::nullopt);
Autocorrelogram autocorrelate(const CalibratedRecord& record, std::optional<std::size_t> max_lag = std::nullopt);

struct EnvelopeSamples {
  std::vector<double> lags;    ///< m
  std::vector<double> values;  ///< |analytic signal|
  std::vector<double> phase;   ///< arg(analytic signal), unwrapped across the window
};

/// Analytic-signal magnitude of A restricted to [around - half_window, around + half_window].
EnvelopeSamples envelope(const Autocorrelogram& acf, double around_lag, double half_window);

struct ParabolaFit {
  double a = 0.0;  ///< y = a u^2 + b u + c with u = x - x_ref
  double b = 0.0;
  double c = 0.0;
  double x_ref = 0.0;
  double vertex = 0.0;
  double uncertainty = 0.0;  ///< 1-sigma from the residual covariance; 0 for exactly 3 points
  double window_low = 0.0;
  double window_high = 0.0;
};

/// Least-squares parabola; throws QualityError unless it is concave.
ParabolaFit parabolic_peak_fit(std::span<const double> x, std::span<const double> y);

struct MeasureOptions {
  double lambda0 = 810e-9;           ///< carrier wavelength, sets the lambda0/4 ambiguity threshold
  double fit_half_window = 0.0;      ///< m; 0 = one coherence length
  double min_separation = 0.0;       ///< m; 0 = two fit windows
  double min_peak_height = 0.02;     ///< envelope threshold relative to A(0)
  double noise_floor_factor = 5.0;   ///< and relative to the median envelope
  double refinement_seed_offset = 0.0;  ///< m, shifts the carrier-refinement seed (diagnostics)

  /// Defaults derived from a spectrum: lambda0 and the coherence length.
  static MeasureOptions for_spectrum(const Spectrum& spectrum);
  MeasureOptions resolved(double coherence_length) const;
};

struct PeakEstimate {
  double separation = 0.0;  ///< m, carrier-refined
  ParabolaFit envelope_fit;
  double carrier_refinement = 0.0;  ///< m
  double fringe_period = 0.0;       ///< m, from the fitted carrier phase slope
  bool outlier_flag = false;        ///< refined value off the envelope vertex by more than lambda0/4
  double uncertainty = 0.0;         ///< m
  double peak_height = 0.0;         ///< envelope maximum relative to A(0)
};

struct MeasurementReport {
  std::vector<PeakEstimate> separations;  ///< ascending
  TraceMetadata metadata;
  std::optional<CalibrationQuality> calibration;
};

/// Throws InsufficientPeaksError when fewer than `expected_count` clusters
/// clear the noise floor. expected_count == 0 yields an empty report.
MeasurementReport estimate_separations(const Autocorrelogram& acf, std::size_t expected_count,
                                       const MeasureOptions& options);

}  // namespace qolcr
