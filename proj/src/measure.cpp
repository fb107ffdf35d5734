#include "qolcr/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

#include "qolcr/dsp.hpp"
#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

using Matrix3 = std::array<std::array<double, 3>, 3>;

Matrix3 invert(const Matrix3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (det == 0.0 || !std::isfinite(det)) throw QualityError("parabolic fit: singular normal equations");
  Matrix3 inv{};
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

std::vector<double> unwrap(std::span<const std::complex<double>> z) {
  std::vector<double> phase(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double raw = std::arg(z[i]);
    if (i == 0) {
      phase[i] = raw;
      continue;
    }
    double step = std::remainder(raw - phase[i - 1], 2.0 * kPi);
    if (step <= -kPi) step += 2.0 * kPi;
    phase[i] = phase[i - 1] + step;
  }
  return phase;
}

struct LineFit {
  double intercept = 0.0;  // at u = 0
  double slope = 0.0;
  double intercept_sigma = 0.0;
};

// Weighted least squares y = intercept + slope * u.
LineFit weighted_line(std::span<const double> u, std::span<const double> y, std::span<const double> w) {
  const auto n = u.size();
  double sw = 0.0, su = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    su += w[i] * u[i];
    sy += w[i] * y[i];
  }
  const double mu = su / sw, my = sy / sw;
  double suu = 0.0, suy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    suu += w[i] * (u[i] - mu) * (u[i] - mu);
    suy += w[i] * (u[i] - mu) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = suy / suu;
  fit.intercept = my - fit.slope * mu;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * u[i];
      rss += w[i] * r * r;
    }
    // Weights normalized to a mean of one.
    const double s2 = rss / sw * static_cast<double>(n) / static_cast<double>(n - 2);
    const double norm = static_cast<double>(n) / sw;
    fit.intercept_sigma = std::sqrt(s2 * (1.0 / (sw * norm) + mu * mu / (suu * norm)));
  }
  return fit;
}

}  // namespace

Autocorrelogram autocorrelate(std::span<const double> record, double step, std::optional<std::size_t> max_lag) {
  const auto n = record.size();
  if (n < 2) throw ConfigError("autocorrelate: record needs at least two samples");
  if (!(step > 0.0)) throw ConfigError("autocorrelate: grid step must be positive");
  const auto k_max = max_lag.value_or(n - 1);
  if (k_max >= n) {
    throw ConfigError("autocorrelate: record too short for max lag " + std::to_string(k_max) + " (" +
                      std::to_string(n) + " samples)");
  }

  const double mean = std::accumulate(record.begin(), record.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(record.begin(), record.end());
  for (auto& v : centered) v -= mean;

  const auto r = dsp::autocorrelation(centered, k_max);
  if (!(r[0] > 0.0)) throw QualityError("autocorrelate: record has zero variance");

  Autocorrelogram acf;
  acf.lag_step = step;
  acf.max_lag = k_max;
  acf.values.resize(2 * k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) {
    acf.values[k_max + k] = acf.values[k_max - k] = r[k] / r[0];
  }
  acf.values[k_max] = 1.0;

  const auto peak = std::max_element(acf.values.begin(), acf.values.end(),
                                     [](double a, double b) { return std::abs(a) < std::abs(b); });
  if (std::abs(*peak) > 1.0 + 1e-9) throw QualityError("autocorrelate: zero-lag value is not the global maximum");
  return acf;
}

Autocorrelogram autocorrelate(const CalibratedRecord& record, std::optional<std::size_t> max_lag) {
  return autocorrelate(record.intensity, record.step, max_lag);
}

namespace {

EnvelopeSamples slice_envelope(const Autocorrelogram& acf, std::span<const std::complex<double>> analytic,
                               double around_lag, double half_window) {
  const double lo_lag = (around_lag - half_window) / acf.lag_step;
  const double hi_lag = (around_lag + half_window) / acf.lag_step;
  const auto k = static_cast<double>(acf.max_lag);
  if (!(half_window > 0.0) || lo_lag < -k || hi_lag > k) {
    throw ConfigError("envelope: window outside the lag range");
  }
  const auto lo = static_cast<std::size_t>(std::ceil(lo_lag + k));
  const auto hi = static_cast<std::size_t>(std::floor(hi_lag + k));
  EnvelopeSamples out;
  const auto window = analytic.subspan(lo, hi - lo + 1);
  for (std::size_t i = lo; i <= hi; ++i) {
    out.lags.push_back(acf.lag(i));
    out.values.push_back(std::abs(analytic[i]));
  }
  out.phase = unwrap(window);
  return out;
}

}  // namespace

EnvelopeSamples envelope(const Autocorrelogram& acf, double around_lag, double half_window) {
  const auto analytic = dsp::analytic_signal(acf.values);
  return slice_envelope(acf, analytic, around_lag, half_window);
}

ParabolaFit parabolic_peak_fit(std::span<const double> x, std::span<const double> y) {
  const auto n = x.size();
  if (n < 3 || y.size() != n) throw ConfigError("parabolic fit: needs at least three (x, y) pairs");

  ParabolaFit fit;
  fit.x_ref = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
  fit.window_low = *xmin;
  fit.window_high = *xmax;
  double scale = 0.5 * (*xmax - *xmin);
  if (!(scale > 0.0)) throw ConfigError("parabolic fit: abscissae must not all coincide");

  // Normal equations in v = (x - x_ref) / scale for conditioning.
  Matrix3 ata{};
  std::array<double, 3> aty{};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = (x[i] - fit.x_ref) / scale;
    const std::array<double, 3> row{v * v, v, 1.0};
    for (int r = 0; r < 3; ++r) {
      aty[r] += row[r] * y[i];
      for (int c = 0; c < 3; ++c) ata[r][c] += row[r] * row[c];
    }
  }
  const auto inv = invert(ata);
  std::array<double, 3> coef{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) coef[r] += inv[r][c] * aty[c];
  }
  const double av = coef[0], bv = coef[1], cv = coef[2];
  if (!(av < 0.0)) throw QualityError("parabolic fit: fitted parabola is not concave");

  fit.a = av / (scale * scale);
  fit.b = bv / scale;
  fit.c = cv;
  const double vertex_v = -bv / (2.0 * av);
  fit.vertex = fit.x_ref + scale * vertex_v;

  if (n > 3) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = (x[i] - fit.x_ref) / scale;
      const double r = y[i] - (av * v * v + bv * v + cv);
      rss += r * r;
    }
    const double s2 = rss / static_cast<double>(n - 3);
    const std::array<double, 3> g{bv / (2.0 * av * av), -1.0 / (2.0 * av), 0.0};
    double var = 0.0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) var += g[r] * inv[r][c] * g[c];
    }
    fit.uncertainty = scale * std::sqrt(std::max(0.0, s2 * var));
  }
  return fit;
}

MeasureOptions MeasureOptions::for_spectrum(const Spectrum& spectrum) {
  MeasureOptions o;
  o.lambda0 = spectrum.lambda0();
  return o.resolved(spectrum.coherence_length());
}

MeasureOptions MeasureOptions::resolved(double coherence_length) const {
  MeasureOptions o = *this;
  if (o.fit_half_window == 0.0) o.fit_half_window = coherence_length;
  if (o.min_separation == 0.0) o.min_separation = 2.0 * o.fit_half_window;
  return o;
}

MeasurementReport estimate_separations(const Autocorrelogram& acf, std::size_t expected_count,
                                       const MeasureOptions& options) {
  MeasurementReport report;
  if (expected_count == 0) return report;
  if (!(options.fit_half_window > 0.0) || !(options.lambda0 > 0.0)) {
    throw ConfigError("estimate_separations: fit window and carrier wavelength must be positive");
  }
  const double min_sep = options.min_separation > 0.0 ? options.min_separation : 2.0 * options.fit_half_window;

  const auto analytic = dsp::analytic_signal(acf.values);
  const auto k0 = acf.max_lag;
  const auto half = static_cast<std::size_t>(std::floor(options.fit_half_window / acf.lag_step));
  const auto first = static_cast<std::size_t>(std::ceil(min_sep / acf.lag_step));
  if (half < 1 || k0 < half || first + half >= k0) {
    throw InsufficientPeaksError("estimate_separations: lag range too short to search for peaks");
  }
  const auto last = k0 - half;  // inclusive; keeps the fit window inside the lag range

  std::vector<double> env(last - first + 1);
  for (std::size_t k = first; k <= last; ++k) env[k - first] = std::abs(analytic[k0 + k]);

  std::vector<double> sorted = env;
  auto mid = sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2);
  std::nth_element(sorted.begin(), mid, sorted.end());
  const double threshold = std::max(options.min_peak_height, options.noise_floor_factor * *mid);

  std::vector<std::uint8_t> suppressed(env.size(), 0);
  const auto suppress_radius = static_cast<std::size_t>(std::ceil(min_sep / acf.lag_step));
  for (std::size_t found = 0; found < expected_count; ++found) {
    std::size_t best = env.size();
    for (std::size_t i = 0; i < env.size(); ++i) {
      if (!suppressed[i] && (best == env.size() || env[i] > env[best])) best = i;
    }
    if (best == env.size() || !(env[best] > threshold)) {
      throw InsufficientPeaksError("insufficient peaks: found " + std::to_string(found) + " of " +
                                   std::to_string(expected_count) + " autocorrelation peak clusters above the noise floor");
    }
    const auto lo = best >= suppress_radius ? best - suppress_radius : 0;
    const auto hi = std::min(env.size() - 1, best + suppress_radius);
    std::fill(suppressed.begin() + static_cast<std::ptrdiff_t>(lo), suppressed.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 1);

    const double center = static_cast<double>(first + best) * acf.lag_step;
    const auto window = slice_envelope(acf, analytic, center, static_cast<double>(half) * acf.lag_step);

    PeakEstimate est;
    est.peak_height = env[best];
    est.envelope_fit = parabolic_peak_fit(window.lags, window.values);
    const double vertex = est.envelope_fit.vertex;
    if (vertex < window.lags.front() || vertex > window.lags.back()) {
      throw QualityError("estimate_separations: envelope vertex outside the fit window");
    }

    // Fringe maxima sit where the carrier phase is a multiple of 2 pi.
    const double seed = vertex + options.refinement_seed_offset;
    std::vector<double> u(window.lags.size()), w(window.lags.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = window.lags[i] - seed;
      w[i] = window.values[i] * window.values[i];
    }
    const auto line = weighted_line(u, window.phase, w);
    if (!(line.slope > 0.0)) throw QualityError("estimate_separations: carrier phase slope is not positive");
    const double m = std::round(line.intercept / (2.0 * kPi));
    est.carrier_refinement = seed + (2.0 * kPi * m - line.intercept) / line.slope;
    est.fringe_period = 2.0 * kPi / line.slope;
    est.separation = est.carrier_refinement;
    est.uncertainty = line.intercept_sigma / line.slope;
    est.outlier_flag = std::abs(est.carrier_refinement - vertex) > 0.25 * options.lambda0;
    report.separations.push_back(est);
  }

  std::sort(report.separations.begin(), report.separations.end(),
            [](const PeakEstimate& a, const PeakEstimate& b) { return a.separation < b.separation; });
  return report;
}

}  // namespace qolcr
