#pragma once

// Reference implementations used as test oracles. Deliberately naive and
// independent of the library's FFT-based code paths.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

inline std::vector<cplx> direct_dft(std::span<const cplx> x, int sign = -1) {
  const std::size_t n = x.size();
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    cplx acc{0.0, 0.0};
    for (std::size_t m = 0; m < n; ++m) {
      const double arg = sign * 2.0 * pi * static_cast<double>((k * m) % n) / static_cast<double>(n);
      acc += x[m] * cplx(std::cos(arg), std::sin(arg));
    }
    out[k] = acc;
  }
  return out;
}

/// Recursive radix-2 forward transform; n must be a power of two.
inline void radix2(std::vector<cplx>& a) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  std::vector<cplx> even(n / 2), odd(n / 2);
  for (std::size_t i = 0; i < n / 2; ++i) {
    even[i] = a[2 * i];
    odd[i] = a[2 * i + 1];
  }
  radix2(even);
  radix2(odd);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const cplx t = std::polar(1.0, -2.0 * pi * static_cast<double>(k) / static_cast<double>(n)) * odd[k];
    a[k] = even[k] + t;
    a[k + n / 2] = even[k] - t;
  }
}

/// Mean-subtracted, A(0)-normalized autocorrelation by direct summation, lags 0..max_lag.
inline std::vector<double> direct_autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += (x[i] - mean) * (x[i + k] - mean);
    r[k] = acc;
  }
  const double r0 = r[0];
  for (double& v : r) v /= r0;
  return r;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  double acc = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) acc += f(a + h * static_cast<double>(i));
  return acc * h;
}

inline cplx trapezoid_complex(const std::function<cplx(double)>& f, double a, double b, std::size_t n) {
  const double h = (b - a) / static_cast<double>(n);
  cplx acc = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) acc += f(a + h * static_cast<double>(i));
  return acc * h;
}

/// Root of g on [lo, hi] by bisection; g(lo) and g(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iterations = 200) {
  double glo = g(lo);
  if (glo * g(hi) > 0.0) throw std::invalid_argument("bisect: no sign change");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// |sum_n w_n x_n exp(-2 pi i f d_n)| with a Hann taper over the index range.
inline double dtft_magnitude(std::span<const double> d, std::span<const double> x, double f) {
  const std::size_t n = x.size();
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
    acc += w * x[i] * std::polar(1.0, -2.0 * pi * f * d[i]);
  }
  return std::abs(acc);
}

/// Frequency (cycles per unit of d) of the strongest spectral line of x
/// sampled at positions d (not necessarily uniform). Coarse search with a
/// zero-padded radix-2 periodogram over the index axis scaled by the mean
/// spacing, then golden-section refinement of the exact DTFT.
inline double dominant_frequency(std::span<const double> d, std::span<const double> x) {
  const std::size_t n = x.size();
  const double mean_spacing = (d.back() - d.front()) / static_cast<double>(n - 1);
  std::size_t m = 1;
  while (m < 4 * n) m <<= 1;
  std::vector<cplx> buf(m, cplx{0.0, 0.0});
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(i) / static_cast<double>(n - 1));
    buf[i] = w * (x[i] - mean);
  }
  radix2(buf);
  std::size_t best = 1;
  for (std::size_t k = 1; k < m / 2; ++k) {
    if (std::abs(buf[k]) > std::abs(buf[best])) best = k;
  }
  const double df = 1.0 / (static_cast<double>(m) * mean_spacing);
  double lo = (static_cast<double>(best) - 2.0) * df;
  double hi = (static_cast<double>(best) + 2.0) * df;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = hi - g * (hi - lo);
  double b = lo + g * (hi - lo);
  double fa = dtft_magnitude(d, x, a);
  double fb = dtft_magnitude(d, x, b);
  for (int it = 0; it < 80; ++it) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = dtft_magnitude(d, x, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = dtft_magnitude(d, x, b);
    }
  }
  return 0.5 * (lo + hi);
}

/// Least-squares line y = a + b x; returns {a, b}.
inline std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  return {my - b * mx, b};
}

inline double rms(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / static_cast<double>(v.size()));
}

/// RMS of v after removing its mean.
inline double rms_about_mean(std::span<const double> v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace oracle
