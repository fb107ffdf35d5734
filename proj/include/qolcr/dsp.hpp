#pragma once

// FFT-backed signal primitives shared by the calibration and measurement
// stages. All functions are reentrant; FFTW planning is serialized internally.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qolcr::dsp {

/// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n) noexcept;

/// Unnormalized forward DFT, X_k = sum_n x_n exp(-2 pi i k n / N).
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> x);
/// Unnormalized inverse DFT, x_n = sum_k X_k exp(+2 pi i k n / N).
std::vector<std::complex<double>> ifft(std::span<const std::complex<double>> x);

/// Analytic signal x + i H{x} by one-sided spectral selection. The input is
/// zero-extended to at least twice its length before the transform.
std::vector<std::complex<double>> analytic_signal(std::span<const double> x);

/// Linear convolution y_n = sum_m h_m x_{n + c - m}, c = (len(h) - 1) / 2,
/// i.e. the centered ("same") part of the full convolution with x
/// zero-extended. For a symmetric odd-length h this is zero-phase filtering.
std::vector<double> convolve_same(std::span<const double> x, std::span<const double> h);

/// Biased autocorrelation r_k = sum_n x_n x_{n+k} for k = 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

}  // namespace qolcr::dsp
