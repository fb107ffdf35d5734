#pragma once

// Sample, source spectrum and the closed-form signal building blocks of a
// low-coherence interferometer: the sample transfer function H(w), the
// coherence envelope s(tau) and the single-surface response f(tau).
//
// Fourier convention used throughout:
//
//     s(tau) = 1/(2 pi) * Integral S(Omega) exp(-i Omega tau) dOmega
//
// With a Gaussian S(Omega) of total power S0 and rms width sigma this gives
// s(tau) = S0/(2 pi) * exp(-sigma^2 tau^2 / 2), real and even.
//
// Positions are stored in meters. Delays (seconds) only appear at formula
// boundaries via surface_delay().

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace qolcr {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s, exact
inline constexpr double kPi = 3.14159265358979323846;

struct Surface {
  double r = 0.0;  ///< reflection amplitude, 0..1
  double z = 0.0;  ///< axial position, m
};

/// Ordered stack of partially reflective surfaces (ascending z).
class Sample {
 public:
  /// Throws ConfigError unless there is at least one surface, every r is in
  /// [0, 1] and the z values are finite and strictly increasing.
  explicit Sample(std::vector<Surface> surfaces);

  std::span<const Surface> surfaces() const noexcept { return surfaces_; }
  std::size_t size() const noexcept { return surfaces_.size(); }
  const Surface& operator[](std::size_t i) const { return surfaces_[i]; }

  /// Smallest distance between neighbouring surfaces (infinity for one surface).
  double min_gap() const noexcept;
  double sum_r() const noexcept;

  /// Copy with surface `index` moved by `dz`; ordering is re-validated.
  Sample with_surface_moved(std::size_t index, double dz) const;
  /// Copy with every surface moved by `dz`.
  Sample shifted(double dz) const;
  /// Copy with every r multiplied by `alpha`.
  Sample scaled(double alpha) const;

 private:
  std::vector<Surface> surfaces_;
};

/// Gaussian power spectral density of a degenerate broadband source.
///
/// The width is given as a FWHM wavelength span at the center wavelength and
/// converted to angular frequency with the first-order relation
/// dOmega = 2 pi c dlambda / lambda0^2.
class Spectrum {
 public:
  Spectrum(double lambda0, double bandwidth, double power = 1.0);

  double lambda0() const noexcept { return lambda0_; }
  double bandwidth() const noexcept { return bandwidth_; }
  /// Total power S0 (integral of S over Omega).
  double power() const noexcept { return power_; }

  double omega0() const noexcept { return omega0_; }
  double fwhm_omega() const noexcept { return fwhm_omega_; }
  double sigma_omega() const noexcept { return sigma_omega_; }

  /// FWHM of |s(tau)|, seconds.
  double coherence_time() const noexcept;
  /// FWHM of the fringe envelope expressed as reference-mirror travel d = c tau / 2.
  double coherence_length() const noexcept;

  Spectrum with_power(double power) const { return Spectrum(lambda0_, bandwidth_, power); }

 private:
  double lambda0_;
  double bandwidth_;
  double power_;
  double omega0_;
  double fwhm_omega_;
  double sigma_omega_;
};

/// Narrowband pump laser; its wavelength is the length reference.
class PumpReference {
 public:
  explicit PumpReference(double lambda_p);

  double lambda_p() const noexcept { return lambda_p_; }
  double omega_p() const noexcept { return 2.0 * kPi * kSpeedOfLight / lambda_p_; }

  /// Throws ConfigError unless omega_p == 2 omega0 within `tolerance` (relative).
  void check_degenerate(const Spectrum& spectrum, double tolerance = 1e-6) const;

 private:
  double lambda_p_;
};

/// tau = 2 z / c.
double surface_delay(double z) noexcept;

/// H(omega) = sum_j r_j exp(i omega tau_j).
std::complex<double> transfer_function(const Sample& sample, double omega);

/// S(Omega) at relative angular frequency Omega = omega - omega0.
double spectrum_density(const Spectrum& spectrum, double Omega) noexcept;

/// s(tau), analytic inverse transform of S under the convention above.
std::complex<double> coherence_envelope(const Spectrum& spectrum, double tau) noexcept;

/// f(tau) = 2 Re{ s(tau) exp(-i omega0 tau) }.
double response_function(const Spectrum& spectrum, double tau) noexcept;

}  // namespace qolcr
