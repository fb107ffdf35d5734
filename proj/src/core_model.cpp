#include "qolcr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qolcr/errors.hpp"

namespace qolcr {

namespace {

// FWHM = kFwhmPerSigma * sigma for a Gaussian.
const double kFwhmPerSigma = 2.0 * std::sqrt(2.0 * std::log(2.0));

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

Sample::Sample(std::vector<Surface> surfaces) : surfaces_(std::move(surfaces)) {
  if (surfaces_.empty()) {
    throw ConfigError("sample must contain at least one surface");
  }
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const auto& s = surfaces_[i];
    if (!(s.r >= 0.0 && s.r <= 1.0)) {
      throw ConfigError("surface " + std::to_string(i) + ": reflection amplitude must lie in [0, 1]");
    }
    if (!std::isfinite(s.z)) {
      throw ConfigError("surface " + std::to_string(i) + ": position must be finite");
    }
    if (i > 0 && !(s.z > surfaces_[i - 1].z)) {
      throw ConfigError("surface " + std::to_string(i) + ": positions must be strictly increasing");
    }
  }
}

double Sample::min_gap() const noexcept {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < surfaces_.size(); ++i) {
    gap = std::min(gap, surfaces_[i].z - surfaces_[i - 1].z);
  }
  return gap;
}

double Sample::sum_r() const noexcept {
  return std::accumulate(surfaces_.begin(), surfaces_.end(), 0.0,
                         [](double acc, const Surface& s) { return acc + s.r; });
}

Sample Sample::with_surface_moved(std::size_t index, double dz) const {
  if (index >= surfaces_.size()) {
    throw ConfigError("surface index " + std::to_string(index) + " out of range");
  }
  auto moved = surfaces_;
  moved[index].z += dz;
  return Sample(std::move(moved));
}

Sample Sample::shifted(double dz) const {
  auto moved = surfaces_;
  for (auto& s : moved) s.z += dz;
  return Sample(std::move(moved));
}

Sample Sample::scaled(double alpha) const {
  auto scaled = surfaces_;
  for (auto& s : scaled) s.r *= alpha;
  return Sample(std::move(scaled));
}

Spectrum::Spectrum(double lambda0, double bandwidth, double power)
    : lambda0_(lambda0), bandwidth_(bandwidth), power_(power) {
  require_positive(lambda0, "spectrum center wavelength");
  require_positive(bandwidth, "spectrum bandwidth");
  require_positive(power, "spectrum power");
  if (bandwidth >= lambda0) {
    throw ConfigError("spectrum bandwidth must be smaller than the center wavelength");
  }
  omega0_ = 2.0 * kPi * kSpeedOfLight / lambda0;
  fwhm_omega_ = 2.0 * kPi * kSpeedOfLight * bandwidth / (lambda0 * lambda0);
  sigma_omega_ = fwhm_omega_ / kFwhmPerSigma;
}

double Spectrum::coherence_time() const noexcept { return kFwhmPerSigma / sigma_omega_; }

double Spectrum::coherence_length() const noexcept { return 0.5 * kSpeedOfLight * coherence_time(); }

PumpReference::PumpReference(double lambda_p) : lambda_p_(lambda_p) {
  require_positive(lambda_p, "pump wavelength");
}

void PumpReference::check_degenerate(const Spectrum& spectrum, double tolerance) const {
  const double expected = 2.0 * spectrum.omega0();
  const double rel = std::abs(omega_p() - expected) / expected;
  if (!(rel <= tolerance)) {
    throw ConfigError("pump frequency is not twice the spectral center frequency (relative mismatch " +
                      std::to_string(rel) + ")");
  }
}

double surface_delay(double z) noexcept { return 2.0 * z / kSpeedOfLight; }

std::complex<double> transfer_function(const Sample& sample, double omega) {
  std::complex<double> h{0.0, 0.0};
  for (const auto& s : sample.surfaces()) {
    h += s.r * std::polar(1.0, omega * surface_delay(s.z));
  }
  return h;
}

double spectrum_density(const Spectrum& spectrum, double Omega) noexcept {
  const double sigma = spectrum.sigma_omega();
  const double x = Omega / sigma;
  return spectrum.power() / (sigma * std::sqrt(2.0 * kPi)) * std::exp(-0.5 * x * x);
}

std::complex<double> coherence_envelope(const Spectrum& spectrum, double tau) noexcept {
  const double x = spectrum.sigma_omega() * tau;
  return {spectrum.power() / (2.0 * kPi) * std::exp(-0.5 * x * x), 0.0};
}

double response_function(const Spectrum& spectrum, double tau) noexcept {
  const auto s = coherence_envelope(spectrum, tau);
  return 2.0 * std::real(s * std::polar(1.0, -spectrum.omega0() * tau));
}

}  // namespace qolcr
