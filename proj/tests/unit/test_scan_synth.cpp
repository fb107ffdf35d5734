#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qolcr/config.hpp"
#include "qolcr/errors.hpp"
#include "qolcr/scan_synth.hpp"

using namespace qolcr;

namespace {

const Spectrum kSpectrum(810e-9, 30e-9);
const PumpReference kPump(405e-9);
const Sample kTwo({{0.5, 9.886e-6}, {0.5, 290.114e-6}});

StageModel identity_stage() { return StageModel{}; }

NoiseModel noiseless() {
  NoiseModel n;
  n.poisson_enabled = false;
  n.background_rate = 0.0;
  return n;
}

std::complex<double> m3_oracle(const Sample& s, const Spectrum& sp) {
  std::complex<double> acc{0.0, 0.0};
  for (const auto& surf : s.surfaces()) {
    const double phase = 2.0 * sp.omega0() * 2.0 * surf.z / 299792458.0;
    acc += surf.r * surf.r * std::complex<double>(std::cos(phase), -std::sin(phase));
  }
  return sp.power() * acc;
}

}  // namespace

TEST(Stage, ReportedGridIsUniform) {
  const auto d = reported_positions(identity_stage(), 0.0, 60000);
  ASSERT_EQ(d.size(), 60000u);
  EXPECT_EQ(d[0], 0.0);
  const double spacing = 5e-9;
  for (std::size_t k = 1; k < d.size(); ++k) {
    ASSERT_NEAR(d[k], spacing * static_cast<double>(k), 1e-12 * d[k]);
    ASSERT_NEAR(d[k] - d[k - 1], spacing, 1e-7 * spacing);
  }
}

TEST(Stage, IdentityStageIsExact) {
  const auto rep = reported_positions(identity_stage(), 3e-6, 1000);
  const auto tru = true_positions(identity_stage(), rep);
  for (std::size_t k = 0; k < rep.size(); ++k) EXPECT_EQ(tru[k], rep[k]);
}

TEST(Stage, ScaleErrorAtFullRange) {
  StageModel st;
  st.scale_error = 1e-3;
  const auto d = true_positions(st, 60001);
  const auto rep = reported_positions(st, 0.0, 60001);
  EXPECT_NEAR(rep.back(), 300e-6, 1e-18);
  EXPECT_NEAR(d.back() - rep.back(), 300e-9, 1e-15);
}

TEST(Stage, PeriodicErrorShape) {
  StageModel st;
  st.periodic_amplitude = 100e-9;
  st.periodic_period = 50e-6;
  const auto rep = reported_positions(st, 0.0, 60000);
  const auto d = true_positions(st, rep);
  // Quarter period: 12.5 um -> sample 2500.
  EXPECT_NEAR(d[2500] - rep[2500], 100e-9, 1e-15);
  EXPECT_NEAR(d[7500] - rep[7500], -100e-9, 1e-15);
}

TEST(Stage, AggressiveDistortionIsRejected) {
  StageModel st;
  st.periodic_amplitude = 2e-6;
  st.periodic_period = 1e-6;
  EXPECT_THROW(true_positions(st, 1000), ConfigError);
  EXPECT_THROW(true_positions(st, 1), ConfigError);
}

TEST(Stage, RandomWalkIsSeededAndMonotone) {
  StageModel st = default_config().stage;
  const auto a = true_positions(st, 60000);
  const auto b = true_positions(st, 60000);
  EXPECT_EQ(a, b);
  for (std::size_t k = 1; k < a.size(); ++k) ASSERT_GT(a[k], a[k - 1]);
  st.seed += 1;
  EXPECT_NE(true_positions(st, 60000), a);
}

TEST(IntensityModel, NoFringesFarFromSurfaces) {
  const IntensityModel m(kTwo, kSpectrum);
  const double lc = kSpectrum.coherence_length();
  for (double d : {kTwo[0].z + 5.5 * lc, 150e-6, kTwo[1].z - 6 * lc}) {
    EXPECT_LT(std::abs(m.fringes(d)), 1e-12 * m.baseline());
    EXPECT_NEAR(intensity_rate(kTwo, kSpectrum, d), m.baseline(), 1e-12 * m.baseline());
  }
}

TEST(IntensityModel, ExtremumAtSurface) {
  const IntensityModel m(kTwo, kSpectrum);
  for (const auto& s : kTwo.surfaces()) {
    const double peak = m.rate(s.z);
    for (double delta : {1e-9, 10e-9, 100e-9}) {
      EXPECT_LT(m.rate(s.z + delta), peak);
      EXPECT_LT(m.rate(s.z - delta), peak);
    }
  }
}

TEST(IntensityModel, LinearInPowerAndReflectivity) {
  const IntensityModel a(kTwo, kSpectrum);
  const IntensityModel b(kTwo, kSpectrum.with_power(2.0));
  const IntensityModel c(kTwo.scaled(0.3), kSpectrum);
  for (double d : {9.886e-6, 9.9e-6, 290.2e-6}) {
    EXPECT_NEAR(b.rate(d), 2.0 * a.rate(d), 1e-15 * a.rate(d));
    EXPECT_NEAR(c.fringes(d), 0.3 * a.fringes(d), 1e-14 * std::abs(a.fringes(d)) + 1e-300);
  }
}

TEST(CoincidenceModel, M3ClosedForm) {
  const auto t = coincidence_terms(kTwo, kSpectrum, kPump);
  EXPECT_NEAR(std::abs(t.m3), std::abs(m3_oracle(kTwo, kSpectrum)), 1e-12);

  const Sample single({{1.0, 30e-6}});
  EXPECT_NEAR(std::abs(coincidence_terms(single, kSpectrum.with_power(2.5), kPump).m3), 2.5, 1e-14);

  // Quarter-pump-wavelength spacing puts the two TPI contributions in antiphase.
  const Sample cancel({{0.4, 30e-6}, {0.4, 30e-6 + 405e-9 / 4.0 + 100 * 405e-9 / 2.0}});
  EXPECT_LT(std::abs(coincidence_terms(cancel, kSpectrum, kPump).m3), 1e-9);
}

TEST(CoincidenceModel, TpiPeriodIsHalfPumpWavelength) {
  const CoincidenceModel m(kTwo, kSpectrum, kPump);
  const double amp = 2.0 * std::abs(m.terms().m3);
  for (double d : {20e-6, 123.4567e-6, 250e-6}) {
    EXPECT_NEAR(m.components(d).tpi, m.components(d + 202.5e-9).tpi, 1e-9 * amp);
    EXPECT_NEAR(m.components(d).tpi, -m.components(d + 101.25e-9).tpi, 1e-9 * amp);
  }
}

TEST(CoincidenceModel, ResidualAfterKnownTermsIsPureTpi) {
  const CoincidenceModel m(kTwo, kSpectrum, kPump);
  const auto m3 = m3_oracle(kTwo, kSpectrum);
  for (int k = 0; k < 2000; ++k) {
    const double d = 5e-6 + k * 0.1453e-6;
    const auto c = m.components(d);
    const double residual = m.rate(d) - c.baseline - c.hom - c.single_photon;
    const double phase = kPump.omega_p() * 2.0 * d / 299792458.0;
    const double expected = 2.0 * std::real(m3 * std::complex<double>(std::cos(phase), -std::sin(phase)));
    EXPECT_NEAR(residual, expected, 1e-12 * c.baseline);
  }
}

TEST(CoincidenceModel, SlowTermsDecayAwayFromCenters) {
  const CoincidenceModel m(kTwo, kSpectrum, kPump);
  const double lc = kSpectrum.coherence_length();
  const double mid = 0.5 * (kTwo[0].z + kTwo[1].z);
  double hom_peak = std::abs(m.components(mid).hom);
  double sp_peak = 0.0;
  for (int k = -100; k <= 100; ++k) sp_peak = std::max(sp_peak, std::abs(m.components(kTwo[0].z + k * 1e-9).single_photon));
  EXPECT_GT(hom_peak, 0.0);
  EXPECT_LT(std::abs(m.components(mid + 3 * lc).hom), 1e-3 * hom_peak);
  EXPECT_LT(std::abs(m.components(mid - 3 * lc).hom), 1e-3 * hom_peak);
  EXPECT_LT(std::abs(m.components(kTwo[0].z + 3 * lc).single_photon), 1e-3 * sp_peak);
  EXPECT_LT(std::abs(m.components(kTwo[1].z - 3 * lc).single_photon), 1e-3 * sp_peak);
}

TEST(CoincidenceModel, ScalingLaws) {
  const InterferenceAmplitudes amps;
  const CoincidenceModel a(kTwo, kSpectrum, kPump, amps);
  const CoincidenceModel b(kTwo, kSpectrum.with_power(2.0), kPump, amps);
  const CoincidenceModel c(kTwo.scaled(0.5), kSpectrum, kPump, amps);
  EXPECT_NEAR(std::abs(c.terms().m3), 0.25 * std::abs(a.terms().m3), 1e-15);
  for (double d : {9.9e-6, 150e-6, 290.1e-6}) {
    const auto ca = a.components(d);
    const auto cb = b.components(d);
    EXPECT_NEAR(cb.total(), 2.0 * ca.total(), 1e-14 * ca.total());
    EXPECT_NEAR(cb.tpi, 2.0 * ca.tpi, 1e-14 * ca.baseline);
    EXPECT_NEAR(coincidence_rate(kTwo, kSpectrum, kPump, amps, d), ca.total(), 1e-15 * ca.total());
  }
}

TEST(SimulateScan, DefaultGridAndTruth) {
  const auto cfg = default_config();
  const auto t = simulate_scan(cfg.sample(), cfg.spectrum(), cfg.pump(), cfg.stage, cfg.noise, cfg.scan);
  ASSERT_EQ(t.size(), 60000u);
  ASSERT_TRUE(t.truth.has_value());
  EXPECT_EQ(t.intensity.size(), 60000u);
  EXPECT_EQ(t.coincidence.size(), 60000u);
  EXPECT_EQ(t.truth->true_d.size(), 60000u);
  EXPECT_NEAR(t.spacing(), 5e-9, 1e-20);
  EXPECT_EQ(t.metadata.surfaces.size(), 2u);
  EXPECT_EQ(t.metadata.noise_seed, cfg.noise.seed);
  for (double v : t.intensity) ASSERT_EQ(v, std::floor(v));
}

TEST(SimulateScan, NoiselessPassthroughAndBaselineScale) {
  NoiseModel n = noiseless();
  n.singles_scale = 500.0;
  n.coincidence_scale = 40.0;
  const auto t = simulate_scan(kTwo, kSpectrum, kPump, identity_stage(), n, ScanRange{});
  EXPECT_EQ(t.intensity, t.truth->intensity);
  EXPECT_EQ(t.coincidence, t.truth->coincidence);
  // Fringe-free region: intensity is at the baseline scale exactly up to roundoff.
  EXPECT_NEAR(t.intensity[30000], 500.0, 1e-9);
  // Coincidence midway carries the HOM dip; away from it M sits at baseline +- TPI.
  const auto k = 15000u;
  EXPECT_NEAR(t.coincidence[k] - t.truth->tpi[k], 40.0, 1e-9);
}

TEST(SimulateScan, IntensitySymmetricAboutIsolatedSurface) {
  // Surface on a grid point of the ideal stage.
  const Sample s({{0.7, 100e-6}});
  const auto t = simulate_scan(s, kSpectrum, kPump, identity_stage(), noiseless(), ScanRange{});
  const std::size_t k0 = 20000;
  ASSERT_NEAR(t.reported_d[k0], 100e-6, 1e-18);
  double amp = 0.0;
  for (double v : t.intensity) amp = std::max(amp, std::abs(v - 1000.0));
  for (std::size_t j = 1; j < 5000; ++j) {
    ASSERT_NEAR(t.intensity[k0 + j], t.intensity[k0 - j], 1e-6 * amp);
  }
}

TEST(SimulateScan, PoissonMeanOfOneBin) {
  const Sample s({{0.5, 0.5e-6}});
  NoiseModel n;
  n.background_rate = 1.0;
  const ScanRange range{0.0, 1e-6};
  const std::size_t bin = 100;
  const int reps = 10000;
  double sum = 0.0;
  double expected = 0.0;
  for (int r = 0; r < reps; ++r) {
    n.seed = static_cast<std::uint64_t>(r) + 1;
    const auto t = simulate_scan(s, kSpectrum, kPump, identity_stage(), n, range, {}, 0.0);
    sum += t.intensity[bin];
    expected = t.truth->intensity[bin];
  }
  const double mean = sum / reps;
  EXPECT_NEAR(mean, expected, 3.0 * std::sqrt(expected) / 100.0);
}

TEST(SimulateScan, DeterministicGivenSeeds) {
  const auto cfg = default_config();
  const auto a = simulate_scan(cfg.sample(), cfg.spectrum(), cfg.pump(), cfg.stage, cfg.noise, cfg.scan);
  const auto b = simulate_scan(cfg.sample(), cfg.spectrum(), cfg.pump(), cfg.stage, cfg.noise, cfg.scan);
  EXPECT_EQ(a.intensity, b.intensity);
  EXPECT_EQ(a.coincidence, b.coincidence);
  EXPECT_EQ(a.truth->true_d, b.truth->true_d);
  auto noise = cfg.noise;
  noise.seed += 1;
  const auto c = simulate_scan(cfg.sample(), cfg.spectrum(), cfg.pump(), cfg.stage, noise, cfg.scan);
  EXPECT_NE(a.intensity, c.intensity);
  EXPECT_EQ(a.truth->intensity, c.truth->intensity);
}

TEST(SimulateScan, RejectsInvalidSetups) {
  const auto n = noiseless();
  EXPECT_THROW(simulate_scan(kTwo, kSpectrum, kPump, identity_stage(), n, ScanRange{0.0, 0.0}), ConfigError);
  EXPECT_THROW(simulate_scan(kTwo, kSpectrum, PumpReference(406e-9), identity_stage(), n, ScanRange{}),
               ConfigError);
  // Surface too close to the scan edge for the requested margin.
  EXPECT_THROW(simulate_scan(Sample({{0.5, 5e-6}}), kSpectrum, kPump, identity_stage(), n, ScanRange{}),
               ConfigError);
  EXPECT_THROW(simulate_scan(kTwo, kSpectrum, kPump, identity_stage(), n, ScanRange{}, {}, 5.0), ConfigError);
  InterferenceAmplitudes weak;
  weak.baseline_factor = 0.2;
  EXPECT_THROW(simulate_scan(kTwo, kSpectrum, kPump, identity_stage(), n, ScanRange{}, weak), ConfigError);
  NoiseModel bad = n;
  bad.singles_scale = -1.0;
  EXPECT_THROW(simulate_scan(kTwo, kSpectrum, kPump, identity_stage(), bad, ScanRange{}), ConfigError);
}

// Pinned against libstdc++'s std::normal_distribution and std::poisson_distribution.
TEST(Regression, DefaultStageAndCounts) {
  const auto c = default_config();
  const auto rep = reported_positions(c.stage, 0.0, 60000);
  const auto tru = true_positions(c.stage, rep);
  const std::pair<std::size_t, double> stage_pins[] = {{0, 1.1857874593419865e-09},
                                                       {1, 6.2059468413167624e-09},
                                                       {12345, 6.1765642959303924e-05},
                                                       {30000, 0.00015003046778024732},
                                                       {59999, 0.00030006292816105959}};
  for (const auto& [k, v] : stage_pins) EXPECT_NEAR(tru[k], v, 1e-12 * std::abs(v) + 1e-21) << k;
  const auto t = simulate_scan(c.sample(), c.spectrum(), c.pump(), c.stage, c.noise, c.scan, c.amplitudes);
  EXPECT_EQ(t.intensity[0], 1004.0);
  EXPECT_EQ(t.coincidence[0], 8.0);
  EXPECT_EQ(t.intensity[1977], 1385.0);
  EXPECT_EQ(t.intensity[30000], 1000.0);
  EXPECT_EQ(t.coincidence[30000], 10.0);
  EXPECT_EQ(t.intensity[59999], 1011.0);
  EXPECT_EQ(t.coincidence[59999], 6.0);
}
