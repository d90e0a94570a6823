#include <gtest/gtest.h>

#include <numbers>

#include "signals.hpp"
#include "steer/audio/equalizer.hpp"
#include "steer/audio/f0.hpp"
#include "steer/audio/formant.hpp"
#include "steer/audio/pitch.hpp"
#include "steer/audio/resample.hpp"
#include "steer/audio/stft.hpp"
#include "test_support.hpp"

using namespace steer;
using namespace steer::audio;

TEST(Stft, RoundTripIsNearExact) {
  Rng r(1);
  std::vector<double> x(5000);
  for (auto& v : x) v = r.normal() * 0.1;
  const StftConfig c{512, 128};
  const auto spec = stft(x, c);
  EXPECT_EQ(spec.cols(), 257);
  const auto y = istft(spec, c, x.size());
  ASSERT_EQ(y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y[i], x[i], 1e-10);
}

TEST(Stft, RfftMatchesDirectDft) {
  Rng r(2);
  std::vector<double> x(16);
  for (auto& v : x) v = r.normal();
  const auto bins = rfft(x);
  ASSERT_EQ(bins.size(), 9);
  for (int k = 0; k <= 8; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < 16; ++n) acc += x[n] * std::polar(1.0, -2 * std::numbers::pi * k * n / 16);
    EXPECT_NEAR(std::abs(bins[k] - acc), 0.0, 1e-12);
  }
  const auto back = irfft(bins, 16);
  for (int n = 0; n < 16; ++n) EXPECT_NEAR(back[n], x[n], 1e-12);
}

TEST(Resample, IdentityAndToneFrequency) {
  const auto w = signals::sine(300, 0.5);
  EXPECT_EQ(resample_to_length(w.samples, w.size()), w.samples);
  // Squeezing 0.5 s into 0.4 s worth of samples at the same rate raises the tone by 1.25.
  const auto y = resample_to_length(w.samples, static_cast<std::size_t>(w.size() * 0.8));
  EXPECT_NEAR(signals::amplitude_at(y, 375, 24000), 0.5, 0.02);
  EXPECT_LT(signals::amplitude_at(y, 300, 24000), 0.02);
}

TEST(F0, SineAndNoiseAndSilence) {
  EXPECT_NEAR(estimate_f0(signals::sine(220, 1.0)).median_voiced(), 220.0, 2.0);
  Rng r(3);
  Waveform noise;
  noise.samples.resize(24000);
  for (auto& v : noise.samples) v = 0.3 * r.normal();
  EXPECT_LE(estimate_f0(noise).voiced_fraction(), 0.1);
  Waveform silence;
  silence.samples.assign(24000, 0.0);
  EXPECT_EQ(estimate_f0(silence).voiced_fraction(), 0.0);
  F0Config bad;
  bad.fmin = 600;
  EXPECT_ANY_THROW(estimate_f0(silence, bad));
}

TEST(Pitch, SawtoothScalesByFactor) {
  const auto saw = signals::sawtooth(200, 1.0);
  const auto out = pitch_shift(saw, 1.25);
  EXPECT_EQ(out.size(), saw.size());
  EXPECT_NEAR(estimate_f0(out).median_voiced(), 250.0, 250.0 * 0.03);
  const auto down = pitch_shift(saw, 0.8);
  EXPECT_NEAR(estimate_f0(down).median_voiced(), 160.0, 160.0 * 0.03);
}

TEST(Pitch, UnitFactorIsNearIdentity) {
  const auto saw = signals::sawtooth(180, 0.5);
  const auto out = pitch_shift(saw, 1.0);
  EXPECT_GE(signals::snr_db(saw.samples, out.samples), 40.0);
}

TEST(Pitch, Errors) {
  const auto saw = signals::sawtooth(200, 0.2);
  EXPECT_THROW(pitch_shift(saw, 2.5), AudioError);
  EXPECT_THROW(pitch_shift(signals::sine(200, 0.01), 1.1), AudioError);
}

TEST(Formant, EnvelopePeakMovesAndF0Stays) {
  const auto v = signals::vowel(150, 800, 1.0);
  EXPECT_NEAR(signals::envelope_peak(v.samples, 150, 24000), 800, 800 * 0.02);
  const auto out = formant_shift(v, 1.2);
  EXPECT_EQ(out.size(), v.size());
  EXPECT_NEAR(signals::envelope_peak(out.samples, 150, 24000), 960, 960 * 0.05);
  EXPECT_NEAR(estimate_f0(out).median_voiced(), 150, 150 * 0.03);
}

TEST(Formant, IdentityAndApproximateInverse) {
  const auto v = signals::vowel(140, 900, 0.6);
  EXPECT_GE(signals::snr_db(v.samples, formant_shift(v, 1.0).samples), 40.0);
  const auto back = formant_shift(formant_shift(v, 1.2), 1.0 / 1.2);
  EXPECT_GE(signals::snr_db(v.samples, back.samples, 1024), 20.0);
  EXPECT_THROW(formant_shift(v, 1.5), AudioError);
}

TEST(Eq, ZeroGainIsIdentity) {
  const auto w = signals::sawtooth(130, 0.3);
  const std::vector<EqBand> bands{{200, 0.0, 0.7}, {1500, 0.0, 1.3}, {5000, 0.0, 2.0}};
  const auto y = apply_eq_linear(w.samples, bands, w.sample_rate);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], w.samples[i], 1e-12);
}

TEST(Eq, SineProbeAtCenterGivesGain) {
  const auto w = signals::sine(1000, 1.0, 24000, 0.25);
  const std::vector<EqBand> band{{1000, 6.0, 1.0}};
  const auto y = apply_eq_linear(w.samples, band, 24000);
  const double ratio = signals::amplitude_at(y, 1000, 24000) / signals::amplitude_at(w.samples, 1000, 24000);
  EXPECT_NEAR(ratio, std::pow(10.0, 6.0 / 20.0), 1.995 * 0.02);
  EXPECT_NEAR(Biquad::peaking(1000, 6.0, 1.0, 24000).magnitude_at(1000, 24000), std::pow(10.0, 0.3), 1e-9);
}

TEST(Eq, LinearityAndClamp) {
  Rng r(4);
  const auto w = signals::sawtooth(100, 0.2);
  EqConfig cfg;
  const auto bands = draw_eq_bands(cfg, 24000, r);
  ASSERT_EQ(bands.size(), 3u);
  std::vector<double> scaled = w.samples;
  for (auto& v : scaled) v *= 0.3;
  const auto a = apply_eq_linear(scaled, bands, 24000);
  const auto b = apply_eq_linear(w.samples, bands, 24000);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], 0.3 * b[i], 1e-9);
  cfg.freq_lo = 9000;
  cfg.freq_hi = 11000;
  for (const auto& bnd : draw_eq_bands(cfg, 16000, r)) EXPECT_LE(bnd.freq_hz, 0.45 * 16000);
}
