#include "steer/audio/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace steer::audio {

void EqConfig::validate() const {
  if (n_bands < 0) throw AudioError("eq: n_bands must be >= 0");
  if (!(freq_lo > 0.0 && freq_hi >= freq_lo)) throw AudioError("eq: invalid center-frequency range");
  if (!(gain_hi_db >= gain_lo_db)) throw AudioError("eq: invalid gain range");
  if (!(q_lo > 0.0 && q_hi >= q_lo)) throw AudioError("eq: invalid Q range");
}

Biquad Biquad::peaking(double freq_hz, double gain_db, double q, int sample_rate) {
  if (!(q > 0.0)) throw AudioError("peaking filter Q must be positive");
  const double f = std::min(freq_hz, 0.45 * sample_rate);
  const double a = std::pow(10.0, gain_db / 40.0);
  const double w0 = 2.0 * std::numbers::pi * f / sample_rate;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha / a;
  Biquad bq;
  bq.b0 = (1.0 + alpha * a) / a0;
  bq.b1 = (-2.0 * c) / a0;
  bq.b2 = (1.0 - alpha * a) / a0;
  bq.a1 = (-2.0 * c) / a0;
  bq.a2 = (1.0 - alpha / a) / a0;
  return bq;
}

void Biquad::process(std::vector<double>& x) const {
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
  for (auto& s : x) {
    const double y = b0 * s + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = s;
    y2 = y1;
    y1 = y;
    s = y;
  }
}

double Biquad::magnitude_at(double freq_hz, int sample_rate) const {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / sample_rate);
  const auto z2 = z1 * z1;
  return std::abs((b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2));
}

std::vector<EqBand> draw_eq_bands(const EqConfig& config, int sample_rate, Rng& rng) {
  config.validate();
  std::vector<EqBand> bands;
  for (int b = 0; b < config.n_bands; ++b) {
    EqBand band;
    band.freq_hz = std::min(rng.log_uniform(config.freq_lo, config.freq_hi), 0.45 * sample_rate);
    band.gain_db = rng.uniform(config.gain_lo_db, config.gain_hi_db);
    band.q = rng.uniform(config.q_lo, config.q_hi);
    bands.push_back(band);
  }
  return bands;
}

std::vector<double> apply_eq_linear(const std::vector<double>& x, const std::vector<EqBand>& bands, int sample_rate) {
  std::vector<double> y = x;
  for (const auto& b : bands) Biquad::peaking(b.freq_hz, b.gain_db, b.q, sample_rate).process(y);
  return y;
}

Waveform apply_eq(const Waveform& wave, const std::vector<EqBand>& bands) {
  wave.validate();
  if (wave.samples.empty()) throw AudioError("eq: empty waveform");
  Waveform out{apply_eq_linear(wave.samples, bands, wave.sample_rate), wave.sample_rate};
  soft_clip_guard(out);
  return out;
}

Waveform random_eq(const Waveform& wave, const EqConfig& config, Rng& rng) {
  return apply_eq(wave, draw_eq_bands(config, wave.sample_rate, rng));
}

}  // namespace steer::audio
