#pragma once

// Constructed test signals and a direct-projection spectrum probe.

#include <cmath>
#include <numbers>
#include <vector>

#include "steer/audio/wav.hpp"

namespace steer::signals {

inline audio::Waveform sine(double hz, double seconds, int rate = 24000, double amp = 0.5) {
  audio::Waveform w;
  w.sample_rate = rate;
  w.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t n = 0; n < w.samples.size(); ++n)
    w.samples[n] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(n) / rate);
  return w;
}

// Band-limited sawtooth (all harmonics below Nyquist, amplitude 1/h).
inline audio::Waveform sawtooth(double hz, double seconds, int rate = 24000) {
  audio::Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<std::size_t>(seconds * rate), 0.0);
  for (int h = 1; h * hz < rate / 2.0; ++h)
    for (std::size_t n = 0; n < w.samples.size(); ++n)
      w.samples[n] += 0.3 / h * std::sin(2 * std::numbers::pi * h * hz * static_cast<double>(n) / rate);
  return w;
}

// Harmonic source whose harmonic amplitudes follow a Gaussian envelope
// centered at formant_hz, so log amplitude is exactly parabolic in frequency.
inline audio::Waveform vowel(double f0, double formant_hz, double seconds, int rate = 24000, double width = 250.0) {
  audio::Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<std::size_t>(seconds * rate), 0.0);
  for (int h = 1; h * f0 < rate / 2.0; ++h) {
    const double f = h * f0;
    const double a = 0.15 * std::exp(-(f - formant_hz) * (f - formant_hz) / (2 * width * width)) + 1e-4;
    for (std::size_t n = 0; n < w.samples.size(); ++n)
      w.samples[n] += a * std::sin(2 * std::numbers::pi * f * static_cast<double>(n) / rate + 0.7 * h);
  }
  return w;
}

// Amplitude of the component at `hz`, by Hann-weighted projection over the
// central part of the signal.
inline double amplitude_at(const std::vector<double>& x, double hz, int rate) {
  const std::size_t lo = x.size() / 4, hi = 3 * x.size() / 4;
  double c = 0, s = 0, wsum = 0;
  for (std::size_t n = lo; n < hi; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * static_cast<double>(n - lo) / static_cast<double>(hi - lo));
    const double ph = 2 * std::numbers::pi * hz * static_cast<double>(n) / rate;
    c += w * x[n] * std::cos(ph);
    s += w * x[n] * std::sin(ph);
    wsum += w;
  }
  return 2 * std::hypot(c, s) / wsum;
}

// Envelope peak from harmonic amplitudes: the strongest harmonic and its
// neighbours, parabolic in log amplitude.
inline double envelope_peak(const std::vector<double>& x, double f0, int rate) {
  std::vector<double> amp;
  for (int h = 1; h * f0 < 4000; ++h) amp.push_back(std::log(amplitude_at(x, h * f0, rate) + 1e-12));
  std::size_t k = 1;
  for (std::size_t i = 1; i + 1 < amp.size(); ++i)
    if (amp[i] > amp[k]) k = i;
  const double y0 = amp[k - 1], y1 = amp[k], y2 = amp[k + 1];
  const double delta = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2);
  return (static_cast<double>(k + 1) + delta) * f0;
}

inline double snr_db(const std::vector<double>& ref, const std::vector<double>& out, std::size_t trim = 0) {
  double num = 0, den = 0;
  for (std::size_t i = trim; i + trim < ref.size(); ++i) {
    num += ref[i] * ref[i];
    den += (ref[i] - out[i]) * (ref[i] - out[i]);
  }
  return 10 * std::log10(num / den);
}

}  // namespace steer::signals
