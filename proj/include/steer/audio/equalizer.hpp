#pragma once

#include <vector>

#include "steer/audio/wav.hpp"
#include "steer/rng.hpp"

namespace steer::audio {

struct EqBand {
  double freq_hz = 1000.0;
  double gain_db = 0.0;
  double q = 1.0;
};

struct EqConfig {
  int n_bands = 3;
  double freq_lo = 100.0;
  double freq_hi = 6000.0;
  double gain_lo_db = -6.0;
  double gain_hi_db = 6.0;
  double q_lo = 0.5;
  double q_hi = 2.0;

  void validate() const;
};

// RBJ cookbook peaking section, normalized so a0 = 1.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  static Biquad peaking(double freq_hz, double gain_db, double q, int sample_rate);
  // Direct Form I over the whole signal from zero state.
  void process(std::vector<double>& x) const;
  double magnitude_at(double freq_hz, int sample_rate) const;
};

// Center frequency (log-uniform), gain (uniform dB) and Q (uniform) per band;
// centers are clamped to 0.45 * sample_rate.
std::vector<EqBand> draw_eq_bands(const EqConfig& config, int sample_rate, Rng& rng);

// Cascade of peaking sections; no clipping guard (linear).
std::vector<double> apply_eq_linear(const std::vector<double>& x, const std::vector<EqBand>& bands, int sample_rate);
Waveform apply_eq(const Waveform& wave, const std::vector<EqBand>& bands);
Waveform random_eq(const Waveform& wave, const EqConfig& config, Rng& rng);

}  // namespace steer::audio
