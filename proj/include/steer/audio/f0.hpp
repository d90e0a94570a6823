#pragma once

#include <vector>

#include "steer/audio/wav.hpp"

namespace steer::audio {

struct F0Config {
  double fmin = 50.0;
  double fmax = 500.0;
  double frame_seconds = 0.04;
  double hop_seconds = 0.01;
  double voicing_threshold = 0.5;
};

struct F0Track {
  std::vector<double> f0;  // Hz; 0 for unvoiced frames
  std::vector<bool> voiced;

  // Median over voiced frames; 0 when none.
  double median_voiced() const;
  double voiced_fraction() const;
};

// Normalized autocorrelation per frame. The lag is the first local peak
// reaching 0.9 of the frame's maximum, refined by parabolic interpolation.
F0Track estimate_f0(const Waveform& wave, const F0Config& config = {});

}  // namespace steer::audio
