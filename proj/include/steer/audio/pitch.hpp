#pragma once

#include "steer/audio/stft.hpp"
#include "steer/audio/wav.hpp"

namespace steer::audio {

// Phase-vocoder time stretch: output length round(x.size() * stretch).
std::vector<double> time_stretch(const std::vector<double>& x, double stretch, const StftConfig& config = {});

// Scales pitch by k in [0.5, 2] and keeps the sample count: stretch by k, then
// resample back to the input length.
Waveform pitch_shift(const Waveform& wave, double k, const StftConfig& config = {});

}  // namespace steer::audio
