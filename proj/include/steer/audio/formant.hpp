#pragma once

#include "steer/audio/stft.hpp"
#include "steer/audio/wav.hpp"

namespace steer::audio {

struct FormantConfig {
  StftConfig stft;
  double peak_radius_hz = 60.0;  // a bin is a peak if it is the maximum within this distance
};

// Magnitude envelope of one frame: log-linear interpolation between spectral
// peaks (bins that are maximal within +-radius bins), flat beyond the ends.
Eigen::RowVectorXd spectral_envelope(const Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic>& bins, int radius);

// Scales the spectral envelope along frequency by beta in [0.7, 1.4]. Each
// frame's magnitude is multiplied by E(f / beta) / E(f); phases, hop and
// sample count are unchanged, so F0 is preserved.
Waveform formant_shift(const Waveform& wave, double beta, const FormantConfig& config = {});

}  // namespace steer::audio
