#pragma once

#include <string>
#include <vector>

#include "steer/audio/equalizer.hpp"
#include "steer/audio/formant.hpp"
#include "steer/audio/pitch.hpp"

namespace steer::audio {

struct PerturbConfig {
  double formant_lo = 0.8408964152537145;  // 2^-0.25
  double formant_hi = 1.189207115002721;   // 2^0.25
  double f0_lo = 0.8408964152537145;
  double f0_hi = 1.189207115002721;
  EqConfig eq;
  double gate_threshold = 0.3;
  StftConfig stft;

  void validate() const;
};

struct PerturbParams {
  double gamma = 0.0;
  bool applied = false;
  double formant_factor = 1.0;
  double f0_factor = 1.0;
  std::vector<EqBand> bands;

  // One parameter-log record; `input` names the source file.
  std::string to_json(const std::string& input) const;
};

// gamma ~ U(0, 1); the factors and bands are drawn only when gamma exceeds the
// threshold.
PerturbParams draw_perturb_params(const PerturbConfig& config, int sample_rate, Rng& rng);

// Formant shift, then pitch shift, then EQ. Returns the input unchanged when
// params.applied is false.
Waveform apply_perturb(const Waveform& wave, const PerturbParams& params, const PerturbConfig& config);

struct PerturbOutcome {
  Waveform wave;
  PerturbParams params;
};

PerturbOutcome perturb(const Waveform& wave, const PerturbConfig& config, Rng& rng);

}  // namespace steer::audio
