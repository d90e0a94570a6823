#include "steer/audio/perturb.hpp"

#include "json.hpp"

namespace steer::audio {

void PerturbConfig::validate() const {
  if (!(formant_lo >= 0.7 && formant_hi >= formant_lo && formant_hi <= 1.4)) {
    throw AudioError("perturb: formant factor range must lie in [0.7, 1.4]");
  }
  if (!(f0_lo >= 0.5 && f0_hi >= f0_lo && f0_hi <= 2.0)) throw AudioError("perturb: F0 factor range must lie in [0.5, 2]");
  if (!(gate_threshold >= 0.0 && gate_threshold <= 1.0)) throw AudioError("perturb: gate threshold outside [0, 1]");
  eq.validate();
  stft.validate();
}

std::string PerturbParams::to_json(const std::string& input) const {
  nlohmann::json bands_json = nlohmann::json::array();
  for (const auto& b : bands) bands_json.push_back({{"freq_hz", b.freq_hz}, {"gain_db", b.gain_db}, {"q", b.q}});
  nlohmann::json j{{"input", input},
                   {"gamma", gamma},
                   {"applied", applied},
                   {"formant_factor", formant_factor},
                   {"f0_factor", f0_factor},
                   {"eq_bands", bands_json}};
  return j.dump();
}

PerturbParams draw_perturb_params(const PerturbConfig& config, int sample_rate, Rng& rng) {
  config.validate();
  PerturbParams p;
  p.gamma = rng.uniform();
  p.applied = p.gamma > config.gate_threshold;
  if (!p.applied) return p;
  p.formant_factor = rng.log_uniform(config.formant_lo, config.formant_hi);
  p.f0_factor = rng.log_uniform(config.f0_lo, config.f0_hi);
  p.bands = draw_eq_bands(config.eq, sample_rate, rng);
  return p;
}

Waveform apply_perturb(const Waveform& wave, const PerturbParams& params, const PerturbConfig& config) {
  if (!params.applied) return wave;
  FormantConfig fc;
  fc.stft = config.stft;
  Waveform out = formant_shift(wave, params.formant_factor, fc);
  out = pitch_shift(out, params.f0_factor, config.stft);
  return apply_eq(out, params.bands);
}

PerturbOutcome perturb(const Waveform& wave, const PerturbConfig& config, Rng& rng) {
  auto params = draw_perturb_params(config, wave.sample_rate, rng);
  return {apply_perturb(wave, params, config), std::move(params)};
}

}  // namespace steer::audio
