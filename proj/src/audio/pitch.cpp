#include "steer/audio/pitch.hpp"

#include <cmath>
#include <numbers>

#include "steer/audio/resample.hpp"

namespace steer::audio {

namespace {

double princarg(double phase) {
  return phase - 2.0 * std::numbers::pi * std::round(phase / (2.0 * std::numbers::pi));
}

}  // namespace

std::vector<double> time_stretch(const std::vector<double>& x, double stretch, const StftConfig& config) {
  config.validate();
  if (!(stretch > 0.0)) throw AudioError("time_stretch: stretch must be positive");
  const int n = config.window;
  const int hs = config.hop;
  const std::size_t half = static_cast<std::size_t>(n / 2);
  const auto out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * stretch));
  const std::size_t frames = out_len / hs + 1;
  const std::size_t bins = static_cast<std::size_t>(n / 2 + 1);
  const auto w = hann_window(n);

  auto analysis_frame = [&](std::ptrdiff_t start) {
    std::vector<double> frame(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::ptrdiff_t t = start + i;
      frame[i] = (t >= 0 && t < static_cast<std::ptrdiff_t>(x.size())) ? x[static_cast<std::size_t>(t)] * w[i] : 0.0;
    }
    return rfft(frame);
  };

  Spectrogram out(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins));
  std::vector<double> prev_phase(bins), synth_phase(bins);
  std::ptrdiff_t prev_start = 0;
  for (std::size_t m = 0; m < frames; ++m) {
    const auto start = static_cast<std::ptrdiff_t>(std::llround(static_cast<double>(m * hs) / stretch)) -
                       static_cast<std::ptrdiff_t>(half);
    const auto spec = analysis_frame(start);
    const double ha = static_cast<double>(start - prev_start);
    for (std::size_t k = 0; k < bins; ++k) {
      const double phase = std::arg(spec[static_cast<Eigen::Index>(k)]);
      if (m == 0) {
        synth_phase[k] = phase;
      } else {
        const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) / n;
        const double inst = ha > 0.0 ? omega + princarg(phase - prev_phase[k] - omega * ha) / ha : omega;
        synth_phase[k] += inst * hs;
      }
      prev_phase[k] = phase;
      out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) =
          std::polar(std::abs(spec[static_cast<Eigen::Index>(k)]), synth_phase[k]);
    }
    prev_start = start;
  }
  return istft(out, config, out_len);
}

Waveform pitch_shift(const Waveform& wave, double k, const StftConfig& config) {
  wave.validate();
  if (!(k >= 0.5 && k <= 2.0)) throw AudioError("pitch_shift: factor " + std::to_string(k) + " outside [0.5, 2]");
  if (wave.size() < static_cast<std::size_t>(config.window)) {
    throw AudioError("pitch_shift: input shorter than one analysis window");
  }
  const auto stretched = time_stretch(wave.samples, k, config);
  Waveform out{resample_to_length(stretched, wave.size()), wave.sample_rate};
  soft_clip_guard(out);
  return out;
}

}  // namespace steer::audio
