#include "steer/audio/f0.hpp"

#include <algorithm>
#include <cmath>

namespace steer::audio {

double F0Track::median_voiced() const {
  std::vector<double> v;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (voiced[i]) v.push_back(f0[i]);
  }
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double F0Track::voiced_fraction() const {
  if (voiced.empty()) return 0.0;
  return static_cast<double>(std::count(voiced.begin(), voiced.end(), true)) / static_cast<double>(voiced.size());
}

F0Track estimate_f0(const Waveform& wave, const F0Config& config) {
  wave.validate();
  if (!(config.fmin > 0.0 && config.fmax > config.fmin)) throw AudioError("estimate_f0: invalid F0 range");
  const double fs = wave.sample_rate;
  const auto frame = static_cast<std::size_t>(std::lround(config.frame_seconds * fs));
  const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(config.hop_seconds * fs)));
  const auto lag_min = static_cast<std::size_t>(std::floor(fs / config.fmax));
  const auto lag_max = static_cast<std::size_t>(std::ceil(fs / config.fmin));
  if (lag_max + 1 >= frame) throw AudioError("estimate_f0: frame too short for the F0 range");
  if (wave.size() < frame) throw AudioError("estimate_f0: input shorter than one analysis frame");

  F0Track track;
  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t start = 0; start + frame <= wave.size(); start += hop) {
    const double* x = wave.samples.data() + start;
    for (std::size_t lag = lag_min > 0 ? lag_min - 1 : 0; lag <= lag_max + 1 && lag < frame; ++lag) {
      double xy = 0.0, xx = 0.0, yy = 0.0;
      for (std::size_t i = 0; i + lag < frame; ++i) {
        xy += x[i] * x[i + lag];
        xx += x[i] * x[i];
        yy += x[i + lag] * x[i + lag];
      }
      r[lag] = (xx > 0.0 && yy > 0.0) ? xy / std::sqrt(xx * yy) : 0.0;
    }
    double best = 0.0;
    for (std::size_t lag = lag_min; lag <= lag_max; ++lag) best = std::max(best, r[lag]);
    double f0 = 0.0;
    bool voiced = false;
    if (best >= config.voicing_threshold) {
      std::size_t pick = 0;
      for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
        if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
          pick = lag;
          break;
        }
      }
      if (pick > 0) {
        const double a = r[pick - 1], b = r[pick], c = r[pick + 1];
        const double den = a - 2.0 * b + c;
        const double shift = den < 0.0 ? std::clamp(0.5 * (a - c) / den, -0.5, 0.5) : 0.0;
        f0 = fs / (static_cast<double>(pick) + shift);
        voiced = true;
      }
    }
    track.f0.push_back(f0);
    track.voiced.push_back(voiced);
  }
  return track;
}

}  // namespace steer::audio
