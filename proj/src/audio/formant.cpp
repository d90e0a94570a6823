#include "steer/audio/formant.hpp"

#include <algorithm>
#include <cmath>

namespace steer::audio {

using Bins = Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic>;

Eigen::RowVectorXd spectral_envelope(const Bins& bins, int radius) {
  const Eigen::Index n = bins.size();
  const double floor = std::max(bins.cwiseAbs().maxCoeff() * 1e-6, 1e-12);
  Eigen::RowVectorXd mag(n);
  for (Eigen::Index k = 0; k < n; ++k) mag[k] = std::log(std::max(std::abs(bins[k]), floor));
  // Peak positions and heights, refined by a parabola through log magnitudes.
  std::vector<double> pos, height;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, k - radius), hi = std::min<Eigen::Index>(n - 1, k + radius);
    if (mag.segment(lo, hi - lo + 1).maxCoeff() != mag[k]) continue;
    if (!pos.empty() && pos.back() >= static_cast<double>(k) - 1.0 && height.back() == mag[k]) continue;
    double p = 0.0, h = mag[k];
    if (k > 0 && k + 1 < n) {
      const double a = mag[k - 1], b = mag[k], c = mag[k + 1];
      const double den = a - 2.0 * b + c;
      if (den < 0.0) {
        p = std::clamp(0.5 * (a - c) / den, -0.5, 0.5);
        h = b - 0.25 * (a - c) * p;
      }
    }
    pos.push_back(static_cast<double>(k) + p);
    height.push_back(h);
  }
  Eigen::RowVectorXd env(n);
  std::size_t i = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = static_cast<double>(k);
    while (i + 1 < pos.size() && pos[i + 1] <= x) ++i;
    if (x <= pos.front()) {
      env[k] = height.front();
    } else if (i + 1 >= pos.size()) {
      env[k] = height.back();
    } else {
      const double t = (x - pos[i]) / (pos[i + 1] - pos[i]);
      env[k] = (1.0 - t) * height[i] + t * height[i + 1];
    }
  }
  return env.array().exp();
}

Waveform formant_shift(const Waveform& wave, double beta, const FormantConfig& config) {
  wave.validate();
  if (!(beta >= 0.7 && beta <= 1.4)) throw AudioError("formant_shift: factor " + std::to_string(beta) + " outside [0.7, 1.4]");
  if (wave.size() < static_cast<std::size_t>(config.stft.window)) {
    throw AudioError("formant_shift: input shorter than one analysis window");
  }
  const int n = config.stft.window;
  const int radius = std::max(1, static_cast<int>(std::lround(config.peak_radius_hz * n / wave.sample_rate)));
  Spectrogram spec = stft(wave.samples, config.stft);
  const Eigen::Index n_bins = spec.cols();
  for (Eigen::Index m = 0; m < spec.rows(); ++m) {
    const Bins row = spec.row(m);
    if (row.cwiseAbs().maxCoeff() == 0.0) continue;
    const auto env = spectral_envelope(row, radius);
    for (Eigen::Index k = 0; k < n_bins; ++k) {
      const double src = static_cast<double>(k) / beta;
      const auto k0 = static_cast<Eigen::Index>(std::floor(src));
      double warped;
      if (k0 + 1 >= n_bins) {
        warped = env[n_bins - 1];
      } else {
        const double frac = src - static_cast<double>(k0);
        warped = std::exp((1.0 - frac) * std::log(env[k0]) + frac * std::log(env[k0 + 1]));
      }
      spec(m, k) *= warped / env[k];
    }
  }
  Waveform out{istft(spec, config.stft, wave.size()), wave.sample_rate};
  soft_clip_guard(out);
  return out;
}

}  // namespace steer::audio
