#include "steer/audio/stft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace steer::audio {

using Bins = Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic>;

void StftConfig::validate() const {
  if (window < 4 || (window & (window - 1)) != 0) throw std::invalid_argument("STFT window must be a power of two >= 4");
  if (hop < 1 || hop > window) throw std::invalid_argument("STFT hop must lie in [1, window]");
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

Bins rfft(const std::vector<double>& frame) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, frame);
  Bins out(static_cast<Eigen::Index>(frame.size() / 2 + 1));
  for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = spec[static_cast<std::size_t>(k)];
  return out;
}

std::vector<double> irfft(const Bins& bins, int n) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec(bins.data(), bins.data() + bins.size());
  std::vector<double> out;
  fft.inv(out, spec, n);
  return out;
}

Spectrogram stft(const std::vector<double>& x, const StftConfig& config) {
  config.validate();
  const int n = config.window;
  const std::size_t half = static_cast<std::size_t>(n / 2);
  const std::size_t frames = x.size() / config.hop + 1;
  const auto w = hann_window(n);
  Spectrogram out(static_cast<Eigen::Index>(frames), n / 2 + 1);
  std::vector<double> frame(static_cast<std::size_t>(n));
  for (std::size_t m = 0; m < frames; ++m) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(m * config.hop) - static_cast<std::ptrdiff_t>(half);
    for (int i = 0; i < n; ++i) {
      const std::ptrdiff_t t = start + i;
      frame[i] = (t >= 0 && t < static_cast<std::ptrdiff_t>(x.size())) ? x[static_cast<std::size_t>(t)] * w[i] : 0.0;
    }
    out.row(static_cast<Eigen::Index>(m)) = rfft(frame);
  }
  return out;
}

std::vector<double> istft(const Spectrogram& frames, const StftConfig& config, std::size_t length) {
  config.validate();
  const int n = config.window;
  const std::size_t half = static_cast<std::size_t>(n / 2);
  const auto w = hann_window(n);
  const std::size_t total = (frames.rows() > 0 ? (frames.rows() - 1) * config.hop : 0) + n;
  std::vector<double> acc(std::max(total, length + half), 0.0);
  std::vector<double> norm(acc.size(), 0.0);
  for (Eigen::Index m = 0; m < frames.rows(); ++m) {
    const auto frame = irfft(frames.row(m), n);
    const std::size_t start = static_cast<std::size_t>(m) * config.hop;
    for (int i = 0; i < n; ++i) {
      acc[start + i] += frame[i] * w[i];
      norm[start + i] += w[i] * w[i];
    }
  }
  std::vector<double> out(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    const double d = norm[t + half];
    out[t] = d > 1e-8 ? acc[t + half] / d : 0.0;
  }
  return out;
}

}  // namespace steer::audio
