#pragma once

#include <complex>
#include <vector>

#include <Eigen/Core>

namespace steer::audio {

struct StftConfig {
  int window = 1024;
  int hop = 256;

  void validate() const;
};

// Rows are frames, columns are bins 0..window/2.
using Spectrogram = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> hann_window(int n);

// Centered frames: the signal is zero-padded by window/2 on both sides and
// frame m starts at m * hop of the padded signal.
Spectrogram stft(const std::vector<double>& x, const StftConfig& config);

// Weighted overlap-add inverse for a spectrogram on the same grid; returns
// `length` samples.
std::vector<double> istft(const Spectrogram& frames, const StftConfig& config, std::size_t length);

// Real FFT helpers (size n, bins 0..n/2).
Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic> rfft(const std::vector<double>& frame);
std::vector<double> irfft(const Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic>& bins, int n);

}  // namespace steer::audio
