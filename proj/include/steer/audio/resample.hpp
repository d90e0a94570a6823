#pragma once

#include <cstddef>
#include <vector>

namespace steer::audio {

// Band-limited (Hann-windowed sinc) resampling of x onto `out_len` samples
// spanning the same duration. Output sample n reads input position
// n * x.size() / out_len. Identity when the lengths match.
std::vector<double> resample_to_length(const std::vector<double>& x, std::size_t out_len, int zero_crossings = 16);

}  // namespace steer::audio
