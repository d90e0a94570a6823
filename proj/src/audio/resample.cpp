#include "steer/audio/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace steer::audio {

std::vector<double> resample_to_length(const std::vector<double>& x, std::size_t out_len, int zero_crossings) {
  if (out_len == x.size()) return x;
  if (x.empty() || out_len == 0) throw std::invalid_argument("resample_to_length: empty input or output");
  const double ratio = static_cast<double>(x.size()) / static_cast<double>(out_len);
  const double cutoff = std::min(1.0, 1.0 / ratio);
  const double half_width = zero_crossings / cutoff;
  const auto n_in = static_cast<std::ptrdiff_t>(x.size());
  std::vector<double> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double center = static_cast<double>(n) * ratio;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(center - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n_in - 1, static_cast<std::ptrdiff_t>(std::floor(center + half_width)));
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double d = static_cast<double>(i) - center;
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += x[static_cast<std::size_t>(i)] * cutoff * sinc * win;
    }
    out[n] = acc;
  }
  return out;
}

}  // namespace steer::audio
