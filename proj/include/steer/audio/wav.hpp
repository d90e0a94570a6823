#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace steer::audio {

class AudioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class WavFormatError : public std::runtime_error {
 public:
  WavFormatError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Mono samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 24000;

  std::size_t size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
  double peak() const;
  // Throws on an unsupported rate or non-finite samples.
  void validate() const;
};

bool supported_sample_rate(int rate);

enum class WavEncoding { kPcm16, kFloat32 };

// PCM 16-bit or IEEE float 32-bit; multi-channel input is averaged to mono.
Waveform parse_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const Waveform& wave, WavEncoding encoding = WavEncoding::kPcm16);

Waveform read_wav(const std::filesystem::path& path);
void write_wav(const Waveform& wave, const std::filesystem::path& path, WavEncoding encoding = WavEncoding::kPcm16);

// Leaves the wave untouched when its peak is <= 1; otherwise compresses
// samples above the knee smoothly into [-1, 1].
void soft_clip_guard(Waveform& wave, double knee = 0.9);

}  // namespace steer::audio
