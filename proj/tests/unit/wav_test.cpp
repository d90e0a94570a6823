#include <gtest/gtest.h>

#include <cstring>

#include "signals.hpp"
#include "steer/audio/wav.hpp"
#include "test_support.hpp"

using namespace steer;
using namespace steer::audio;

namespace {

void put_u32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::vector<std::uint8_t> stereo_pcm16(const std::vector<std::int16_t>& interleaved, int rate) {
  std::vector<std::uint8_t> b(44 + 2 * interleaved.size(), 0);
  std::memcpy(b.data(), "RIFF", 4);
  put_u32(b, 4, static_cast<std::uint32_t>(b.size() - 8));
  std::memcpy(b.data() + 8, "WAVEfmt ", 8);
  put_u32(b, 16, 16);
  b[20] = 1;
  b[22] = 2;
  put_u32(b, 24, static_cast<std::uint32_t>(rate));
  put_u32(b, 28, static_cast<std::uint32_t>(rate * 4));
  b[32] = 4;
  b[34] = 16;
  std::memcpy(b.data() + 36, "data", 4);
  put_u32(b, 40, static_cast<std::uint32_t>(2 * interleaved.size()));
  std::memcpy(b.data() + 44, interleaved.data(), 2 * interleaved.size());
  return b;
}

}  // namespace

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  fixture::TempDir dir("wav");
  const auto w = signals::sine(1000, 0.1);
  write_wav(w, dir / "a.wav");
  const auto r = read_wav(dir / "a.wav");
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(r.sample_rate, 24000);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_LE(std::abs(r.samples[i] - w.samples[i]), 1.0 / 32768);
}

TEST(Wav, Float32RoundTrip) {
  const auto w = signals::sine(440, 0.05, 16000);
  const auto r = parse_wav(encode_wav(w, WavEncoding::kFloat32));
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(r.sample_rate, 16000);
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1e-7);
}

TEST(Wav, StereoDownmixIsHalfSum) {
  const auto bytes = stereo_pcm16({16384, 0, -8192, 8192, 32767, 32767}, 24000);
  const auto w = parse_wav(bytes);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_DOUBLE_EQ(w.samples[0], 0.25);
  EXPECT_DOUBLE_EQ(w.samples[1], 0.0);
  EXPECT_DOUBLE_EQ(w.samples[2], 32767.0 / 32768);
}

TEST(Wav, TruncatedFileReportsOffset) {
  auto bytes = encode_wav(signals::sine(100, 0.01));
  bytes.resize(30);
  try {
    parse_wav(bytes);
    FAIL();
  } catch (const WavFormatError& e) {
    EXPECT_GT(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("at byte"), std::string::npos);
  }
  std::vector<std::uint8_t> junk{'R', 'I', 'F', 'X'};
  EXPECT_THROW(parse_wav(junk), WavFormatError);
}

TEST(Wav, UnsupportedCodecAndRate) {
  auto bytes = stereo_pcm16({0, 0}, 24000);
  bytes[20] = 2;  // ADPCM
  EXPECT_THROW(parse_wav(bytes), WavFormatError);
  Waveform w;
  w.sample_rate = 12345;
  w.samples = {0.0};
  EXPECT_THROW(w.validate(), AudioError);
}

TEST(Wav, SoftClipOnlyAbovePeak) {
  Waveform w;
  w.samples = {0.95, -0.5, 0.2};
  auto g = w;
  soft_clip_guard(g);
  EXPECT_EQ(g.samples, w.samples);
  w.samples = {1.8, -3.0, 0.5, 0.92};
  soft_clip_guard(w);
  EXPECT_LE(w.peak(), 1.0);
  EXPECT_EQ(w.samples[2], 0.5);
  EXPECT_GT(w.samples[0], 0.9);
  EXPECT_LT(w.samples[1], -0.9);
}
