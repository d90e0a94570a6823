#include "steer/audio/wav.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "steer/binary_io.hpp"

namespace steer::audio {

WavFormatError::WavFormatError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

double Waveform::peak() const {
  double p = 0.0;
  for (double s : samples) p = std::max(p, std::abs(s));
  return p;
}

bool supported_sample_rate(int rate) {
  constexpr std::array<int, 5> kRates{16000, 22050, 24000, 44100, 48000};
  return std::find(kRates.begin(), kRates.end(), rate) != kRates.end();
}

void Waveform::validate() const {
  if (!supported_sample_rate(sample_rate)) {
    throw AudioError("unsupported sample rate " + std::to_string(sample_rate));
  }
  for (double s : samples) {
    if (!std::isfinite(s)) throw AudioError("waveform contains non-finite samples");
  }
}

void soft_clip_guard(Waveform& wave, double knee) {
  if (wave.peak() <= 1.0) return;
  const double room = 1.0 - knee;
  for (auto& s : wave.samples) {
    const double a = std::abs(s);
    if (a > knee) s = std::copysign(knee + room * std::tanh((a - knee) / room), s);
  }
}

namespace {

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) throw WavFormatError(std::string("truncated WAV file reading ") + what, pos_);
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return s;
  }
  template <class T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    v = io::to_little(v);
    pos_ += sizeof(T);
    return v;
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }
  const std::uint8_t* here() const { return bytes_.data() + pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <class T>
void put(std::vector<std::uint8_t>& out, T v) {
  v = io::to_little(v);
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

Waveform parse_wav(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.tag("RIFF header") != "RIFF") throw WavFormatError("missing RIFF tag", 0);
  r.le<std::uint32_t>("RIFF size");
  if (r.tag("WAVE tag") != "WAVE") throw WavFormatError("missing WAVE tag", 8);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  while (true) {
    const std::size_t chunk_at = r.offset();
    const std::string id = r.tag("chunk id");
    const auto size = r.le<std::uint32_t>("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw WavFormatError("fmt chunk too small", chunk_at);
      r.need(size, "fmt chunk");
      format = r.le<std::uint16_t>("format tag");
      channels = r.le<std::uint16_t>("channel count");
      rate = r.le<std::uint32_t>("sample rate");
      r.le<std::uint32_t>("byte rate");
      r.le<std::uint16_t>("block align");
      bits = r.le<std::uint16_t>("bits per sample");
      std::size_t consumed = 16;
      if (format == kFormatExtensible) {
        if (size < 40) throw WavFormatError("extensible fmt chunk too small", chunk_at);
        r.le<std::uint16_t>("extension size");
        r.le<std::uint16_t>("valid bits");
        r.le<std::uint32_t>("channel mask");
        format = r.le<std::uint16_t>("sub-format");
        r.skip(14, "sub-format GUID");
        consumed = 40;
      }
      r.skip(size - consumed + (size & 1u), "fmt chunk padding");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw WavFormatError("data chunk before fmt chunk", chunk_at);
      if (channels == 0) throw WavFormatError("zero channels", chunk_at);
      const bool pcm16 = format == kFormatPcm && bits == 16;
      const bool f32 = format == kFormatFloat && bits == 32;
      if (!pcm16 && !f32) {
        throw WavFormatError("unsupported codec (format " + std::to_string(format) + ", " + std::to_string(bits) +
                                 " bits)",
                             chunk_at);
      }
      const std::size_t width = bits / 8;
      const std::size_t frame_bytes = width * channels;
      r.need(size, "sample data");
      if (size % frame_bytes != 0) throw WavFormatError("data size is not a whole number of frames", chunk_at);
      const std::size_t frames = size / frame_bytes;
      Waveform w;
      w.sample_rate = static_cast<int>(rate);
      w.samples.resize(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < channels; ++c) {
          if (pcm16) {
            acc += r.le<std::int16_t>("sample") / 32768.0;
          } else {
            acc += static_cast<double>(r.le<float>("sample"));
          }
        }
        w.samples[f] = acc / channels;
      }
      if (!supported_sample_rate(w.sample_rate)) {
        throw WavFormatError("unsupported sample rate " + std::to_string(rate), 24);
      }
      for (double s : w.samples) {
        if (!std::isfinite(s)) throw WavFormatError("non-finite sample", chunk_at);
      }
      return w;
    } else {
      r.skip(size + (size & 1u), "chunk body");
    }
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& wave, WavEncoding encoding) {
  wave.validate();
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t format = encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put<std::uint32_t>(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put<std::uint32_t>(out, 16);
  put<std::uint16_t>(out, format);
  put<std::uint16_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(wave.sample_rate) * (bits / 8));
  put<std::uint16_t>(out, bits / 8);
  put<std::uint16_t>(out, bits);
  put_tag(out, "data");
  put<std::uint32_t>(out, data_bytes);
  for (double s : wave.samples) {
    if (encoding == WavEncoding::kPcm16) {
      const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      put<std::int16_t>(out, static_cast<std::int16_t>(q));
    } else {
      put<float>(out, static_cast<float>(s));
    }
  }
  return out;
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open: " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_wav(bytes);
}

void write_wav(const Waveform& wave, const std::filesystem::path& path, WavEncoding encoding) {
  const auto bytes = encode_wav(wave, encoding);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace steer::audio
