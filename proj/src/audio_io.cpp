#include "voicerisk/audio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "voicerisk/error.hpp"

namespace voicerisk {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

struct FormatChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const FormatChunk& fmt) {
  if (fmt.format == kFormatFloat) {
    float f;
    std::uint32_t bits = le32(p);
    std::memcpy(&f, &bits, sizeof f);
    return static_cast<double>(f);
  }
  switch (fmt.bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    case 32:
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
    default:
      return 0.0;
  }
}

}  // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(Errc::MalformedHeader, path.string() + " is not a RIFF/WAVE file");
  }

  FormatChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || available < 16) throw Error(Errc::MalformedHeader, "truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      fmt.format = le16(f);
      fmt.channels = le16(f + 2);
      fmt.sample_rate = le32(f + 4);
      fmt.bits = le16(f + 14);
      if (fmt.format == kFormatExtensible) {
        if (size < 40 || available < 40) throw Error(Errc::MalformedHeader, "truncated extensible fmt chunk");
        fmt.format = le16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt || !have_data) throw Error(Errc::MalformedHeader, path.string() + " lacks fmt or data chunk");
  if (fmt.channels == 0 || fmt.sample_rate == 0) throw Error(Errc::MalformedHeader, "zero channels or sample rate");

  const bool int_ok = fmt.format == kFormatPcm &&
                      (fmt.bits == 8 || fmt.bits == 16 || fmt.bits == 24 || fmt.bits == 32);
  const bool float_ok = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!int_ok && !float_ok) {
    throw Error(Errc::UnsupportedEncoding,
                "format " + std::to_string(fmt.format) + " with " + std::to_string(fmt.bits) + " bits");
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw Error(Errc::EmptyAudio, path.string());

  AudioBuffer out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  out.source_id = path.string();
  out.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      acc += decode_sample(data + i * frame_bytes + c * bytes_per_sample, fmt);
    }
    out.samples[i] = acc / fmt.channels;
    if (!std::isfinite(out.samples[i])) throw Error(Errc::UnsupportedEncoding, "non-finite float sample");
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
  if (audio.sample_rate <= 0) throw Error(Errc::MalformedHeader, "sample rate must be positive");
  const auto n = static_cast<std::uint32_t>(audio.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  auto put = [&out](std::uint32_t v, int width) {
    for (int i = 0; i < width; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
  };
  auto tag = [&out](const char* t) { out.insert(out.end(), t, t + 4); };
  const auto rate = static_cast<std::uint32_t>(audio.sample_rate);
  tag("RIFF");
  put(36 + data_bytes, 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(kFormatPcm, 2);
  put(1, 2);
  put(rate, 4);
  put(rate * 2, 4);
  put(2, 2);
  put(16, 2);
  tag("data");
  put(data_bytes, 4);
  for (double s : audio.samples) {
    const double scaled = std::nearbyint(s * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put(static_cast<std::uint16_t>(q), 2);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

double rms(std::span<const double> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

double rms_db(std::span<const double> samples) {
  return 20.0 * std::log10(rms(samples));
}

LoudnessResult normalize_loudness(const AudioBuffer& audio, double target_rms_db) {
  const double current = rms(audio.samples);
  if (!(current > 0.0)) throw Error(Errc::SilentInput, "cannot normalize silent audio " + audio.source_id);

  LoudnessResult result;
  result.gain_db = target_rms_db - 20.0 * std::log10(current);
  const double gain = std::pow(10.0, result.gain_db / 20.0);
  result.audio = audio;
  for (double& s : result.audio.samples) {
    s *= gain;
    if (s > 1.0 || s < -1.0) {
      s = std::clamp(s, -1.0, 1.0);
      ++result.clipped;
    }
  }
  return result;
}

AudioBuffer resample_linear(const AudioBuffer& audio, int target_rate) {
  if (target_rate <= 0) throw Error(Errc::ConfigError, "target rate must be positive");
  if (audio.sample_rate == target_rate || audio.samples.empty()) {
    AudioBuffer same = audio;
    same.sample_rate = audio.samples.empty() ? target_rate : audio.sample_rate;
    return same;
  }
  const double ratio = static_cast<double>(audio.sample_rate) / target_rate;
  const auto n_out = static_cast<std::size_t>(std::floor((audio.samples.size() - 1) / ratio)) + 1;
  AudioBuffer out;
  out.sample_rate = target_rate;
  out.source_id = audio.source_id;
  out.samples.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = i * ratio;
    const auto k = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(k);
    const double a = audio.samples[k];
    const double b = k + 1 < audio.samples.size() ? audio.samples[k + 1] : a;
    out.samples[i] = a + frac * (b - a);
  }
  return out;
}

}  // namespace voicerisk
