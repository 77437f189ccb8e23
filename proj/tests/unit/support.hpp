#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "voicerisk/audio_io.hpp"
#include "voicerisk/error.hpp"

namespace testing {

inline voicerisk::Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const voicerisk::Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return voicerisk::Errc::IoError;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("voicerisk_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline voicerisk::AudioBuffer sine(double freq, double seconds, double amp = 0.5, int fs = 16000) {
  voicerisk::AudioBuffer a;
  a.sample_rate = fs;
  const auto n = static_cast<std::size_t>(std::llround(seconds * fs));
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) a.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / fs);
  return a;
}

inline voicerisk::AudioBuffer white_noise(double seconds, std::uint64_t seed, double sd = 0.1, int fs = 16000) {
  voicerisk::AudioBuffer a;
  a.sample_rate = fs;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  a.samples.resize(static_cast<std::size_t>(std::llround(seconds * fs)));
  for (auto& v : a.samples) v = z(rng);
  return a;
}

/// Direct-form two-pole resonator.
inline std::vector<double> resonate(const std::vector<double>& x, double freq, double bw, int fs) {
  const double r = std::exp(-std::numbers::pi * bw / fs);
  const double a1 = -2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
  const double a2 = r * r;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = x[i] - a1 * (i >= 1 ? y[i - 1] : 0.0) - a2 * (i >= 2 ? y[i - 2] : 0.0);
  }
  return y;
}

inline std::vector<double> pulse_train(double f0, double seconds, int fs) {
  std::vector<double> x(static_cast<std::size_t>(std::llround(seconds * fs)), 0.0);
  for (double t = 0.0; static_cast<std::size_t>(std::llround(t)) < x.size(); t += fs / f0) {
    x[static_cast<std::size_t>(std::llround(t))] = 1.0;
  }
  return x;
}

/// Impulse train through a one-pole low-pass, a -6 dB/octave source like
/// the glottal flow derivative after lip radiation.
inline std::vector<double> glottal_pulses(double f0, double seconds, int fs) {
  auto x = pulse_train(f0, seconds, fs);
  for (std::size_t i = 1; i < x.size(); ++i) x[i] += 0.97 * x[i - 1];
  return x;
}

inline void scale_to_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > 0.0)
    for (auto& v : x) v *= peak / m;
}

// Little-endian RIFF writer independent of the library's write_wav.
struct WavSpec {
  std::uint16_t format = 1;  // 1 PCM, 3 float
  std::uint16_t channels = 1;
  std::uint32_t rate = 16000;
  std::uint16_t bits = 16;
};

inline void put(std::string& s, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::string wav_bytes(const WavSpec& spec, const std::string& data) {
  std::string s = "RIFF";
  put(s, 36 + data.size(), 4);
  s += "WAVEfmt ";
  put(s, 16, 4);
  put(s, spec.format, 2);
  put(s, spec.channels, 2);
  put(s, spec.rate, 4);
  put(s, spec.rate * spec.channels * spec.bits / 8, 4);
  put(s, spec.channels * spec.bits / 8, 2);
  put(s, spec.bits, 2);
  s += "data";
  put(s, data.size(), 4);
  return s + data;
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace testing
