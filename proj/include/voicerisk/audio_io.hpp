#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace voicerisk {

inline constexpr int kPipelineSampleRate = 16000;
inline constexpr double kDefaultTargetRmsDb = -23.0;

/// Mono signal in [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kPipelineSampleRate;
  std::string source_id;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Reads RIFF/WAVE with 8/16/24/32-bit integer or 32-bit float PCM
/// (WAVE_FORMAT_EXTENSIBLE included). Channels are averaged.
AudioBuffer read_wav(const std::filesystem::path& path);

/// Writes 16-bit PCM mono. Samples are rounded to the nearest step of
/// 1/32768 and clamped, so read_wav(write_wav(x)) reproduces 16-bit input.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

double rms(std::span<const double> samples);
double rms_db(std::span<const double> samples);

struct LoudnessResult {
  AudioBuffer audio;
  double gain_db = 0.0;
  std::size_t clipped = 0;
};

/// Full-signal RMS normalization. Throws SilentInput when RMS is zero.
LoudnessResult normalize_loudness(const AudioBuffer& audio, double target_rms_db = kDefaultTargetRmsDb);

/// Linear-interpolation resampler; identity when rates already match.
AudioBuffer resample_linear(const AudioBuffer& audio, int target_rate);

}  // namespace voicerisk
