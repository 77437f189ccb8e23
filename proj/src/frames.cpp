#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "voicerisk/error.hpp"
#include "voicerisk/features.hpp"

namespace voicerisk {

std::string track_name(TrackKind kind, int coefficient) {
  switch (kind) {
    case TrackKind::f0_hz: return "F0";
    case TrackKind::loudness_rms: return "Loudness";
    case TrackKind::slope_v0_500: return "SlopeV0-500";
    case TrackKind::alpha_ratio_db: return "AlphaRatio";
    case TrackKind::hammarberg_db: return "HammarbergIndex";
    case TrackKind::f1_hz: return "F1";
    case TrackKind::f1_bw_hz: return "F1Bandwidth";
    case TrackKind::f2_hz: return "F2";
    case TrackKind::f3_hz: return "F3";
    case TrackKind::hnr_db: return "HNR";
    case TrackKind::mfcc: return "MFCC" + std::to_string(coefficient);
  }
  return "?";
}

Frames frame_signal(const AudioBuffer& audio, const FrameConfig& config) {
  const double fs = audio.sample_rate;
  const auto win = static_cast<std::size_t>(std::llround(config.win_ms * fs / 1000.0));
  const auto hop = static_cast<std::size_t>(std::llround(config.hop_ms * fs / 1000.0));
  if (win == 0 || hop == 0) throw Error(Errc::ConfigError, "window and hop must be at least one sample");
  if (audio.samples.size() < win) {
    throw Error(Errc::TooShort, std::to_string(audio.duration_s() * 1000.0) + " ms is shorter than the " +
                                    std::to_string(config.win_ms) + " ms window");
  }

  Frames frames;
  frames.sample_rate = audio.sample_rate;
  frames.win_len = win;
  frames.hop_len = hop;
  frames.signal = audio.samples;

  std::vector<double> window(win);
  for (std::size_t n = 0; n < win; ++n) {
    window[n] = win > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / (win - 1)) : 1.0;
  }

  const std::size_t count = (audio.samples.size() - win) / hop + 1;
  frames.windowed.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto& f = frames.windowed[i];
    f.resize(win);
    for (std::size_t n = 0; n < win; ++n) f[n] = audio.samples[i * hop + n] * window[n];
  }
  return frames;
}

std::vector<double> power_spectrum(std::span<const double> frame, std::size_t* fft_size) {
  std::size_t n = kMinFftSize;
  while (n < frame.size()) n *= 2;
  if (fft_size) *fft_size = n;

  std::vector<double> padded(n, 0.0);
  std::copy(frame.begin(), frame.end(), padded.begin());

  thread_local Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);

  std::vector<double> power(n / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spec[k]);
  return power;
}

FrameTrack loudness_track(const Frames& frames) {
  FrameTrack t{TrackKind::loudness_rms, 0, frames.frame_rate(), {}};
  t.values.resize(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) t.values[i] = rms(frames.raw(i));
  return t;
}

}  // namespace voicerisk
