#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "voicerisk/features.hpp"

namespace voicerisk {

namespace {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters on FFT bins, edges equally spaced on the mel scale.
std::vector<std::vector<double>> mel_filterbank(int n_mels, std::size_t n_bins, std::size_t nfft, double fs,
                                                double f_lo, double f_hi) {
  const double mel_lo = hz_to_mel(f_lo), mel_hi = hz_to_mel(f_hi);
  std::vector<double> edges(n_mels + 2);
  for (int m = 0; m < n_mels + 2; ++m) edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (n_mels + 1));

  std::vector<std::vector<double>> bank(n_mels, std::vector<double>(n_bins, 0.0));
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], centre = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = k * fs / static_cast<double>(nfft);
      if (f > left && f < centre) {
        bank[m][k] = (f - left) / (centre - left);
      } else if (f >= centre && f < right) {
        bank[m][k] = (right - f) / (right - centre);
      }
    }
  }
  return bank;
}

}  // namespace

std::vector<FrameTrack> extract_mfcc(const Frames& frames, int n_coeffs, int n_mels) {
  const double rate = frames.frame_rate();
  std::vector<FrameTrack> tracks;
  for (int c = 1; c <= n_coeffs; ++c) {
    tracks.push_back(FrameTrack{TrackKind::mfcc, c, rate,
                                std::vector<double>(frames.size(), std::numeric_limits<double>::quiet_NaN())});
  }
  if (frames.size() == 0) return tracks;

  std::size_t nfft = 0;
  const auto probe = power_spectrum(frames.windowed[0], &nfft);
  const double fs = frames.sample_rate;
  const auto bank = mel_filterbank(n_mels, probe.size(), nfft, fs, 50.0, fs / 2.0);

  std::vector<double> log_energy(n_mels);
  const double scale = std::sqrt(2.0 / n_mels);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto power = i == 0 ? probe : power_spectrum(frames.windowed[i]);
    double peak = 0.0;
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
      log_energy[m] = e;
      peak = std::max(peak, e);
    }
    if (!(peak > 0.0)) continue;
    for (auto& e : log_energy) e = std::log(std::max(e, peak * 1e-12));
    for (int c = 1; c <= n_coeffs; ++c) {
      double acc = 0.0;
      for (int m = 0; m < n_mels; ++m) acc += log_energy[m] * std::cos(std::numbers::pi * c * (m + 0.5) / n_mels);
      tracks[c - 1].values[i] = scale * acc;
    }
  }
  return tracks;
}

}  // namespace voicerisk
