#include <algorithm>
#include <cmath>
#include <limits>

#include "voicerisk/error.hpp"
#include "voicerisk/features.hpp"

namespace voicerisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Bin powers are floored 120 dB below the frame maximum; a relative floor
// keeps every measure invariant to signal gain.
constexpr double kRelativeFloor = 1e-12;

}  // namespace

SpectralMeasures spectral_measures(std::span<const double> frame, int sample_rate) {
  std::size_t nfft = 0;
  const auto power = power_spectrum(frame, &nfft);
  const double peak = *std::max_element(power.begin(), power.end());
  if (!(peak > 0.0)) throw Error(Errc::ZeroSpectrum, "frame has no spectral energy");
  const double floor = peak * kRelativeFloor;
  const double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);

  auto level_db = [&](double p) { return 10.0 * std::log10(std::max(p, floor)); };

  SpectralMeasures m;

  // Least-squares slope of dB level against linear frequency over [0, 500] Hz.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < power.size() && k * bin_hz <= 500.0; ++k) {
    const double f = k * bin_hz;
    const double y = level_db(power[k]);
    sx += f;
    sy += y;
    sxx += f * f;
    sxy += f * y;
    ++count;
  }
  const double denom = count * sxx - sx * sx;
  m.slope_v0_500 = denom > 0.0 ? (count * sxy - sx * sy) / denom : 0.0;

  double e_low = 0.0, e_high = 0.0;
  double max_low = -std::numeric_limits<double>::infinity();
  double max_high = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < power.size(); ++k) {
    const double f = k * bin_hz;
    if (f >= 50.0 && f < 1000.0) e_low += power[k];
    if (f >= 1000.0 && f < 5000.0) e_high += power[k];
    if (f < 2000.0) max_low = std::max(max_low, level_db(power[k]));
    if (f >= 2000.0 && f < 5000.0) max_high = std::max(max_high, level_db(power[k]));
  }
  m.alpha_ratio_db = 10.0 * std::log10(std::max(e_high, floor) / std::max(e_low, floor));
  m.hammarberg_db = std::isfinite(max_high) ? max_low - max_high : 0.0;
  return m;
}

SpectralTracks extract_spectral_measures(const Frames& frames, const FrameTrack& voicing) {
  const double rate = frames.frame_rate();
  const std::size_t n = frames.size();
  SpectralTracks t{FrameTrack{TrackKind::slope_v0_500, 0, rate, std::vector<double>(n, kNaN)},
                   FrameTrack{TrackKind::alpha_ratio_db, 0, rate, std::vector<double>(n, kNaN)},
                   FrameTrack{TrackKind::hammarberg_db, 0, rate, std::vector<double>(n, kNaN)}};
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& frame = frames.windowed[i];
    if (std::all_of(frame.begin(), frame.end(), [](double v) { return v == 0.0; })) continue;
    ++nonzero;
    const auto m = spectral_measures(frame, frames.sample_rate);
    const bool voiced = i < voicing.values.size() && !std::isnan(voicing.values[i]);
    if (voiced) t.slope_v0_500.values[i] = m.slope_v0_500;
    t.alpha_ratio_db.values[i] = m.alpha_ratio_db;
    t.hammarberg_db.values[i] = m.hammarberg_db;
  }
  if (n > 0 && nonzero == 0) throw Error(Errc::ZeroSpectrum, "every frame is all-zero");
  return t;
}

}  // namespace voicerisk
