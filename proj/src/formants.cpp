#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <Eigen/Dense>

#include "voicerisk/features.hpp"

namespace voicerisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPreEmphasis = 0.97;
constexpr double kMaxBandwidthHz = 1000.0;
constexpr double kMinFormantHz = 90.0;

}  // namespace

std::vector<double> levinson_durbin(std::span<const double> r, int order) {
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  if (!(err > 0.0)) return a;
  std::vector<double> prev(order + 1, 0.0);
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
    if (!(err > 0.0)) break;
  }
  return a;
}

std::vector<Formant> frame_formants(std::span<const double> frame, int sample_rate, int lpc_order) {
  const std::size_t n = frame.size();
  if (n <= static_cast<std::size_t>(lpc_order)) return {};

  std::vector<double> x(n);
  x[0] = frame[0];
  for (std::size_t i = 1; i < n; ++i) x[i] = frame[i] - kPreEmphasis * frame[i - 1];
  for (std::size_t i = 0; i < n; ++i) {
    x[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
  }

  std::vector<double> r(lpc_order + 1, 0.0);
  for (int lag = 0; lag <= lpc_order; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < n; ++i) acc += x[i] * x[i - lag];
    r[lag] = acc;
  }
  if (!(r[0] > 0.0)) return {};

  const auto a = levinson_durbin(r, lpc_order);

  // Companion matrix of z^p + a1 z^(p-1) + ... + ap.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(lpc_order, lpc_order);
  for (int j = 0; j < lpc_order; ++j) companion(0, j) = -a[j + 1];
  for (int i = 1; i < lpc_order; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  if (solver.info() != Eigen::Success) return {};

  const double fs = sample_rate;
  std::vector<Formant> found;
  for (const auto& z : solver.eigenvalues()) {
    if (z.imag() <= 0.0) continue;
    const double radius = std::abs(z);
    if (!(radius > 0.0)) continue;
    Formant f;
    f.frequency_hz = std::arg(z) * fs / (2.0 * std::numbers::pi);
    f.bandwidth_hz = -(fs / std::numbers::pi) * std::log(radius);
    if (f.bandwidth_hz > 0.0 && f.bandwidth_hz < kMaxBandwidthHz && f.frequency_hz > kMinFormantHz) {
      found.push_back(f);
    }
  }
  std::sort(found.begin(), found.end(),
            [](const Formant& l, const Formant& r2) { return l.frequency_hz < r2.frequency_hz; });
  if (found.size() > 3) found.resize(3);
  return found;
}

FormantTracks extract_formants(const Frames& frames, const FrameTrack& voicing, int lpc_order) {
  const double rate = frames.frame_rate();
  const std::size_t n = frames.size();
  FormantTracks t{FrameTrack{TrackKind::f1_hz, 0, rate, std::vector<double>(n, kNaN)},
                  FrameTrack{TrackKind::f1_bw_hz, 0, rate, std::vector<double>(n, kNaN)},
                  FrameTrack{TrackKind::f2_hz, 0, rate, std::vector<double>(n, kNaN)},
                  FrameTrack{TrackKind::f3_hz, 0, rate, std::vector<double>(n, kNaN)}};
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= voicing.values.size() || std::isnan(voicing.values[i])) continue;
    const auto formants = frame_formants(frames.raw(i), frames.sample_rate, lpc_order);
    if (formants.size() > 0) {
      t.f1_hz.values[i] = formants[0].frequency_hz;
      t.f1_bw_hz.values[i] = formants[0].bandwidth_hz;
    }
    if (formants.size() > 1) t.f2_hz.values[i] = formants[1].frequency_hz;
    if (formants.size() > 2) t.f3_hz.values[i] = formants[2].frequency_hz;
  }
  return t;
}

}  // namespace voicerisk
