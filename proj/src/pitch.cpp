#include <algorithm>
#include <cmath>
#include <limits>

#include "voicerisk/error.hpp"
#include "voicerisk/features.hpp"

namespace voicerisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Among near-best peaks the shortest lag wins, which keeps period doubling
// (lag 2T correlates as well as lag T) from halving the estimate.
constexpr double kNearBestRatio = 0.9;

struct LagPeak {
  double lag = 0.0;
  double value = kNaN;
};

// Normalized cross-correlation between x[0, L) and x[tau, tau + L).
LagPeak nccf_peak(std::span<const double> span, std::size_t L, std::size_t min_lag, std::size_t max_lag) {
  if (max_lag < min_lag + 2 || span.size() < L + max_lag) return {};

  double mean = 0.0;
  for (double v : span) mean += v;
  mean /= static_cast<double>(span.size());
  std::vector<double> x(span.size());
  for (std::size_t i = 0; i < span.size(); ++i) x[i] = span[i] - mean;

  double e0 = 0.0;
  for (std::size_t n = 0; n < L; ++n) e0 += x[n] * x[n];
  if (!(e0 > 1e-20)) return {};

  const std::size_t first = min_lag - 1;
  std::vector<double> r(max_lag + 1, 0.0);
  double e_tau = 0.0;
  for (std::size_t n = 0; n < L; ++n) e_tau += x[first + n] * x[first + n];
  for (std::size_t tau = first; tau <= max_lag; ++tau) {
    if (tau > first) {
      const double out = x[tau - 1];
      const double in = x[tau + L - 1];
      e_tau += in * in - out * out;
    }
    double c = 0.0;
    const double* a = x.data();
    const double* b = x.data() + tau;
    for (std::size_t n = 0; n < L; ++n) c += a[n] * b[n];
    const double denom = std::sqrt(e0 * std::max(e_tau, 0.0));
    r[tau] = denom > 0.0 ? c / denom : 0.0;
  }

  double best = -1.0;
  std::vector<std::size_t> peaks;
  for (std::size_t tau = min_lag; tau < max_lag; ++tau) {
    if (r[tau] >= r[tau - 1] && r[tau] > r[tau + 1]) {
      peaks.push_back(tau);
      best = std::max(best, r[tau]);
    }
  }
  if (peaks.empty() || best <= 0.0) return {};

  std::size_t chosen = peaks.front();
  for (std::size_t tau : peaks) {
    if (r[tau] >= kNearBestRatio * best) {
      chosen = tau;
      break;
    }
  }

  const double ym = r[chosen - 1], y0 = r[chosen], yp = r[chosen + 1];
  const double curvature = ym - 2.0 * y0 + yp;
  double delta = 0.0;
  if (curvature < 0.0) delta = std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5);
  LagPeak peak;
  peak.lag = static_cast<double>(chosen) + delta;
  peak.value = std::clamp(y0 - 0.25 * (ym - yp) * delta, -1.0, 1.0);
  return peak;
}

}  // namespace

PitchAnalysis analyze_pitch(const Frames& frames) {
  PitchAnalysis out;
  out.win_len = frames.win_len;
  out.hop_len = frames.hop_len;
  out.sample_rate = frames.sample_rate;
  out.f0 = FrameTrack{TrackKind::f0_hz, 0, frames.frame_rate(), std::vector<double>(frames.size(), kNaN)};
  out.strength.assign(frames.size(), kNaN);

  const double fs = frames.sample_rate;
  const auto min_lag = static_cast<std::size_t>(std::floor(fs / kF0MaxHz));
  const auto max_lag = static_cast<std::size_t>(std::ceil(fs / kF0MinHz));
  const std::size_t L = frames.win_len;
  const std::size_t n = frames.signal.size();

  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::size_t start = i * frames.hop_len;
    // Correlate forward when the lookahead covers the lag range, otherwise
    // backward from the frame end over the reversed history.
    const std::size_t ahead = n > start + L ? n - start - L : 0;
    const std::size_t behind = start;
    LagPeak peak;
    if (ahead >= max_lag || ahead >= behind) {
      const std::size_t lag_hi = std::min(max_lag, ahead);
      auto span = std::span<const double>(frames.signal).subspan(start, L + lag_hi);
      peak = nccf_peak(span, L, std::max<std::size_t>(min_lag, 2), lag_hi);
    } else {
      const std::size_t lag_hi = std::min(max_lag, behind);
      const std::size_t end = start + L;
      std::vector<double> reversed(frames.signal.rbegin() + static_cast<std::ptrdiff_t>(n - end),
                                   frames.signal.rbegin() + static_cast<std::ptrdiff_t>(n - end + L + lag_hi));
      peak = nccf_peak(reversed, L, std::max<std::size_t>(min_lag, 2), lag_hi);
    }
    if (std::isnan(peak.value)) continue;
    out.strength[i] = peak.value;
    const double f0 = fs / peak.lag;
    if (peak.value >= kVoicingThreshold && f0 >= kF0MinHz && f0 <= kF0MaxHz) out.f0.values[i] = f0;
  }
  return out;
}

FrameTrack extract_f0(const Frames& frames) {
  return analyze_pitch(frames).f0;
}

double hnr_from_correlation(double r) {
  constexpr double lo = -20.0, hi = 40.0;
  if (!(r > 0.0)) return lo;
  if (r >= 1.0) return hi;
  return std::clamp(10.0 * std::log10(r / (1.0 - r)), lo, hi);
}

FrameTrack hnr_track(const PitchAnalysis& pitch) {
  FrameTrack t{TrackKind::hnr_db, 0, pitch.f0.frame_rate, std::vector<double>(pitch.f0.values.size(), kNaN)};
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    if (!std::isnan(pitch.f0.values[i])) t.values[i] = hnr_from_correlation(pitch.strength[i]);
  }
  return t;
}

namespace {

struct Cycle {
  double mark = 0.0;       // rising zero crossing, fractional sample index
  double amplitude = 0.0;  // interpolated peak value
};

double refine_peak(std::span<const double> x, std::size_t k, double* value) {
  if (k == 0 || k + 1 >= x.size()) {
    *value = x[k];
    return static_cast<double>(k);
  }
  const double ym = x[k - 1], y0 = x[k], yp = x[k + 1];
  const double curvature = ym - 2.0 * y0 + yp;
  double delta = 0.0;
  if (curvature < 0.0) delta = std::clamp(0.5 * (ym - yp) / curvature, -0.5, 0.5);
  *value = y0 - 0.25 * (ym - yp) * delta;
  return static_cast<double>(k) + delta;
}

// Rising zero crossing at or before `peak`, searching back at most `limit` samples.
bool rising_crossing_before(std::span<const double> x, std::size_t peak, std::size_t limit, double* where) {
  const std::size_t stop = peak > limit ? peak - limit : 0;
  for (std::size_t k = peak; k > stop; --k) {
    const double a = x[k - 1], b = x[k];
    if (a < 0.0 && b >= 0.0) {
      *where = static_cast<double>(k - 1) + (-a) / (b - a);
      return true;
    }
  }
  return false;
}

}  // namespace

PerturbationStats extract_perturbation(const AudioBuffer& segment, const PitchAnalysis& pitch) {
  const auto& f0 = pitch.f0.values;
  const std::span<const double> x(segment.samples);
  const double fs = segment.sample_rate;

  std::vector<std::vector<Cycle>> chains;
  bool any_run = false;

  for (std::size_t i = 0; i < f0.size();) {
    if (std::isnan(f0[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < f0.size() && !std::isnan(f0[j])) ++j;
    if (j - i >= 3) {
      any_run = true;
      const std::size_t region_begin = i * pitch.hop_len;
      const std::size_t region_end = std::min(x.size(), (j - 1) * pitch.hop_len + pitch.win_len);
      auto period_at = [&](double pos) {
        const double centre = (pos - static_cast<double>(pitch.win_len) / 2.0) / static_cast<double>(pitch.hop_len);
        const auto idx = static_cast<std::size_t>(std::clamp(std::llround(centre), static_cast<long long>(i),
                                                             static_cast<long long>(j - 1)));
        return fs / f0[idx];
      };

      std::vector<Cycle> chain;
      auto flush = [&] {
        if (chain.size() >= 3) chains.push_back(chain);
        chain.clear();
      };

      // First cycle: global maximum within one period from the region start.
      double period = period_at(static_cast<double>(region_begin));
      std::size_t lo = region_begin;
      std::size_t hi = std::min(region_end, region_begin + static_cast<std::size_t>(std::ceil(period)) + 1);
      while (hi > lo + 2 && hi <= region_end) {
        const auto it = std::max_element(x.begin() + static_cast<std::ptrdiff_t>(lo),
                                         x.begin() + static_cast<std::ptrdiff_t>(hi));
        const auto k = static_cast<std::size_t>(it - x.begin());
        double amp = 0.0;
        const double peak_pos = refine_peak(x, k, &amp);
        period = period_at(peak_pos);
        double mark = 0.0;
        if (amp > 0.0 && rising_crossing_before(x, k, static_cast<std::size_t>(period), &mark) &&
            mark >= static_cast<double>(region_begin)) {
          chain.push_back({mark, amp});
        } else {
          flush();
        }
        lo = static_cast<std::size_t>(std::floor(peak_pos + 0.8 * period));
        hi = static_cast<std::size_t>(std::ceil(peak_pos + 1.2 * period)) + 1;
        if (hi > region_end) break;
      }
      flush();
    }
    i = j;
  }

  if (!any_run) throw Error(Errc::NoVoicedRun, "no run of 3 voiced frames in " + segment.source_id);

  double sum_period = 0.0, sum_dperiod = 0.0, sum_amp = 0.0, sum_damp = 0.0;
  std::size_t n_period = 0, n_dperiod = 0, n_amp = 0, n_damp = 0;
  for (const auto& chain : chains) {
    std::vector<double> periods;
    for (std::size_t k = 1; k < chain.size(); ++k) periods.push_back(chain[k].mark - chain[k - 1].mark);
    for (std::size_t k = 0; k < periods.size(); ++k) {
      sum_period += periods[k];
      ++n_period;
      if (k > 0) {
        sum_dperiod += std::abs(periods[k] - periods[k - 1]);
        ++n_dperiod;
      }
    }
    for (std::size_t k = 0; k < chain.size(); ++k) {
      sum_amp += chain[k].amplitude;
      ++n_amp;
      if (k > 0) {
        sum_damp += std::abs(chain[k].amplitude - chain[k - 1].amplitude);
        ++n_damp;
      }
    }
  }
  if (n_dperiod == 0 || n_damp == 0) {
    throw Error(Errc::NoVoicedRun, "voiced runs in " + segment.source_id + " yield fewer than two periods");
  }

  PerturbationStats stats;
  stats.jitter_local = (sum_dperiod / n_dperiod) / (sum_period / n_period);
  stats.shimmer_local = (sum_damp / n_damp) / (sum_amp / n_amp);

  double hnr_sum = 0.0;
  std::size_t hnr_n = 0;
  for (std::size_t i = 0; i < f0.size(); ++i) {
    if (std::isnan(f0[i])) continue;
    hnr_sum += hnr_from_correlation(pitch.strength[i]);
    ++hnr_n;
  }
  stats.mean_hnr_db = hnr_n ? hnr_sum / hnr_n : 0.0;
  return stats;
}

}  // namespace voicerisk
