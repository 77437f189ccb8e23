#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "voicerisk/features.hpp"

using namespace voicerisk;
using testing::code_of;

namespace {

std::vector<double> finite(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (!std::isnan(x)) out.push_back(x);
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Closest-ranks linear interpolation at p in [0, 100].
double percentile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AudioBuffer from(std::vector<double> x) {
  AudioBuffer a;
  a.samples = std::move(x);
  return a;
}

// Sine whose successive periods alternate between T(1+d) and T(1-d).
AudioBuffer alternating_period_sine(double f0, double d, double seconds) {
  const int fs = 16000;
  const double t0 = 1.0 / f0;
  std::vector<double> x;
  bool longer = true;
  double t_start = 0.0;
  const auto n = static_cast<std::size_t>(seconds * fs);
  x.reserve(n);
  double period = t0 * (1.0 + d);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    while (t >= t_start + period) {
      t_start += period;
      longer = !longer;
      period = t0 * (longer ? 1.0 + d : 1.0 - d);
    }
    x.push_back(0.5 * std::sin(2.0 * std::numbers::pi * (t - t_start) / period));
  }
  return from(std::move(x));
}

}  // namespace

TEST_CASE("framing") {
  CHECK(frame_signal(testing::sine(100, 1.0)).size() == 98);
  CHECK(frame_signal(testing::sine(100, 0.025)).size() == 1);
  CHECK(code_of([] { frame_signal(testing::sine(100, 0.010)); }) == Errc::TooShort);
  const auto f = frame_signal(testing::sine(100, 1.0));
  CHECK(f.win_len == 400);
  CHECK(f.hop_len == 160);
  // Hann-windowed: endpoints vanish
  CHECK(std::abs(f.windowed[10].front()) < 1e-12);
}

TEST_CASE("pitch tracking") {
  SUBCASE("220 Hz sine") {
    const auto f0 = extract_f0(frame_signal(testing::sine(220.0, 1.0)));
    for (double v : f0.values) {
      REQUIRE_FALSE(std::isnan(v));
      CHECK(std::abs(v - 220.0) / 220.0 < 0.02);
    }
  }
  SUBCASE("white noise is mostly unvoiced") {
    const auto f0 = extract_f0(frame_signal(testing::white_noise(2.0, 11)));
    const auto voiced = finite(f0.values).size();
    CHECK(static_cast<double>(f0.values.size() - voiced) >= 0.9 * static_cast<double>(f0.values.size()));
  }
  SUBCASE("110 Hz pulse train has no octave error") {
    auto x = testing::resonate(testing::glottal_pulses(110.0, 1.0, 16000), 600.0, 100.0, 16000);
    testing::scale_to_peak(x, 0.5);
    const auto f0 = extract_f0(frame_signal(from(x)));
    const auto v = finite(f0.values);
    REQUIRE(v.size() > 0.9 * f0.values.size());
    for (double hz : v) CHECK(std::abs(hz - 110.0) / 110.0 < 0.02);
  }
  SUBCASE("values stay in band") {
    const auto f0 = extract_f0(frame_signal(testing::white_noise(1.0, 4)));
    for (double v : finite(f0.values)) {
      CHECK(v >= kF0MinHz);
      CHECK(v <= kF0MaxHz);
    }
  }
}

TEST_CASE("spectral measures") {
  SUBCASE("flat spectrum frame") {
    // A unit impulse has |X(k)| = 1 at every bin.
    std::vector<double> frame(512, 0.0);
    frame[0] = 1.0;
    const auto m = spectral_measures(frame, 16000);
    const double df = 16000.0 / 512.0;
    int hi = 0, lo = 0;
    for (int k = 0; k <= 256; ++k) {
      const double f = k * df;
      if (f >= 1000.0 && f < 5000.0) ++hi;
      if (f >= 50.0 && f < 1000.0) ++lo;
    }
    CHECK(std::abs(m.slope_v0_500) < 1e-3);
    CHECK(m.alpha_ratio_db == doctest::Approx(10.0 * std::log10(static_cast<double>(hi) / lo)).epsilon(1e-9));
    CHECK(std::abs(m.alpha_ratio_db - 10.0 * std::log10(4000.0 / 950.0)) < 0.2);
    CHECK(std::abs(m.hammarberg_db) < 1e-9);
  }
  SUBCASE("500 Hz tone") {
    const auto frames = frame_signal(testing::sine(500.0, 0.2));
    const auto m = spectral_measures(frames.windowed[5], 16000);
    CHECK(m.alpha_ratio_db < -30.0);
    CHECK(m.hammarberg_db > 30.0);
  }
  SUBCASE("zeros") {
    std::vector<double> z(400, 0.0);
    CHECK(code_of([&] { spectral_measures(z, 16000); }) == Errc::ZeroSpectrum);
    AudioBuffer silent;
    silent.samples.assign(8000, 0.0);
    const auto frames = frame_signal(silent);
    CHECK(code_of([&] { extract_spectral_measures(frames, extract_f0(frames)); }) == Errc::ZeroSpectrum);
  }
  SUBCASE("slope only on voiced frames") {
    const auto frames = frame_signal(testing::white_noise(0.5, 9));
    const auto voicing = extract_f0(frames);
    const auto s = extract_spectral_measures(frames, voicing);
    for (std::size_t i = 0; i < voicing.values.size(); ++i) {
      CHECK(std::isnan(s.slope_v0_500.values[i]) == std::isnan(voicing.values[i]));
      CHECK_FALSE(std::isnan(s.alpha_ratio_db.values[i]));
    }
  }
}

TEST_CASE("formants") {
  const int fs = 16000;
  SUBCASE("single resonator at 700 Hz") {
    auto x = testing::resonate(testing::glottal_pulses(100.0, 1.0, fs), 700.0, 80.0, fs);
    testing::scale_to_peak(x, 0.5);
    const auto frames = frame_signal(from(x));
    const auto tracks = extract_formants(frames, extract_f0(frames));
    const auto f1 = finite(tracks.f1_hz.values);
    const auto bw = finite(tracks.f1_bw_hz.values);
    REQUIRE(f1.size() > frames.size() / 2);
    CHECK(std::abs(median(f1) - 700.0) / 700.0 < 0.05);
    CHECK(std::abs(median(bw) - 80.0) / 80.0 < 0.25);
  }
  SUBCASE("resonators at 500 and 1500 Hz") {
    for (double f0 : {80.0, 100.0, 120.0, 150.0}) {
      CAPTURE(f0);
      auto x = testing::resonate(testing::resonate(testing::glottal_pulses(f0, 1.0, fs), 500.0, 80.0, fs), 1500.0,
                                 100.0, fs);
      testing::scale_to_peak(x, 0.5);
      const auto frames = frame_signal(from(x));
      const auto tracks = extract_formants(frames, extract_f0(frames));
      CHECK(std::abs(median(finite(tracks.f1_hz.values)) - 500.0) / 500.0 < 0.05);
      CHECK(std::abs(median(finite(tracks.f2_hz.values)) - 1500.0) / 1500.0 < 0.05);
    }
  }
  SUBCASE("noise frames do not crash") {
    const auto frames = frame_signal(testing::white_noise(0.3, 2));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const auto f = frame_formants(frames.raw(i), fs);
      CHECK(f.size() <= 3);
      for (std::size_t k = 0; k < f.size(); ++k) {
        CHECK(f[k].frequency_hz > 90.0);
        CHECK(f[k].bandwidth_hz > 0.0);
        CHECK(f[k].bandwidth_hz < 1000.0);
        if (k) CHECK(f[k].frequency_hz >= f[k - 1].frequency_hz);
      }
    }
  }
  SUBCASE("Levinson-Durbin recovers an AR(1) model") {
    // r[k] = a^k for x_t = a x_{t-1} + e_t.
    const double a = 0.6;
    const std::vector<double> r{1.0, a, a * a, a * a * a};
    const auto coeffs = levinson_durbin(r, 3);
    CHECK(coeffs[0] == 1.0);
    CHECK(coeffs[1] == doctest::Approx(-a));
    CHECK(std::abs(coeffs[2]) < 1e-12);
    CHECK(std::abs(coeffs[3]) < 1e-12);
  }
}

TEST_CASE("perturbation") {
  SUBCASE("pure 200 Hz sine") {
    const auto a = testing::sine(200.0, 1.0);
    const auto p = extract_perturbation(a, analyze_pitch(frame_signal(a)));
    CHECK(p.jitter_local < 0.002);
    CHECK(p.shimmer_local < 0.005);
    CHECK(p.mean_hnr_db == doctest::Approx(40.0));
  }
  SUBCASE("alternating +-2% periods") {
    const auto a = alternating_period_sine(200.0, 0.02, 1.0);
    const auto p = extract_perturbation(a, analyze_pitch(frame_signal(a)));
    // consecutive periods differ by 0.04 T on average
    CHECK(std::abs(p.jitter_local - 0.04) < 0.01);
  }
  SUBCASE("no voiced run") {
    AudioBuffer z;
    z.samples.assign(16000, 0.0);
    const auto pitch = analyze_pitch(frame_signal(z));
    CHECK(code_of([&] { extract_perturbation(z, pitch); }) == Errc::NoVoicedRun);
  }
  SUBCASE("HNR mapping") {
    CHECK(hnr_from_correlation(0.5) == doctest::Approx(0.0));
    CHECK(hnr_from_correlation(0.9) == doctest::Approx(10.0 * std::log10(9.0)));
    CHECK(hnr_from_correlation(1.0) == 40.0);
    CHECK(hnr_from_correlation(0.0) == -20.0);
  }
}

TEST_CASE("MFCC") {
  // 400 Hz repeats every 40 samples, so frames one hop apart are sample-identical.
  AudioBuffer tone;
  for (int i = 0; i < 8000; ++i) tone.samples.push_back(0.3 * std::sin(2.0 * std::numbers::pi * (i % 40) / 40.0));
  const auto c = extract_mfcc(frame_signal(tone));
  REQUIRE(c.size() == 13);
  CHECK(c[0].name() == "MFCC1");
  SUBCASE("identical frames give identical values") {
    for (const auto& t : c) CHECK(t.values[10] == t.values[20]);
  }
  SUBCASE("scale invariance") {
    auto louder = tone;
    for (auto& v : louder.samples) v *= 2.0;
    const auto c2 = extract_mfcc(frame_signal(louder));
    for (std::size_t k = 0; k < 13; ++k)
      for (std::size_t i = 0; i < c[k].values.size(); ++i) CHECK(std::abs(c[k].values[i] - c2[k].values[i]) < 1e-6);
  }
  SUBCASE("tone and noise differ") {
    const auto n = extract_mfcc(frame_signal(testing::white_noise(0.5, 5)));
    double d2 = 0.0;
    for (std::size_t k = 0; k < 13; ++k) d2 += std::pow(c[k].values[10] - n[k].values[10], 2);
    CHECK(std::sqrt(d2) > 0.1);
  }
}

TEST_CASE("functionals") {
  SUBCASE("constant track") {
    const std::vector<double> v(50, 5.0);
    const auto f = summarize_track(v);
    CHECK(f.mean == 5.0);
    CHECK(f.std == 0.0);
    CHECK(f.p20 == 5.0);
    CHECK(f.p50 == 5.0);
    CHECK(f.p80 == 5.0);
    CHECK(f.covered);
  }
  SUBCASE("1..100") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    CHECK(percentile_oracle(v, 80.0) == doctest::Approx(80.2));
    const auto f = summarize_track(v);
    CHECK(f.p80 == doctest::Approx(percentile_oracle(v, 80.0)));
    CHECK(f.p20 == doctest::Approx(percentile_oracle(v, 20.0)));
    CHECK(f.p50 == doctest::Approx(50.5));
  }
  SUBCASE("NaN-only track") {
    const std::vector<double> v(10, std::nan(""));
    const auto f = summarize_track(v);
    CHECK_FALSE(f.covered);
    CHECK(f.mean == 0.0);
    CHECK(f.p80 == 0.0);
  }
  SUBCASE("monotone transform commutes with percentiles") {
    std::vector<double> v;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 101; ++i) v.push_back(u(rng));
    std::vector<double> e(v.size());
    std::transform(v.begin(), v.end(), e.begin(), [](double x) { return std::exp(x); });
    // 101 values: the 20/50/80th positions fall exactly on ranks
    CHECK(summarize_track(e).p50 == doctest::Approx(std::exp(summarize_track(v).p50)));
    CHECK(summarize_track(e).p80 == doctest::Approx(std::exp(summarize_track(v).p80)));
  }
}

TEST_CASE("GeMLite vector") {
  auto x = testing::resonate(testing::pulse_train(130.0, 1.5, 16000), 600.0, 90.0, 16000);
  testing::scale_to_peak(x, 0.5);
  const auto seg = from(x);
  const auto fv = extract_gemlite(seg);
  const auto& names = gemlite_feature_names();
  CHECK(fv.set_id == kGemliteSetId);
  CHECK(fv.names == names);
  CHECK(fv.values.size() == names.size());
  for (double v : fv.values) CHECK(std::isfinite(v));

  SUBCASE("F0_80th is the 80th percentile of voiced F0") {
    const auto tracks = compute_segment_tracks(seg);
    const auto f0 = finite(tracks.summarized[0].values);
    REQUIRE(tracks.summarized[0].name() == "F0");
    CHECK(fv.at("F0_80th") == doctest::Approx(percentile_oracle(f0, 80.0)).epsilon(1e-12));
  }
  SUBCASE("order and length do not depend on the input") {
    const auto other = extract_gemlite(testing::white_noise(1.0, 3));
    CHECK(other.names == fv.names);
  }
  SUBCASE("unknown name") { CHECK(code_of([&] { fv.at("nope"); }) == Errc::DimMismatch); }
  SUBCASE("amplitude invariance") {
    auto louder = seg;
    for (auto& v : louder.samples) v *= 0.3;
    const auto g = extract_gemlite(louder);
    for (const char* name : {"SlopeV0-500_mean", "AlphaRatio_mean", "HammarbergIndex_mean", "F0_mean",
                             "Jitter_local", "F1_mean", "F2_mean"}) {
      CAPTURE(name);
      CHECK(std::abs(g.at(name) - fv.at(name)) < 1e-6 * std::max(1.0, std::abs(fv.at(name))));
    }
  }
}

TEST_CASE("voicing statistics") {
  FrameTrack f0;
  f0.frame_rate = 100.0;
  const double nan = std::nan("");
  f0.values = {nan, 100, 100, 100, nan, nan, 100, 100, nan, nan};
  const auto v = voicing_stats(f0, 0.1);
  CHECK(v.voiced_fraction == doctest::Approx(0.5));
  CHECK(v.voiced_segment_count_per_s == doctest::Approx(20.0));
  CHECK(v.mean_voiced_run_ms == doctest::Approx(25.0));
}
