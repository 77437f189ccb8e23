#include <algorithm>
#include <cmath>

#include "voicerisk/error.hpp"
#include "voicerisk/features.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

namespace {

constexpr int kMfccCount = 13;

std::vector<std::string> summarized_stems() {
  std::vector<std::string> stems{track_name(TrackKind::f0_hz),          track_name(TrackKind::loudness_rms),
                                 track_name(TrackKind::slope_v0_500),   track_name(TrackKind::alpha_ratio_db),
                                 track_name(TrackKind::hammarberg_db),  track_name(TrackKind::f1_hz),
                                 track_name(TrackKind::f1_bw_hz),       track_name(TrackKind::f2_hz),
                                 track_name(TrackKind::f3_hz)};
  for (int c = 1; c <= kMfccCount; ++c) stems.push_back(track_name(TrackKind::mfcc, c));
  return stems;
}

}  // namespace

double FeatureVector::at(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw Error(Errc::DimMismatch, "feature '" + std::string(name) + "' not in " + set_id);
}

const std::vector<std::string>& gemlite_feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    const auto stems = summarized_stems();
    for (const auto& s : stems) {
      for (const char* f : {"_mean", "_std", "_20th", "_50th", "_80th"}) out.push_back(s + f);
    }
    for (const auto& s : stems) out.push_back(s + "_covered");
    out.insert(out.end(), {"Jitter_local", "Shimmer_local", "HNR_mean"});
    out.insert(out.end(), {"VoicedFraction", "VoicedSegmentsPerSec", "MeanVoicedSegmentLengthMs"});
    return out;
  }();
  return names;
}

TrackFunctionals summarize_track(std::span<const double> values) {
  std::vector<double> defined;
  defined.reserve(values.size());
  for (double v : values) {
    if (!std::isnan(v)) defined.push_back(v);
  }
  TrackFunctionals f;
  if (defined.empty()) return f;
  f.covered = true;
  double sum = 0.0;
  for (double v : defined) sum += v;
  f.mean = sum / static_cast<double>(defined.size());
  double ss = 0.0;
  for (double v : defined) ss += (v - f.mean) * (v - f.mean);
  f.std = std::sqrt(ss / static_cast<double>(defined.size()));
  std::sort(defined.begin(), defined.end());
  f.p20 = percentile_sorted(defined, 0.20);
  f.p50 = percentile_sorted(defined, 0.50);
  f.p80 = percentile_sorted(defined, 0.80);
  return f;
}

VoicingStats voicing_stats(const FrameTrack& f0, double duration_s) {
  VoicingStats s;
  const auto& v = f0.values;
  if (v.empty()) return s;
  std::size_t voiced = 0, runs = 0, run_frames = 0;
  for (std::size_t i = 0; i < v.size();) {
    if (std::isnan(v[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < v.size() && !std::isnan(v[j])) ++j;
    ++runs;
    run_frames += j - i;
    voiced += j - i;
    i = j;
  }
  s.voiced_fraction = static_cast<double>(voiced) / static_cast<double>(v.size());
  s.voiced_segment_count_per_s = duration_s > 0.0 ? runs / duration_s : 0.0;
  s.mean_voiced_run_ms = runs ? 1000.0 * (static_cast<double>(run_frames) / runs) / f0.frame_rate : 0.0;
  return s;
}

FeatureVector apply_functionals(std::span<const FrameTrack> tracks,
                                const std::optional<PerturbationStats>& perturbation,
                                const VoicingStats& voicing) {
  if (tracks.empty()) throw Error(Errc::EmptyTrack, "no tracks to summarize");
  const auto stems = summarized_stems();
  if (tracks.size() != stems.size()) {
    throw Error(Errc::DimMismatch, "expected " + std::to_string(stems.size()) + " tracks, got " +
                                       std::to_string(tracks.size()));
  }
  for (std::size_t t = 0; t < tracks.size(); ++t) {
    if (tracks[t].name() != stems[t]) {
      throw Error(Errc::DimMismatch, "track " + std::to_string(t) + " is " + tracks[t].name() + ", expected " +
                                         stems[t]);
    }
    if (tracks[t].values.empty()) throw Error(Errc::EmptyTrack, "track " + stems[t] + " has no frames");
  }

  FeatureVector fv;
  fv.set_id = std::string(kGemliteSetId);
  fv.names = gemlite_feature_names();
  fv.values.reserve(fv.names.size());
  std::vector<double> coverage;
  for (const auto& track : tracks) {
    const auto f = summarize_track(track.values);
    fv.values.insert(fv.values.end(), {f.mean, f.std, f.p20, f.p50, f.p80});
    coverage.push_back(f.covered ? 1.0 : 0.0);
  }
  fv.values.insert(fv.values.end(), coverage.begin(), coverage.end());
  const PerturbationStats p = perturbation.value_or(PerturbationStats{});
  fv.values.insert(fv.values.end(), {p.jitter_local, p.shimmer_local, p.mean_hnr_db});
  fv.values.insert(fv.values.end(),
                   {voicing.voiced_fraction, voicing.voiced_segment_count_per_s, voicing.mean_voiced_run_ms});
  return fv;
}

SegmentTracks compute_segment_tracks(const AudioBuffer& segment) {
  const Frames frames = frame_signal(segment);
  SegmentTracks out;
  out.duration_s = segment.duration_s();
  out.pitch = analyze_pitch(frames);
  const auto& f0 = out.pitch.f0;
  auto spectral = extract_spectral_measures(frames, f0);
  auto formants = extract_formants(frames, f0);
  auto mfcc = extract_mfcc(frames);

  out.summarized = {f0,
                    loudness_track(frames),
                    std::move(spectral.slope_v0_500),
                    std::move(spectral.alpha_ratio_db),
                    std::move(spectral.hammarberg_db),
                    std::move(formants.f1_hz),
                    std::move(formants.f1_bw_hz),
                    std::move(formants.f2_hz),
                    std::move(formants.f3_hz)};
  for (auto& t : mfcc) out.summarized.push_back(std::move(t));
  return out;
}

FeatureVector extract_gemlite(const AudioBuffer& segment) {
  const auto tracks = compute_segment_tracks(segment);
  std::optional<PerturbationStats> perturbation;
  try {
    perturbation = extract_perturbation(segment, tracks.pitch);
  } catch (const Error& e) {
    if (e.code() != Errc::NoVoicedRun) throw;
  }
  return apply_functionals(tracks.summarized, perturbation, voicing_stats(tracks.pitch.f0, tracks.duration_s));
}

}  // namespace voicerisk
