#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voicerisk/audio_io.hpp"

namespace voicerisk {

// ---------------------------------------------------------------------------
// Framing
// ---------------------------------------------------------------------------

struct FrameConfig {
  double win_ms = 25.0;
  double hop_ms = 10.0;
};

/// Hann-windowed analysis frames. The unwindowed source signal is kept so
/// that pitch and perturbation analysis can look past the window edge.
struct Frames {
  int sample_rate = kPipelineSampleRate;
  std::size_t win_len = 0;
  std::size_t hop_len = 0;
  std::vector<std::vector<double>> windowed;
  std::vector<double> signal;

  std::size_t size() const { return windowed.size(); }
  double frame_rate() const { return static_cast<double>(sample_rate) / static_cast<double>(hop_len); }
  std::span<const double> raw(std::size_t i) const {
    return std::span<const double>(signal).subspan(i * hop_len, win_len);
  }
};

/// floor((len - win) / hop) + 1 frames; throws TooShort when len < win.
Frames frame_signal(const AudioBuffer& audio, const FrameConfig& config = {});

// ---------------------------------------------------------------------------
// Frame-level tracks
// ---------------------------------------------------------------------------

enum class TrackKind {
  f0_hz,
  loudness_rms,
  slope_v0_500,
  alpha_ratio_db,
  hammarberg_db,
  f1_hz,
  f1_bw_hz,
  f2_hz,
  f3_hz,
  hnr_db,
  mfcc,  // coefficient index in FrameTrack::coefficient
};

/// Name stem used for functionals, e.g. "F0", "HammarbergIndex", "MFCC3".
std::string track_name(TrackKind kind, int coefficient = 0);

/// NaN marks frames where the descriptor is undefined (e.g. unvoiced F0).
struct FrameTrack {
  TrackKind kind = TrackKind::f0_hz;
  int coefficient = 0;
  double frame_rate = 100.0;
  std::vector<double> values;

  std::string name() const { return track_name(kind, coefficient); }
};

inline constexpr double kF0MinHz = 50.0;
inline constexpr double kF0MaxHz = 600.0;
inline constexpr double kVoicingThreshold = 0.45;

struct PitchAnalysis {
  FrameTrack f0;                 // Hz, NaN when unvoiced
  std::vector<double> strength;  // normalized cross-correlation peak per frame, NaN if undefined
  std::size_t win_len = 0;
  std::size_t hop_len = 0;
  int sample_rate = kPipelineSampleRate;
};

/// Normalized cross-correlation pitch tracker over lags for 50-600 Hz with
/// parabolic peak interpolation. Frames whose peak is below 0.45 are unvoiced.
PitchAnalysis analyze_pitch(const Frames& frames);
FrameTrack extract_f0(const Frames& frames);

/// 10*log10(r/(1-r)) of the voicing strength, clamped to [-20, 40] dB, on voiced frames.
FrameTrack hnr_track(const PitchAnalysis& pitch);
double hnr_from_correlation(double r);

FrameTrack loudness_track(const Frames& frames);

inline constexpr std::size_t kMinFftSize = 512;

/// One-sided power spectrum of a (windowed) frame, zero-padded to the next
/// power of two that is at least 512.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t* fft_size = nullptr);

struct SpectralTracks {
  FrameTrack slope_v0_500;    // dB/Hz, voiced frames only
  FrameTrack alpha_ratio_db;  // 10 log10(E[1k,5k) / E[50,1k))
  FrameTrack hammarberg_db;   // max dB in [0,2k) minus max dB in [2k,5k)
};

struct SpectralMeasures {
  double slope_v0_500 = 0.0;
  double alpha_ratio_db = 0.0;
  double hammarberg_db = 0.0;
};

/// Single frame; throws ZeroSpectrum when the frame carries no energy.
SpectralMeasures spectral_measures(std::span<const double> frame, int sample_rate);

/// Per-frame measures; all-zero frames yield NaN, and an input where every
/// frame is all-zero throws ZeroSpectrum.
SpectralTracks extract_spectral_measures(const Frames& frames, const FrameTrack& voicing);

struct Formant {
  double frequency_hz = 0.0;
  double bandwidth_hz = 0.0;
};

/// Pre-emphasis and a Hann window on one unwindowed frame, LPC by the
/// autocorrelation method (Levinson-Durbin), then polynomial roots. Returns up to three formants with bandwidth < 1000 Hz and frequency
/// > 90 Hz, sorted by frequency. Empty when nothing qualifies.
std::vector<Formant> frame_formants(std::span<const double> frame, int sample_rate, int lpc_order = 12);

/// Levinson-Durbin on autocorrelation r[0..order]; returns a[0..order] with a[0] = 1.
std::vector<double> levinson_durbin(std::span<const double> autocorr, int order);

struct FormantTracks {
  FrameTrack f1_hz;
  FrameTrack f1_bw_hz;
  FrameTrack f2_hz;
  FrameTrack f3_hz;
};

FormantTracks extract_formants(const Frames& frames, const FrameTrack& voicing, int lpc_order = 12);

struct PerturbationStats {
  double jitter_local = 0.0;
  double shimmer_local = 0.0;
  double mean_hnr_db = 0.0;
};

/// Period marks are placed at the rising zero crossing that precedes each
/// cycle's main peak, tracked through voiced runs of >= 3 frames. Throws
/// NoVoicedRun when no such run yields two consecutive periods.
PerturbationStats extract_perturbation(const AudioBuffer& segment, const PitchAnalysis& pitch);

/// Mel filterbank (50 Hz to fs/2), log energies, DCT-II; returns c1..c{n_coeffs}.
std::vector<FrameTrack> extract_mfcc(const Frames& frames, int n_coeffs = 13, int n_mels = 26);

// ---------------------------------------------------------------------------
// Functionals ("GeMLite")
// ---------------------------------------------------------------------------

struct FeatureVector {
  std::string set_id;
  std::vector<std::string> names;
  std::vector<double> values;

  double at(std::string_view name) const;  // throws DimMismatch when absent
};

inline constexpr std::string_view kGemliteSetId = "gemlite";

/// Fixed feature order: per summarized track {mean, std, 20th, 50th, 80th},
/// then one coverage flag per track, then jitter/shimmer/HNR, then the three
/// temporal features.
const std::vector<std::string>& gemlite_feature_names();

struct TrackFunctionals {
  double mean = 0.0;
  double std = 0.0;
  double p20 = 0.0;
  double p50 = 0.0;
  double p80 = 0.0;
  bool covered = false;
};

/// NaN frames are skipped; a NaN-only track yields zeros with covered = false.
TrackFunctionals summarize_track(std::span<const double> values);

struct VoicingStats {
  double voiced_fraction = 0.0;
  double voiced_segment_count_per_s = 0.0;
  double mean_voiced_run_ms = 0.0;
};

VoicingStats voicing_stats(const FrameTrack& f0, double duration_s);

/// tracks must be the summarized tracks in gemlite order (see
/// compute_segment_tracks). Missing perturbation stats contribute zeros.
FeatureVector apply_functionals(std::span<const FrameTrack> tracks,
                                const std::optional<PerturbationStats>& perturbation,
                                const VoicingStats& voicing);

struct SegmentTracks {
  std::vector<FrameTrack> summarized;  // F0, Loudness, slope, alpha, hammarberg, F1, F1bw, F2, F3, MFCC1..13
  PitchAnalysis pitch;
  double duration_s = 0.0;
};

SegmentTracks compute_segment_tracks(const AudioBuffer& segment);

/// Full chain for one segment: frames, descriptors, perturbation, functionals.
FeatureVector extract_gemlite(const AudioBuffer& segment);

}  // namespace voicerisk
