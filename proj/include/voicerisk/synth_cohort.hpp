#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "voicerisk/feature_store.hpp"
#include "voicerisk/segmentation.hpp"

namespace voicerisk {

enum class CohortLevel { feature, signal };

/// Shifts in units of the feature's noise scale. female_offset moves the
/// female baseline relative to the male one for every subject.
struct EffectSpec {
  double male_shift = 0.0;
  double female_shift = 0.0;
  double female_offset = 0.0;
};

struct CohortSpec {
  int n_subjects = 20;
  double high_risk_fraction = 0.35;
  double gender_split = 0.5;  // fraction female
  std::map<std::string, EffectSpec> effect;
  double noise_sd = 1.0;    // per segment
  double subject_sd = 0.5;  // per subject and feature
  double phrase_sd = 1.0;   // per phrase and feature, shared by subjects
  std::uint64_t seed = 0;
  CohortLevel level = CohortLevel::feature;
  int repetitions = 2;
  double sentence_s = 1.0;  // signal level
  int embedding_dim = 16;   // feature level; 0 disables
  std::string embedding_name = "synth";

  /// Throws InvalidSpec.
  void validate() const;
};

/// Gender-opposed template: several acoustic functionals and arousal move in
/// opposite directions for high-risk men and women.
std::map<std::string, EffectSpec> default_effect_template();

CohortSpec cohort_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CohortSpec& spec);

/// Signal-level effect keys; shifts are in units of the prior spread below.
inline constexpr const char* kSignalF0 = "F0";         // prior sd (15 Hz male, 20 Hz female)
inline constexpr const char* kSignalF1 = "F1";         // 40 Hz
inline constexpr const char* kSignalTilt = "Tilt";     // 2 dB per octave

struct SynthSubject {
  std::string id;
  Gender gender = Gender::female;
  int risk_score = 1;
};

struct SegmentTruth {
  std::string key;
  double f0_hz = 0.0;
  double f1_hz = 0.0;
  double f2_hz = 0.0;
  double tilt_db_per_octave = 0.0;
};

struct Cohort {
  std::vector<SynthSubject> subjects;
  std::vector<ManifestRow> manifest;
  std::vector<SegmentMeta> segments;
  FeatureTable gemlite;     // feature level only
  FeatureTable embeddings;  // feature level with embedding_dim > 0
  DimensionalScores scores;
  std::vector<SegmentTruth> truth;  // signal level only
};

/// Subjects with gender and risk assignment, in output order.
std::vector<SynthSubject> draw_subjects(const CohortSpec& spec);

/// Feature-level cohort in memory; manifest paths are placeholders.
Cohort generate_features(const CohortSpec& spec);

/// Writes manifest.csv, scores.csv, cohort.json and either gemlite.csv
/// (+ embedding_<name>.csv) or audio/, align/ and truth.json.
Cohort write_cohort(const CohortSpec& spec, const std::filesystem::path& out_dir, int threads = 1);

struct VoiceParams {
  double f0_hz = 120.0;
  double f1_hz = 500.0;
  double f1_bw_hz = 80.0;
  double f2_hz = 1500.0;
  double f2_bw_hz = 100.0;
  double tilt_db_per_octave = -6.0;
  double noise_db = -35.0;  // aspiration noise relative to the harmonic RMS
  double intonation_depth = 0.2;
  double intonation_phase = 0.0;
};

/// Declination from f0 * (1 + depth/2) to f0 * (1 - depth/2) times one and a
/// half cycles of a +-depth/2 intonation swing.
std::vector<double> f0_contour(const VoiceParams& voice, std::size_t n, int sample_rate);

/// Harmonic-plus-noise phrase following f0_contour: harmonics weighted by the
/// tilt and two resonators, with 20 ms onset and offset ramps.
std::vector<double> synth_phrase(const VoiceParams& voice, double duration_s, int sample_rate, std::uint64_t seed);

}  // namespace voicerisk
