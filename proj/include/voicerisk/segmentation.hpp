#pragma once

#include <compare>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voicerisk/audio_io.hpp"

namespace voicerisk {

enum class Story { story1, story2, story3 };
enum class Gender { female, male };

/// Sentences per read story: 6, 7 and 16.
int sentence_count(Story story);
std::string_view to_string(Story story);
Story parse_story(std::string_view text);  // throws SchemaError
std::string_view to_string(Gender gender);
Gender parse_gender(std::string_view text);  // accepts female/male/f/m

inline constexpr int kSentencesPerSession = 6 + 7 + 16;

/// Risk scores 5 and 6 are the high-risk class.
inline bool is_high_risk(int risk_score) { return risk_score >= 5; }

struct PhraseId {
  Story story = Story::story1;
  int sentence_index = 0;

  auto operator<=>(const PhraseId&) const = default;
  std::string key() const;  // "story1/3"
};

struct AlignmentEntry {
  PhraseId phrase;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;
};

/// Reads a JSON array of {story_id, sentence_index, start_s, end_s, text}.
/// Entries come back sorted by start time; overlapping spans are rejected.
std::vector<AlignmentEntry> load_alignment(const std::filesystem::path& path);
std::vector<AlignmentEntry> parse_alignment(std::string_view json_text);
void save_alignment(const std::filesystem::path& path, std::span<const AlignmentEntry> entries);

struct RecordingMeta {
  std::string subject_id;
  Gender gender = Gender::female;
  int risk_score = 1;
  int repetition = 1;
};

std::string segment_key(std::string_view subject_id, const PhraseId& phrase, int repetition);

struct SegmentRecord {
  std::string subject_id;
  Gender gender = Gender::female;
  int risk_score = 1;
  PhraseId phrase;
  int repetition = 1;
  double start_s = 0.0;
  double end_s = 0.0;
  AudioBuffer audio;

  bool high_risk() const { return is_high_risk(risk_score); }
  std::string key() const { return segment_key(subject_id, phrase, repetition); }
};

/// Cuts one SegmentRecord per alignment entry. Sample bounds are
/// round(t * fs); an entry ending past the buffer throws OutOfBounds.
std::vector<SegmentRecord> segment_by_alignment(const AudioBuffer& audio,
                                                std::span<const AlignmentEntry> entries,
                                                const RecordingMeta& meta);

struct Span {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct EnergyVadOptions {
  double min_pause_ms = 300.0;
  double min_seg_ms = 500.0;
  double threshold_db = -40.0;  // relative to the loudest 10 ms frame
  double frame_ms = 10.0;
};

/// Energy fallback: voiced runs separated by pauses of at least
/// min_pause_ms, each kept only when at least min_seg_ms long.
std::vector<Span> segment_by_energy(const AudioBuffer& audio, const EnergyVadOptions& options = {});

/// Assigns synthetic PhraseIds 0..k-1 of `story` to spans in input order.
std::vector<AlignmentEntry> entries_from_spans(Story story, std::span<const Span> spans);

// Dataset manifest: one row per recording (subject, story, repetition).

struct ManifestRow {
  std::string subject_id;
  Gender gender = Gender::female;
  int risk_score = 1;
  Story story = Story::story1;
  int repetition = 1;
  std::filesystem::path audio_path;
  std::filesystem::path alignment_path;
};

/// CSV with header subject_id,gender,risk_score,story_id,repetition,audio_path,alignment_path.
/// Relative paths resolve against the manifest's directory.
std::vector<ManifestRow> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows);

/// Per-segment metadata of a manifest, without audio.
struct SegmentMeta {
  std::string subject_id;
  Gender gender = Gender::female;
  int risk_score = 1;
  PhraseId phrase;
  int repetition = 1;

  bool high_risk() const { return is_high_risk(risk_score); }
  std::string key() const { return segment_key(subject_id, phrase, repetition); }
};

/// Expands each recording into its story's sentences, in manifest order.
std::vector<SegmentMeta> expand_manifest(std::span<const ManifestRow> rows);

}  // namespace voicerisk
