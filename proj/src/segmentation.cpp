#include "voicerisk/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "csv.hpp"
#include "voicerisk/error.hpp"

namespace voicerisk {

using nlohmann::json;

int sentence_count(Story story) {
  switch (story) {
    case Story::story1: return 6;
    case Story::story2: return 7;
    case Story::story3: return 16;
  }
  return 0;
}

std::string_view to_string(Story story) {
  switch (story) {
    case Story::story1: return "story1";
    case Story::story2: return "story2";
    case Story::story3: return "story3";
  }
  return "?";
}

Story parse_story(std::string_view text) {
  if (text == "story1") return Story::story1;
  if (text == "story2") return Story::story2;
  if (text == "story3") return Story::story3;
  throw Error(Errc::SchemaError, "unknown story_id '" + std::string(text) + "'");
}

std::string_view to_string(Gender gender) {
  return gender == Gender::female ? "female" : "male";
}

Gender parse_gender(std::string_view text) {
  if (text == "female" || text == "f" || text == "F") return Gender::female;
  if (text == "male" || text == "m" || text == "M") return Gender::male;
  throw Error(Errc::SchemaError, "unknown gender '" + std::string(text) + "'");
}

std::string PhraseId::key() const {
  return std::string(to_string(story)) + "/" + std::to_string(sentence_index);
}

std::string segment_key(std::string_view subject_id, const PhraseId& phrase, int repetition) {
  std::string key(subject_id);
  key += '/';
  key += phrase.key();
  key += '/';
  key += std::to_string(repetition);
  return key;
}

namespace {

void check_phrase(const PhraseId& phrase) {
  if (phrase.sentence_index < 0 || phrase.sentence_index >= sentence_count(phrase.story)) {
    throw Error(Errc::IndexOutOfRange, std::string(to_string(phrase.story)) + " has " +
                                           std::to_string(sentence_count(phrase.story)) +
                                           " sentences; got index " + std::to_string(phrase.sentence_index));
  }
}

void sort_and_check(std::vector<AlignmentEntry>& entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const AlignmentEntry& a, const AlignmentEntry& b) { return a.start_s < b.start_s; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].start_s < entries[i - 1].end_s) {
      throw Error(Errc::OverlapError, entries[i - 1].phrase.key() + " overlaps " + entries[i].phrase.key());
    }
  }
}

}  // namespace

std::vector<AlignmentEntry> parse_alignment(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(Errc::SchemaError, "alignment must be a JSON array");

  std::vector<AlignmentEntry> entries;
  entries.reserve(doc.size());
  for (const auto& item : doc) {
    if (!item.is_object()) throw Error(Errc::SchemaError, "alignment entry must be an object");
    for (const char* field : {"story_id", "sentence_index", "start_s", "end_s"}) {
      if (!item.contains(field)) throw Error(Errc::SchemaError, std::string("missing field ") + field);
    }
    if (!item["story_id"].is_string() || !item["sentence_index"].is_number_integer() ||
        !item["start_s"].is_number() || !item["end_s"].is_number()) {
      throw Error(Errc::SchemaError, "alignment field has wrong type");
    }
    AlignmentEntry e;
    e.phrase.story = parse_story(item["story_id"].get<std::string>());
    e.phrase.sentence_index = item["sentence_index"].get<int>();
    e.start_s = item["start_s"].get<double>();
    e.end_s = item["end_s"].get<double>();
    if (item.contains("text") && item["text"].is_string()) e.text = item["text"].get<std::string>();
    if (!std::isfinite(e.start_s) || !std::isfinite(e.end_s) || e.start_s < 0.0 || e.end_s <= e.start_s) {
      throw Error(Errc::SchemaError, "entry " + e.phrase.key() + " needs 0 <= start_s < end_s");
    }
    check_phrase(e.phrase);
    entries.push_back(std::move(e));
  }
  sort_and_check(entries);
  return entries;
}

std::vector<AlignmentEntry> load_alignment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open alignment " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_alignment(ss.str());
}

void save_alignment(const std::filesystem::path& path, std::span<const AlignmentEntry> entries) {
  json doc = json::array();
  for (const auto& e : entries) {
    doc.push_back({{"story_id", to_string(e.phrase.story)},
                   {"sentence_index", e.phrase.sentence_index},
                   {"start_s", e.start_s},
                   {"end_s", e.end_s},
                   {"text", e.text}});
  }
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

std::vector<SegmentRecord> segment_by_alignment(const AudioBuffer& audio,
                                                std::span<const AlignmentEntry> entries,
                                                const RecordingMeta& meta) {
  const double fs = audio.sample_rate;
  const auto n = audio.samples.size();
  std::vector<SegmentRecord> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    const auto begin = static_cast<std::size_t>(std::llround(e.start_s * fs));
    const auto end = static_cast<std::size_t>(std::llround(e.end_s * fs));
    if (end > n || begin >= end) {
      throw Error(Errc::OutOfBounds, e.phrase.key() + " spans [" + std::to_string(e.start_s) + ", " +
                                         std::to_string(e.end_s) + ") s of a " +
                                         std::to_string(audio.duration_s()) + " s recording");
    }
    SegmentRecord rec;
    rec.subject_id = meta.subject_id;
    rec.gender = meta.gender;
    rec.risk_score = meta.risk_score;
    rec.repetition = meta.repetition;
    rec.phrase = e.phrase;
    rec.start_s = e.start_s;
    rec.end_s = e.end_s;
    rec.audio.sample_rate = audio.sample_rate;
    rec.audio.samples.assign(audio.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                             audio.samples.begin() + static_cast<std::ptrdiff_t>(end));
    rec.audio.source_id = audio.source_id + "#" + e.phrase.key();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<Span> segment_by_energy(const AudioBuffer& audio, const EnergyVadOptions& options) {
  const auto frame = static_cast<std::size_t>(std::llround(options.frame_ms * audio.sample_rate / 1000.0));
  if (frame == 0) throw Error(Errc::ConfigError, "frame length rounds to zero samples");
  const std::size_t n_frames = audio.samples.size() / frame;

  std::vector<double> energy(n_frames);
  double peak = 0.0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < frame; ++k) {
      const double s = audio.samples[i * frame + k];
      acc += s * s;
    }
    energy[i] = acc / static_cast<double>(frame);
    peak = std::max(peak, energy[i]);
  }
  if (!(peak > 0.0)) throw Error(Errc::SilentInput, "energy segmentation of silent audio " + audio.source_id);

  const double threshold = peak * std::pow(10.0, options.threshold_db / 10.0);
  const double frame_s = static_cast<double>(frame) / audio.sample_rate;

  // Active runs in frame units [first, last).
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < n_frames;) {
    if (energy[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n_frames && energy[j] > threshold) ++j;
    runs.emplace_back(i, j);
    i = j;
  }

  // Bridge pauses shorter than min_pause_ms.
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && (r.first - merged.back().second) * frame_s * 1000.0 < options.min_pause_ms) {
      merged.back().second = r.second;
    } else {
      merged.push_back(r);
    }
  }

  std::vector<Span> spans;
  for (const auto& [first, last] : merged) {
    const double dur_ms = (last - first) * frame_s * 1000.0;
    if (dur_ms + 1e-9 < options.min_seg_ms) continue;
    spans.push_back({first * frame_s, last * frame_s});
  }
  return spans;
}

std::vector<AlignmentEntry> entries_from_spans(Story story, std::span<const Span> spans) {
  if (static_cast<int>(spans.size()) > sentence_count(story)) {
    throw Error(Errc::IndexOutOfRange, "energy segmentation found " + std::to_string(spans.size()) +
                                           " spans but " + std::string(to_string(story)) + " has " +
                                           std::to_string(sentence_count(story)) + " sentences");
  }
  std::vector<AlignmentEntry> entries;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    entries.push_back({PhraseId{story, static_cast<int>(i)}, spans[i].start_s, spans[i].end_s, ""});
  }
  return entries;
}

std::vector<ManifestRow> load_manifest(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::vector<std::string> expected{"subject_id", "gender",    "risk_score",    "story_id",
                                          "repetition", "audio_path", "alignment_path"};
  if (table.header != expected) {
    throw Error(Errc::SchemaError, path.string() + ": manifest header must be subject_id,gender,risk_score,"
                                                   "story_id,repetition,audio_path,alignment_path");
  }
  const auto base = path.parent_path();
  auto resolve = [&base](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<ManifestRow> rows;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    if (f.size() != expected.size()) throw Error(Errc::SchemaError, where + ": expected 7 columns");
    ManifestRow row;
    row.subject_id = f[0];
    if (row.subject_id.empty() || row.subject_id.find('/') != std::string::npos) {
      throw Error(Errc::SchemaError, where + ": subject_id must be non-empty and contain no '/'");
    }
    row.gender = parse_gender(f[1]);
    if (!csv::parse_int(f[2], row.risk_score) || row.risk_score < 1 || row.risk_score > 6) {
      throw Error(Errc::SchemaError, where + ": risk_score must be an integer in 1..6");
    }
    row.story = parse_story(f[3]);
    if (!csv::parse_int(f[4], row.repetition) || row.repetition < 1 || row.repetition > 2) {
      throw Error(Errc::SchemaError, where + ": repetition must be 1 or 2");
    }
    row.audio_path = resolve(f[5]);
    row.alignment_path = resolve(f[6]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_manifest(const std::filesystem::path& path, std::span<const ManifestRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "subject_id,gender,risk_score,story_id,repetition,audio_path,alignment_path\n";
  for (const auto& r : rows) {
    out << r.subject_id << ',' << to_string(r.gender) << ',' << r.risk_score << ',' << to_string(r.story) << ','
        << r.repetition << ',' << r.audio_path.generic_string() << ',' << r.alignment_path.generic_string() << '\n';
  }
}

std::vector<SegmentMeta> expand_manifest(std::span<const ManifestRow> rows) {
  std::vector<SegmentMeta> out;
  for (const auto& r : rows) {
    for (int s = 0; s < sentence_count(r.story); ++s) {
      out.push_back({r.subject_id, r.gender, r.risk_score, PhraseId{r.story, s}, r.repetition});
    }
  }
  return out;
}

}  // namespace voicerisk
