#include "voicerisk/synth_cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "voicerisk/audio_io.hpp"
#include "voicerisk/error.hpp"
#include "voicerisk/features.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

namespace {

const std::array<const char*, 3> kScoreDims{"arousal", "dominance", "valence"};

bool is_score_dim(const std::string& name) {
  return std::find(kScoreDims.begin(), kScoreDims.end(), name) != kScoreDims.end();
}

bool is_signal_key(const std::string& name) {
  return name == kSignalF0 || name == kSignalF1 || name == kSignalTilt;
}

std::vector<PhraseId> session_phrases() {
  std::vector<PhraseId> out;
  for (Story s : {Story::story1, Story::story2, Story::story3})
    for (int i = 0; i < sentence_count(s); ++i) out.push_back({s, i});
  return out;
}

double effect_of(const CohortSpec& spec, const std::string& name, const SynthSubject& s) {
  auto it = spec.effect.find(name);
  if (it == spec.effect.end()) return 0.0;
  double v = s.gender == Gender::female ? it->second.female_offset : 0.0;
  if (is_high_risk(s.risk_score)) v += s.gender == Gender::male ? it->second.male_shift : it->second.female_shift;
  return v;
}

std::string subject_id(int i, int n) {
  const int width = n >= 100 ? 3 : 2;
  std::string num = std::to_string(i + 1);
  return "S" + std::string(width - std::min<int>(width, static_cast<int>(num.size())), '0') + num;
}

std::string recording_stem(const std::string& subject, Story story, int rep) {
  return subject + "_" + std::string(to_string(story)) + "_r" + std::to_string(rep);
}

}  // namespace

void CohortSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(Errc::InvalidSpec, msg); };
  if (n_subjects < 4) fail("n_subjects must be at least 4");
  if (!(high_risk_fraction >= 0.0 && high_risk_fraction <= 1.0)) fail("high_risk_fraction must lie in [0,1]");
  if (!(gender_split >= 0.0 && gender_split <= 1.0)) fail("gender_split must lie in [0,1]");
  if (!(noise_sd >= 0.0) || !(subject_sd >= 0.0) || !(phrase_sd >= 0.0)) fail("standard deviations must be >= 0");
  if (repetitions < 1) fail("repetitions must be >= 1");
  if (embedding_dim < 0) fail("embedding_dim must be >= 0");
  if (level == CohortLevel::signal && !(sentence_s >= 0.1 && sentence_s <= 30.0)) {
    fail("sentence_s must lie in [0.1, 30]");
  }
  const int n_female = static_cast<int>(std::lround(n_subjects * gender_split));
  const int n_high = static_cast<int>(std::lround(n_subjects * high_risk_fraction));
  if (n_female == 0 || n_female == n_subjects) fail("both genders must be present");
  if (n_high == 0 || n_high == n_subjects) fail("both risk classes must be present");
  const auto& names = gemlite_feature_names();
  const std::set<std::string> known(names.begin(), names.end());
  for (const auto& [name, e] : effect) {
    if (!std::isfinite(e.male_shift) || !std::isfinite(e.female_shift) || !std::isfinite(e.female_offset)) {
      fail("non-finite effect for " + name);
    }
    const bool ok = is_score_dim(name) || (level == CohortLevel::feature ? known.count(name) > 0 : is_signal_key(name));
    if (!ok) fail("unknown effect target '" + name + "'");
  }
}

std::map<std::string, EffectSpec> default_effect_template() {
  return {
      {"AlphaRatio_mean", {1.5, -1.5, 0.0}},
      {"F0_80th", {1.5, -1.5, 0.0}},
      {"HammarbergIndex_mean", {-1.5, 1.5, 0.0}},
      {"MFCC2_mean", {1.5, -1.5, 0.0}},
      {"arousal", {1.5, -1.5, 0.0}},
  };
}

CohortSpec cohort_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidSpec, "cohort spec must be a JSON object");
  static const std::set<std::string> allowed{"n_subjects", "high_risk_fraction", "gender_split", "effect",
                                             "noise_sd",   "subject_sd",         "phrase_sd",    "seed",
                                             "level",      "repetitions",        "sentence_s",   "embedding_dim",
                                             "embedding_name"};
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) throw Error(Errc::InvalidSpec, "unknown field '" + k + "'");
  }
  CohortSpec s;
  try {
    s.n_subjects = j.value("n_subjects", s.n_subjects);
    s.high_risk_fraction = j.value("high_risk_fraction", s.high_risk_fraction);
    s.gender_split = j.value("gender_split", s.gender_split);
    s.noise_sd = j.value("noise_sd", s.noise_sd);
    s.subject_sd = j.value("subject_sd", s.subject_sd);
    s.phrase_sd = j.value("phrase_sd", s.phrase_sd);
    if (!j.contains("seed")) throw Error(Errc::InvalidSpec, "seed is required");
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto level = j.value("level", std::string("feature"));
    if (level == "feature") {
      s.level = CohortLevel::feature;
    } else if (level == "signal") {
      s.level = CohortLevel::signal;
    } else {
      throw Error(Errc::InvalidSpec, "level must be 'feature' or 'signal'");
    }
    s.repetitions = j.value("repetitions", s.repetitions);
    s.sentence_s = j.value("sentence_s", s.sentence_s);
    s.embedding_dim = j.value("embedding_dim", s.embedding_dim);
    s.embedding_name = j.value("embedding_name", s.embedding_name);
    if (j.contains("effect")) {
      const auto& e = j.at("effect");
      if (e.is_string() && e.get<std::string>() == "default") {
        s.effect = default_effect_template();
      } else {
        for (const auto& [name, v] : e.items()) {
          for (const auto& [k, _] : v.items()) {
            if (k != "male_shift" && k != "female_shift" && k != "female_offset") {
              throw Error(Errc::InvalidSpec, "unknown effect field '" + k + "'");
            }
          }
          s.effect[name] = {v.value("male_shift", 0.0), v.value("female_shift", 0.0), v.value("female_offset", 0.0)};
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const CohortSpec& s) {
  nlohmann::json effect = nlohmann::json::object();
  for (const auto& [name, e] : s.effect) {
    effect[name] = {{"male_shift", e.male_shift}, {"female_shift", e.female_shift}, {"female_offset", e.female_offset}};
  }
  return {{"n_subjects", s.n_subjects},
          {"high_risk_fraction", s.high_risk_fraction},
          {"gender_split", s.gender_split},
          {"effect", effect},
          {"noise_sd", s.noise_sd},
          {"subject_sd", s.subject_sd},
          {"phrase_sd", s.phrase_sd},
          {"seed", s.seed},
          {"level", s.level == CohortLevel::feature ? "feature" : "signal"},
          {"repetitions", s.repetitions},
          {"sentence_s", s.sentence_s},
          {"embedding_dim", s.embedding_dim},
          {"embedding_name", s.embedding_name}};
}

std::vector<SynthSubject> draw_subjects(const CohortSpec& spec) {
  spec.validate();
  const int n = spec.n_subjects;
  const int n_female = static_cast<int>(std::lround(n * spec.gender_split));
  const int n_high = static_cast<int>(std::lround(n * spec.high_risk_fraction));
  const int female_high = std::min(n_female, n_high * n_female / n);
  const int male_high = std::min(n - n_female, n_high - female_high);

  struct Slot {
    Gender gender;
    bool high;
  };
  std::vector<Slot> slots;
  for (int i = 0; i < n_female; ++i) slots.push_back({Gender::female, i < female_high});
  for (int i = 0; i < n - n_female; ++i) slots.push_back({Gender::male, i < male_high});
  std::mt19937_64 rng(mix_seed(spec.seed, 0xC0401));
  std::shuffle(slots.begin(), slots.end(), rng);

  std::vector<SynthSubject> out;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 srng(mix_seed(spec.seed, 0x5B000 + static_cast<std::uint64_t>(i)));
    std::uniform_int_distribution<int> high_score(5, 6), low_score(1, 4);
    const int score = slots[i].high ? high_score(srng) : low_score(srng);
    out.push_back({subject_id(i, n), slots[i].gender, score});
  }
  return out;
}

namespace {

std::vector<ManifestRow> manifest_rows(const std::vector<SynthSubject>& subjects, int repetitions) {
  std::vector<ManifestRow> rows;
  for (const auto& s : subjects) {
    for (Story story : {Story::story1, Story::story2, Story::story3}) {
      for (int rep = 1; rep <= repetitions; ++rep) {
        const auto stem = recording_stem(s.id, story, rep);
        rows.push_back({s.id, s.gender, s.risk_score, story, rep, std::filesystem::path("audio") / (stem + ".wav"),
                        std::filesystem::path("align") / (stem + ".json")});
      }
    }
  }
  return rows;
}

// Emotion-dimension scores share the feature-level noise model.
void add_scores(const CohortSpec& spec, const std::vector<SynthSubject>& subjects,
                const std::vector<SegmentMeta>& segments, DimensionalScores& scores) {
  const auto phrases = session_phrases();
  std::mt19937_64 prng(mix_seed(spec.seed, 0xD1));
  std::normal_distribution<double> z(0.0, 1.0);
  std::map<PhraseId, std::array<double, 3>> phrase_off;
  for (const auto& p : phrases)
    for (auto& v : phrase_off[p]) v = spec.phrase_sd * z(prng);

  std::size_t row = 0;
  for (std::size_t si = 0; si < subjects.size(); ++si) {
    const auto& s = subjects[si];
    std::mt19937_64 rng(mix_seed(spec.seed, 0xD100 + si));
    std::array<double, 3> subj{};
    for (auto& v : subj) v = spec.subject_sd * z(rng);
    for (; row < segments.size() && segments[row].subject_id == s.id; ++row) {
      const auto& seg = segments[row];
      std::array<double, 3> v{};
      for (std::size_t d = 0; d < 3; ++d) {
        v[d] = phrase_off[seg.phrase][d] + subj[d] + effect_of(spec, kScoreDims[d], s) + spec.noise_sd * z(rng);
      }
      scores.add(seg.key(), {v[0], v[1], v[2]});
    }
  }
}

}  // namespace

Cohort generate_features(const CohortSpec& spec) {
  Cohort c;
  c.subjects = draw_subjects(spec);
  c.manifest = manifest_rows(c.subjects, spec.repetitions);
  c.segments = expand_manifest(c.manifest);

  const auto& names = gemlite_feature_names();
  const std::size_t d = names.size();
  const auto phrases = session_phrases();

  std::mt19937_64 prng(mix_seed(spec.seed, 0xF0));
  std::normal_distribution<double> z(0.0, 1.0);
  std::map<PhraseId, std::vector<double>> phrase_off;
  for (const auto& p : phrases) {
    auto& v = phrase_off[p];
    v.resize(d);
    for (auto& x : v) x = spec.phrase_sd * z(prng);
  }
  // embeddings mix the acoustic effects through a fixed random projection
  std::vector<std::string> effect_names;
  for (const auto& [name, e] : spec.effect)
    if (!is_score_dim(name)) effect_names.push_back(name);
  const std::size_t D = static_cast<std::size_t>(spec.embedding_dim);
  std::vector<double> proj(D * effect_names.size());
  for (auto& x : proj) x = z(prng) / std::sqrt(static_cast<double>(std::max<std::size_t>(1, effect_names.size())));
  std::map<PhraseId, std::vector<double>> phrase_off_emb;
  for (const auto& p : phrases) {
    auto& v = phrase_off_emb[p];
    v.resize(D);
    for (auto& x : v) x = spec.phrase_sd * z(prng);
  }

  c.gemlite = FeatureTable("gemlite", names);
  std::vector<std::string> emb_names;
  for (std::size_t j = 0; j < D; ++j) emb_names.push_back("d" + std::to_string(j));
  c.embeddings = FeatureTable("embedding:" + spec.embedding_name, emb_names);

  std::size_t row = 0;
  for (std::size_t si = 0; si < c.subjects.size(); ++si) {
    const auto& s = c.subjects[si];
    std::mt19937_64 rng(mix_seed(spec.seed, 0xF000 + si));
    std::vector<double> base(d), shift(d), emb_base(D, 0.0);
    for (std::size_t f = 0; f < d; ++f) {
      base[f] = spec.subject_sd * z(rng);
      shift[f] = effect_of(spec, names[f], s);
    }
    for (std::size_t j = 0; j < D; ++j) {
      emb_base[j] = spec.subject_sd * z(rng);
      for (std::size_t k = 0; k < effect_names.size(); ++k) {
        emb_base[j] += proj[j * effect_names.size() + k] * effect_of(spec, effect_names[k], s);
      }
    }
    for (; row < c.segments.size() && c.segments[row].subject_id == s.id; ++row) {
      const auto& seg = c.segments[row];
      std::vector<double> v(d), e(D);
      const auto& po = phrase_off[seg.phrase];
      for (std::size_t f = 0; f < d; ++f) v[f] = po[f] + base[f] + shift[f] + spec.noise_sd * z(rng);
      const auto& pe = phrase_off_emb[seg.phrase];
      for (std::size_t j = 0; j < D; ++j) e[j] = pe[j] + emb_base[j] + spec.noise_sd * z(rng);
      c.gemlite.add(seg.key(), std::move(v));
      if (D > 0) c.embeddings.add(seg.key(), std::move(e));
    }
  }
  add_scores(spec, c.subjects, c.segments, c.scores);
  return c;
}

std::vector<double> f0_contour(const VoiceParams& voice, std::size_t n, int sample_rate) {
  std::vector<double> f(n);
  const double dur = static_cast<double>(n) / sample_rate;
  const double d = voice.intonation_depth;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    f[i] = voice.f0_hz * (1.0 + d * (0.5 - t / dur)) *
           (1.0 + 0.5 * d * std::sin(3.0 * std::numbers::pi * t / dur + voice.intonation_phase));
  }
  return f;
}

std::vector<double> synth_phrase(const VoiceParams& voice, double duration_s, int sample_rate, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  std::vector<double> x(n, 0.0);
  const double fs = sample_rate;
  const double top = std::min(0.45 * fs, 7000.0);
  auto resonance = [](double f, double F, double B) {
    const double a = F * F - f * f;
    return F * F / std::sqrt(a * a + f * f * B * B);
  };
  const auto f0 = f0_contour(voice, n, sample_rate);
  std::vector<double> phase(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += 2.0 * std::numbers::pi * f0[i] / fs;
    phase[i] = acc;
  }
  const double f0_max = n ? *std::max_element(f0.begin(), f0.end()) : voice.f0_hz;
  for (int k = 1; k * f0_max < top; ++k) {
    const double tilt = std::pow(10.0, voice.tilt_db_per_octave * std::log2(static_cast<double>(k)) / 20.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = k * f0[i];
      x[i] += tilt * resonance(f, voice.f1_hz, voice.f1_bw_hz) * resonance(f, voice.f2_hz, voice.f2_bw_hz) *
              std::cos(k * phase[i]);
    }
  }
  const double harmonic_rms = rms(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const double noise = harmonic_rms * std::pow(10.0, voice.noise_db / 20.0);
  for (auto& v : x) v += noise * z(rng);
  const auto ramp = std::min<std::size_t>(n / 2, static_cast<std::size_t>(0.02 * fs));
  for (std::size_t i = 0; i < ramp; ++i) {
    const double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(ramp));
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
  return x;
}

namespace {

constexpr int kSynthRate = 16000;
constexpr double kLeadSilence = 0.4;
constexpr double kGap = 0.5;

struct SubjectAudio {
  std::vector<AudioBuffer> recordings;
  std::vector<std::vector<AlignmentEntry>> alignments;
  std::vector<SegmentTruth> truth;
};

SubjectAudio synth_subject(const CohortSpec& spec, const SynthSubject& s, std::size_t index) {
  std::mt19937_64 rng(mix_seed(spec.seed, 0xA000 + index));
  std::normal_distribution<double> z(0.0, 1.0);
  const bool male = s.gender == Gender::male;
  const double f0_sd = male ? 15.0 : 20.0;
  VoiceParams voice;
  voice.f0_hz = (male ? 120.0 : 210.0) + f0_sd * (z(rng) + effect_of(spec, kSignalF0, s));
  voice.f1_hz = (male ? 500.0 : 600.0) + 25.0 * z(rng) + 40.0 * effect_of(spec, kSignalF1, s);
  voice.f2_hz = (male ? 1500.0 : 1800.0) + 80.0 * z(rng);
  voice.tilt_db_per_octave = -6.0 + 2.0 * effect_of(spec, kSignalTilt, s);
  voice.f0_hz = std::clamp(voice.f0_hz, 70.0, 400.0);

  SubjectAudio out;
  for (Story story : {Story::story1, Story::story2, Story::story3}) {
    for (int rep = 1; rep <= spec.repetitions; ++rep) {
      AudioBuffer rec;
      rec.sample_rate = kSynthRate;
      rec.source_id = recording_stem(s.id, story, rep);
      std::vector<AlignmentEntry> entries;
      rec.samples.assign(static_cast<std::size_t>(kLeadSilence * kSynthRate), 0.0);
      for (int i = 0; i < sentence_count(story); ++i) {
        VoiceParams v = voice;
        v.f0_hz *= 1.0 + 0.03 * z(rng);
        v.f1_hz *= 1.0 + 0.02 * z(rng);
        v.intonation_phase = 2.0 * std::numbers::pi * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const double dur_s = std::max(0.3, spec.sentence_s * (1.0 + 0.1 * z(rng)));
        auto phrase = synth_phrase(v, dur_s, kSynthRate, rng());
        const double g = 0.05 / std::max(1e-12, rms(phrase));
        const double start = static_cast<double>(rec.samples.size()) / kSynthRate;
        for (double x : phrase) rec.samples.push_back(g * x);
        const double end = static_cast<double>(rec.samples.size()) / kSynthRate;
        entries.push_back({{story, i}, start, end, "sentence " + std::to_string(i + 1)});
        rec.samples.resize(rec.samples.size() + static_cast<std::size_t>(kGap * kSynthRate), 0.0);
        const double f0_median = percentile(f0_contour(v, phrase.size(), kSynthRate), 0.5);
        out.truth.push_back({segment_key(s.id, {story, i}, rep), f0_median, v.f1_hz, v.f2_hz, v.tilt_db_per_octave});
      }
      out.recordings.push_back(std::move(rec));
      out.alignments.push_back(std::move(entries));
    }
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot write " + path.string());
  os << text;
}

}  // namespace

Cohort write_cohort(const CohortSpec& spec, const std::filesystem::path& out_dir, int threads) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  Cohort c;
  if (spec.level == CohortLevel::feature) {
    c = generate_features(spec);
    save_feature_csv(out_dir / "gemlite.csv", c.gemlite);
    if (spec.embedding_dim > 0) {
      save_feature_csv(feature_source_path(out_dir, c.embeddings.set_id()), c.embeddings);
    }
  } else {
    c.subjects = draw_subjects(spec);
    c.manifest = manifest_rows(c.subjects, spec.repetitions);
    c.segments = expand_manifest(c.manifest);
    add_scores(spec, c.subjects, c.segments, c.scores);
    std::filesystem::create_directories(out_dir / "audio");
    std::filesystem::create_directories(out_dir / "align");
    std::vector<std::vector<SegmentTruth>> truth(c.subjects.size());
    const int per_subject = 3 * spec.repetitions;
    parallel_for(c.subjects.size(), threads, [&](std::size_t i) {
      auto audio = synth_subject(spec, c.subjects[i], i);
      for (int r = 0; r < per_subject; ++r) {
        const auto& row = c.manifest[i * per_subject + r];
        write_wav(out_dir / row.audio_path, audio.recordings[r]);
        save_alignment(out_dir / row.alignment_path, audio.alignments[r]);
      }
      truth[i] = std::move(audio.truth);
    });
    auto tj = nlohmann::json::array();
    for (auto& t : truth) {
      for (auto& seg : t) {
        tj.push_back({{"segment_key", seg.key},
                      {"f0_hz", seg.f0_hz},
                      {"f1_hz", seg.f1_hz},
                      {"f2_hz", seg.f2_hz},
                      {"tilt_db_per_octave", seg.tilt_db_per_octave}});
        c.truth.push_back(std::move(seg));
      }
    }
    write_text(out_dir / "truth.json", tj.dump(1) + "\n");
  }
  save_manifest(out_dir / "manifest.csv", c.manifest);
  save_scores(out_dir / "scores.csv", c.scores);
  write_text(out_dir / "cohort.json", to_json(spec).dump(2) + "\n");
  return c;
}

}  // namespace voicerisk
