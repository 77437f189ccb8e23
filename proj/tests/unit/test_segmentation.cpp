#include <doctest.h>

#include "support.hpp"
#include "voicerisk/error.hpp"
#include "voicerisk/segmentation.hpp"

using namespace voicerisk;
using testing::code_of;

namespace {

AudioBuffer tone_with_gaps(const std::vector<std::pair<double, double>>& pieces) {
  // pieces: (tone seconds, following silence seconds)
  AudioBuffer a;
  for (auto [tone, gap] : pieces) {
    const auto t = testing::sine(300.0, tone, 0.5);
    a.samples.insert(a.samples.end(), t.samples.begin(), t.samples.end());
    a.samples.resize(a.samples.size() + static_cast<std::size_t>(gap * 16000), 0.0);
  }
  return a;
}

}  // namespace

TEST_CASE("sentence counts per story") {
  CHECK(sentence_count(Story::story1) == 6);
  CHECK(sentence_count(Story::story2) == 7);
  CHECK(sentence_count(Story::story3) == 16);
  CHECK(is_high_risk(5));
  CHECK(is_high_risk(6));
  CHECK_FALSE(is_high_risk(4));
}

TEST_CASE("alignment parsing") {
  SUBCASE("entries come back sorted") {
    const auto e = parse_alignment(R"([
      {"story_id":"story1","sentence_index":1,"start_s":2.0,"end_s":3.0,"text":"b"},
      {"story_id":"story1","sentence_index":0,"start_s":0.5,"end_s":1.5,"text":"a"}])");
    REQUIRE(e.size() == 2);
    CHECK(e[0].phrase.sentence_index == 0);
    CHECK(e[0].start_s == 0.5);
    CHECK(e[1].text == "b");
  }
  SUBCASE("end before start") {
    CHECK(code_of([] {
            parse_alignment(R"([{"story_id":"story1","sentence_index":0,"start_s":2.0,"end_s":2.0,"text":""}])");
          }) == Errc::SchemaError);
  }
  SUBCASE("sentence index past the story") {
    CHECK(code_of([] {
            parse_alignment(R"([{"story_id":"story1","sentence_index":7,"start_s":0,"end_s":1,"text":""}])");
          }) == Errc::IndexOutOfRange);
    CHECK_NOTHROW(parse_alignment(R"([{"story_id":"story3","sentence_index":15,"start_s":0,"end_s":1,"text":""}])"));
  }
  SUBCASE("overlap") {
    CHECK(code_of([] {
            parse_alignment(R"([{"story_id":"story2","sentence_index":0,"start_s":0,"end_s":2,"text":""},
                                {"story_id":"story2","sentence_index":1,"start_s":1.5,"end_s":3,"text":""}])");
          }) == Errc::OverlapError);
  }
  SUBCASE("missing field") {
    CHECK(code_of([] { parse_alignment(R"([{"story_id":"story2","start_s":0,"end_s":2}])"); }) == Errc::SchemaError);
    CHECK(code_of([] { parse_alignment("not json"); }) == Errc::SchemaError);
  }
  SUBCASE("file round trip") {
    const auto dir = testing::temp_dir("align");
    const std::vector<AlignmentEntry> in{{{Story::story3, 4}, 0.25, 1.75, "x"}, {{Story::story3, 5}, 2.0, 4.0, "y"}};
    save_alignment(dir / "a.json", in);
    const auto out = load_alignment(dir / "a.json");
    REQUIRE(out.size() == 2);
    CHECK(out[1].phrase == PhraseId{Story::story3, 5});
    CHECK(out[0].end_s == 1.75);
  }
}

TEST_CASE("segmentation by alignment") {
  AudioBuffer a;
  a.samples.resize(160000);
  for (std::size_t i = 0; i < a.samples.size(); ++i) a.samples[i] = static_cast<double>(i) / 1e6;
  const RecordingMeta meta{"P01", Gender::male, 5, 2};
  SUBCASE("two spans cover the buffer") {
    const std::vector<AlignmentEntry> e{{{Story::story1, 0}, 0.0, 4.0, ""}, {{Story::story1, 1}, 4.0, 10.0, ""}};
    const auto segs = segment_by_alignment(a, e, meta);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].audio.duration_s() == 4.0);
    CHECK(segs[1].audio.duration_s() == 6.0);
    CHECK(segs[0].audio.samples.size() + segs[1].audio.samples.size() == a.samples.size());
    CHECK(segs[1].audio.samples.front() == a.samples[64000]);
    CHECK(segs[1].high_risk());
    CHECK(segs[1].key() == "P01/story1/1/2");
  }
  SUBCASE("entry past the end") {
    const std::vector<AlignmentEntry> e{{{Story::story1, 0}, 0.0, 12.0, ""}};
    CHECK(code_of([&] { segment_by_alignment(a, e, meta); }) == Errc::OutOfBounds);
  }
}

TEST_CASE("a 20-subject, 2-repetition manifest expands to 1160 segments") {
  std::vector<ManifestRow> rows;
  for (int s = 0; s < 20; ++s)
    for (Story st : {Story::story1, Story::story2, Story::story3})
      for (int rep = 1; rep <= 2; ++rep)
        rows.push_back({"S" + std::to_string(s), s % 2 ? Gender::male : Gender::female, 1 + s % 6, st, rep, "a.wav",
                        "a.json"});
  const auto segs = expand_manifest(rows);
  CHECK(segs.size() == 1160);
  CHECK(segs.size() == 2u * (6 + 7 + 16) * 20);

  const auto dir = testing::temp_dir("manifest");
  save_manifest(dir / "m.csv", rows);
  const auto back = load_manifest(dir / "m.csv");
  REQUIRE(back.size() == rows.size());
  CHECK(back[5].story == rows[5].story);
  CHECK(back[5].audio_path == dir / "a.wav");
}

TEST_CASE("manifest validation") {
  const auto dir = testing::temp_dir("manifest_bad");
  testing::write_bytes(dir / "bad_header.csv", "subject,gender\nA,f\n");
  CHECK(code_of([&] { load_manifest(dir / "bad_header.csv"); }) == Errc::SchemaError);
  testing::write_bytes(dir / "bad_score.csv",
                       "subject_id,gender,risk_score,story_id,repetition,audio_path,alignment_path\n"
                       "A,female,9,story1,1,a.wav,a.json\n");
  CHECK(code_of([&] { load_manifest(dir / "bad_score.csv"); }) == Errc::SchemaError);
}

TEST_CASE("energy segmentation") {
  SUBCASE("tone, 500 ms silence, tone") {
    const auto spans = segment_by_energy(tone_with_gaps({{1.0, 0.5}, {1.0, 0.0}}));
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].start_s == doctest::Approx(0.0).epsilon(0.02));
    CHECK(spans[1].start_s == doctest::Approx(1.5).epsilon(0.02));
  }
  SUBCASE("a 100 ms gap is bridged") {
    CHECK(segment_by_energy(tone_with_gaps({{1.0, 0.1}, {1.0, 0.0}})).size() == 1);
  }
  SUBCASE("K long pauses give K+1 spans") {
    for (int k = 1; k <= 5; ++k) {
      std::vector<std::pair<double, double>> pieces;
      for (int i = 0; i < k; ++i) pieces.push_back({0.7 + 0.1 * i, 0.3 + 0.05 * i});
      pieces.push_back({0.8, 0.0});
      CHECK(segment_by_energy(tone_with_gaps(pieces)).size() == static_cast<std::size_t>(k + 1));
    }
  }
  SUBCASE("short runs are dropped") {
    CHECK(segment_by_energy(tone_with_gaps({{0.2, 0.5}, {1.0, 0.0}})).size() == 1);
  }
  SUBCASE("silence") {
    AudioBuffer z;
    z.samples.assign(16000, 0.0);
    CHECK(code_of([&] { segment_by_energy(z); }) == Errc::SilentInput);
  }
  SUBCASE("deterministic and assigned in order") {
    const auto a = tone_with_gaps({{1.0, 0.5}, {1.0, 0.5}, {1.0, 0.0}});
    const auto s1 = segment_by_energy(a);
    const auto s2 = segment_by_energy(a);
    REQUIRE(s1.size() == s2.size());
    for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].start_s == s2[i].start_s);
    const auto entries = entries_from_spans(Story::story2, s1);
    REQUIRE(entries.size() == 3);
    CHECK(entries[2].phrase == PhraseId{Story::story2, 2});
    std::vector<Span> many(8, Span{0.0, 1.0});
    for (std::size_t i = 0; i < many.size(); ++i) many[i] = {2.0 * i, 2.0 * i + 1.0};
    CHECK(code_of([&] { entries_from_spans(Story::story1, many); }) == Errc::IndexOutOfRange);
  }
}
