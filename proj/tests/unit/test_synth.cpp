#include <doctest.h>

#include <map>

#include "cohort_fixture.hpp"
#include "support.hpp"
#include "voicerisk/evaluation.hpp"
#include "voicerisk/features.hpp"
#include "voicerisk/stats_analysis.hpp"
#include "voicerisk/synth_cohort.hpp"

using namespace voicerisk;
using testing::code_of;

namespace {

std::map<std::string, std::string> dir_bytes(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = testing::read_bytes(e.path());
  return out;
}

}  // namespace

TEST_CASE("default cohort composition") {
  CohortSpec spec;
  spec.seed = 1;
  const auto subjects = draw_subjects(spec);
  REQUIRE(subjects.size() == 20);
  int female = 0, high = 0, female_high = 0;
  for (const auto& s : subjects) {
    female += s.gender == Gender::female;
    high += is_high_risk(s.risk_score);
    female_high += s.gender == Gender::female && is_high_risk(s.risk_score);
  }
  CHECK(female == 10);
  CHECK(high == 7);
  CHECK(female_high == 3);
  const auto c = generate_features(spec);
  CHECK(c.segments.size() == 20u * 2u * 29u);
  CHECK(c.gemlite.size() == c.segments.size());
  CHECK(c.gemlite.names() == gemlite_feature_names());
  CHECK(c.embeddings.dim() == 16);
  CHECK(c.scores.keys.size() == c.segments.size());
}

TEST_CASE("spec validation") {
  auto bad = [](auto mutate) {
    CohortSpec s;
    s.seed = 1;
    mutate(s);
    return code_of([&] { s.validate(); });
  };
  CHECK(bad([](CohortSpec& s) { s.n_subjects = 3; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) { s.high_risk_fraction = 1.5; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) { s.high_risk_fraction = 0.0; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) { s.gender_split = 1.0; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) { s.noise_sd = -1.0; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) { s.effect["NoSuchFeature"] = {1, 1, 0}; }) == Errc::InvalidSpec);
  CHECK(bad([](CohortSpec& s) {
          s.level = CohortLevel::signal;
          s.effect["AlphaRatio_mean"] = {1, 1, 0};
        }) == Errc::InvalidSpec);

  CHECK(code_of([] { cohort_spec_from_json({{"n_subjects", 20}}); }) == Errc::InvalidSpec);
  CHECK(code_of([] { cohort_spec_from_json({{"seed", 1}, {"colour", "red"}}); }) == Errc::InvalidSpec);
  const auto s = cohort_spec_from_json({{"seed", 9}, {"effect", "default"}, {"level", "feature"}});
  CHECK(s.seed == 9);
  CHECK(s.effect.size() == default_effect_template().size());
  CHECK(cohort_spec_from_json(to_json(s)).effect.at("F0_80th").female_shift == -1.5);
}

TEST_CASE("feature-level output is seed deterministic") {
  CohortSpec spec;
  spec.seed = 7;
  spec.effect = default_effect_template();
  const auto a = testing::temp_dir("synth_a"), b = testing::temp_dir("synth_b");
  write_cohort(spec, a);
  write_cohort(spec, b, 3);
  const auto x = dir_bytes(a), y = dir_bytes(b);
  CHECK(x.size() >= 5);
  CHECK(x == y);
  spec.seed = 8;
  const auto c = testing::temp_dir("synth_c");
  write_cohort(spec, c);
  CHECK(dir_bytes(c).at("gemlite.csv") != x.at("gemlite.csv"));
}

TEST_CASE("signal-level output is seed deterministic") {
  CohortSpec spec;
  spec.seed = 7;
  spec.level = CohortLevel::signal;
  spec.n_subjects = 4;
  spec.high_risk_fraction = 0.5;
  spec.repetitions = 1;
  spec.sentence_s = 0.5;
  const auto a = testing::temp_dir("synth_sa"), b = testing::temp_dir("synth_sb");
  const auto cohort = write_cohort(spec, a, 1);
  write_cohort(spec, b, 2);
  CHECK(dir_bytes(a) == dir_bytes(b));
  CHECK(cohort.truth.size() == 4u * 29u);
  CHECK(std::filesystem::exists(a / "truth.json"));
  const auto audio = read_wav(a / cohort.manifest[0].audio_path);
  CHECK(audio.sample_rate == 16000);
}

TEST_CASE("generated effects match the request") {
  CohortSpec spec;
  spec.seed = 11;
  spec.n_subjects = 2000;
  spec.embedding_dim = 0;
  spec.repetitions = 1;
  spec.effect["AlphaRatio_mean"] = {1.5, -1.5, 0.0};
  spec.effect["Loudness_mean"] = {0.0, 0.8, 0.4};
  const auto c = generate_features(spec);
  const auto& names = c.gemlite.names();
  auto column = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  // mean per (gender, label) cell
  auto cell_means = [&](std::size_t col) {
    std::map<std::pair<Gender, bool>, std::pair<double, int>> acc;
    for (std::size_t i = 0; i < c.segments.size(); ++i) {
      auto& a = acc[{c.segments[i].gender, c.segments[i].high_risk()}];
      a.first += c.gemlite.row(i)[col];
      a.second += 1;
    }
    std::map<std::pair<Gender, bool>, double> out;
    for (auto& [k, v] : acc) out[k] = v.first / v.second;
    return out;
  };
  const auto alpha = cell_means(column("AlphaRatio_mean"));
  CHECK(std::abs(alpha.at({Gender::male, true}) - alpha.at({Gender::male, false}) - 1.5) < 0.1);
  CHECK(std::abs(alpha.at({Gender::female, true}) - alpha.at({Gender::female, false}) + 1.5) < 0.1);
  const auto loud = cell_means(column("Loudness_mean"));
  CHECK(std::abs(loud.at({Gender::male, true}) - loud.at({Gender::male, false})) < 0.1);
  CHECK(std::abs(loud.at({Gender::female, true}) - loud.at({Gender::female, false}) - 0.8) < 0.1);
  CHECK(std::abs(loud.at({Gender::female, false}) - loud.at({Gender::male, false}) - 0.4) < 0.1);
}

TEST_CASE("null-effect cohorts classify at chance") {
  ExperimentConfig cfg;
  cfg.modelling = {Modelling::global()};
  cfg.norms = {NormMode::global};
  cfg.bootstrap = 50;
  double sum = 0.0;
  const int seeds = 10;
  for (int seed = 1; seed <= seeds; ++seed) {
    auto data = testing::feature_cohort(static_cast<std::uint64_t>(seed), false);
    cfg.seed = static_cast<std::uint64_t>(seed);
    const std::vector<NamedDataset> sets{{"gemlite", &data.gemlite}};
    sum += run_experiment(sets, cfg).cells[0].subject_ba;
  }
  const double mean = sum / seeds;
  CHECK(mean >= 0.35);
  CHECK(mean <= 0.65);
}

TEST_CASE("a single gender-opposed feature ranks first under gender-exclusive modelling") {
  CohortSpec spec;
  spec.seed = 4;
  spec.embedding_dim = 0;
  spec.effect["Loudness_20th"] = {1.5, -1.5, 0.0};
  const auto c = generate_features(spec);
  const std::vector<const FeatureTable*> sources{&c.gemlite};
  const auto ds = join_dataset(c.segments, sources);
  AnalysisConfig cfg;
  cfg.modelling = Modelling::exclusive();
  cfg.eval.seed = 4;
  const auto out = analyze(ds, cfg);
  CHECK(out["ranking"][0]["name"] == "Loudness_20th");
  CHECK(out["top_features"][0]["name"] == "Loudness_20th");
}
