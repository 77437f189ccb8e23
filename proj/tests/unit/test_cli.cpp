#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <thread>

#include "cohort_fixture.hpp"
#include "support.hpp"
#include "voicerisk/cli.hpp"
#include "voicerisk/stats_analysis.hpp"

using namespace voicerisk;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::size_t count_lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Signal-level cohort of 4 subjects x 2 repetitions, extracted once.
const fs::path& signal_dir() {
  static const fs::path dir = [] {
    auto d = testing::temp_dir("cli_signal");
    testing::write_bytes(d / "spec.json",
                         R"({"n_subjects": 4, "high_risk_fraction": 0.5, "repetitions": 2, "sentence_s": 0.6})");
    const auto s = cli({"synth", "--spec", (d / "spec.json").string(), "--out", (d / "cohort").string(), "--seed",
                        "3", "--level", "signal"});
    REQUIRE(s.code == kExitOk);
    const auto e = cli({"extract", "--manifest", (d / "cohort" / "manifest.csv").string()});
    REQUIRE(e.code == kExitOk);
    return d / "cohort";
  }();
  return dir;
}

const fs::path& feature_dir() {
  static const fs::path dir = [] {
    auto d = testing::temp_dir("cli_feature");
    const auto s = cli({"synth", "--out", d.string(), "--seed", "5"});
    REQUIRE(s.code == kExitOk);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("argument and configuration errors exit with 2") {
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"frobnicate"}).code == kExitConfig);
  CHECK(cli({"evaluate", "--manifest", (feature_dir() / "manifest.csv").string()}).code == kExitConfig);  // no seed
  CHECK(cli({"analyze", "--manifest", "/nonexistent/manifest.csv", "--seed", "1"}).code == kExitConfig);
  CHECK(cli({"evaluate", "--manifest", (feature_dir() / "manifest.csv").string(), "--seed", "1", "--modelling",
             "lambda7"})
            .code == kExitConfig);
  CHECK(cli({"synth", "--out", testing::temp_dir("cli_nospec").string()}).code == kExitConfig);  // no seed
}

TEST_CASE("the installed binary reports exit codes") {
  const std::string bin = VOICERISK_CLI_PATH;
  CHECK(WEXITSTATUS(std::system((bin + " --help > /dev/null").c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((bin + " analyze --manifest /nonexistent.csv --seed 1 2> /dev/null").c_str())) ==
        kExitConfig);
}

TEST_CASE("extract writes one row per segment") {
  const auto csv = testing::read_bytes(signal_dir() / "gemlite.csv");
  CHECK(count_lines(csv) == 1 + 4 * 2 * 29);
  CHECK(csv.rfind("segment_key,F0_mean,", 0) == 0);
  SUBCASE("rerun gives identical bytes") {
    const auto again = testing::temp_dir("cli_signal_rerun");
    CHECK(cli({"extract", "--manifest", (signal_dir() / "manifest.csv").string(), "--out", again.string(),
               "--threads", "2"})
              .code == kExitOk);
    CHECK(testing::read_bytes(again / "gemlite.csv") == csv);
  }
}

TEST_CASE("missing alignment is a data error naming the file") {
  const auto d = testing::temp_dir("cli_noalign");
  fs::copy(signal_dir(), d, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  const auto rows = load_manifest(d / "manifest.csv");
  const auto victim = rows[1].alignment_path;
  fs::remove(victim);
  const auto r = cli({"extract", "--manifest", (d / "manifest.csv").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find(victim.filename().string()) != std::string::npos);
  CHECK(testing::read_bytes(d / "extract_errors.log").find(victim.filename().string()) != std::string::npos);
  const auto vad = cli({"extract", "--manifest", (d / "manifest.csv").string(), "--fallback-vad"});
  CHECK(vad.err.find(victim.filename().string()) == std::string::npos);
}

struct EvalRun {
  fs::path out = testing::temp_dir("cli_eval");
  std::vector<std::string> base{"evaluate", "--manifest", (feature_dir() / "manifest.csv").string(),
                                "--seed",   "7",          "--bootstrap", "100"};
  nlohmann::json report;
  EvalRun() {
    auto args = base;
    args.insert(args.end(), {"--features", "gemlite,embedding:synth", "--out", (out / "all").string()});
    REQUIRE(cli(args).code == kExitOk);
    report = nlohmann::json::parse(testing::read_bytes(out / "all" / "report.json"));
  }
};

const EvalRun& eval_run() {
  static const EvalRun run;
  return run;
}

TEST_CASE("evaluate emits the full grid") {
  const auto& run = eval_run();
  CHECK(run.report["cells"].size() == 12);
  const auto md = testing::read_bytes(run.out / "all" / "report.md");
  CHECK(md.find("lambda0.1") != std::string::npos);
  CHECK(md.find("embedding:synth") != std::string::npos);
}

TEST_CASE("evaluate with a single modelling column") {
  const auto& run = eval_run();
  auto one = run.base;
  one.insert(one.end(), {"--modelling", "lambda0", "--features", "gemlite", "--out", (run.out / "l0").string()});
  REQUIRE(cli(one).code == kExitOk);
  const auto r = nlohmann::json::parse(testing::read_bytes(run.out / "l0" / "report.json"));
  REQUIRE(r["cells"].size() == 2);
  for (const auto& c : r["cells"]) CHECK(c["modelling"] == "lambda0");
  // identical to the same cells of the full run
  CHECK(r["cells"][0] == run.report["cells"][2]);
  CHECK(r["cells"][1] == run.report["cells"][3]);
}

TEST_CASE("report renders the stored JSON") {
  const auto& run = eval_run();
  const auto r = cli({"report", "--in", (run.out / "all" / "report.json").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out == testing::read_bytes(run.out / "all" / "report.md"));
}

TEST_CASE("analyze finds a strong injected feature") {
  const auto d = testing::temp_dir("cli_analyze");
  testing::write_bytes(d / "spec.json", R"({"seed": 12, "effect": {"MFCC5_std": {"male_shift": 3, "female_shift": 3}}})");
  REQUIRE(cli({"synth", "--spec", (d / "spec.json").string(), "--out", (d / "c").string()}).code == kExitOk);
  const auto r = cli({"analyze", "--manifest", (d / "c" / "manifest.csv").string(), "--seed", "12", "--out",
                      (d / "analysis.json").string()});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(testing::read_bytes(d / "analysis.json"));
  REQUIRE(j["top_features"].size() == 5);
  bool found = false;
  for (const auto& f : j["top_features"])
    if (f["name"] == "MFCC5_std") {
      found = true;
      CHECK(f["all"]["p_value"].get<double>() < 0.05);
    }
  CHECK(found);
  CHECK(j.contains("dimensions"));
}

TEST_CASE("null cohorts rarely yield p < 0.001") {
  int clean = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto data = testing::feature_cohort(seed, false);
    AnalysisConfig cfg;
    cfg.eval.seed = seed;
    cfg.eval.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const auto j = analyze(data.gemlite, cfg);
    bool hit = false;
    for (const auto& f : j["top_features"])
      for (const char* part : {"all", "female", "male"})
        if (!f[part].is_null() && f[part]["p_value"].get<double>() < 1e-3) hit = true;
    clean += !hit;
  }
  CHECK(clean >= 95);
}
