#include "voicerisk/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "voicerisk/audio_io.hpp"
#include "voicerisk/error.hpp"
#include "voicerisk/evaluation.hpp"
#include "voicerisk/feature_store.hpp"
#include "voicerisk/features.hpp"
#include "voicerisk/segmentation.hpp"
#include "voicerisk/stats_analysis.hpp"
#include "voicerisk/synth_cohort.hpp"
#include "voicerisk/util.hpp"

namespace fs = std::filesystem;

namespace voicerisk {

namespace {

// Flat JSON object of option values, e.g. {"seed": 7, "norm": ["phrase"]}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      auto text = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(text(v));
      } else {
        item.inputs.push_back(text(value));
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

struct Common {
  int threads = 1;
};

std::vector<std::string> split_list(const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
  }
  return out;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw Error(Errc::ConfigError, what + " not found: " + p.string());
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(Errc::IoError, "cannot write " + path.string());
  os << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::ConfigError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json parse_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- extract

struct ExtractArgs {
  fs::path manifest;
  fs::path out;
  bool fallback_vad = false;
  double target_rms_db = kDefaultTargetRmsDb;
};

struct RecordingResult {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  std::vector<std::string> errors;
};

RecordingResult extract_recording(const ManifestRow& row, const ExtractArgs& args) {
  RecordingResult result;
  std::vector<AlignmentEntry> entries;
  AudioBuffer audio;
  try {
    audio = read_wav(row.audio_path);
    audio = normalize_loudness(audio, args.target_rms_db).audio;
    if (audio.sample_rate != kPipelineSampleRate) audio = resample_linear(audio, kPipelineSampleRate);
    if (fs::is_regular_file(row.alignment_path)) {
      entries = load_alignment(row.alignment_path);
    } else if (args.fallback_vad) {
      const auto spans = segment_by_energy(audio);
      entries = entries_from_spans(row.story, spans);
    } else {
      throw Error(Errc::IoError, "missing alignment file " + row.alignment_path.string());
    }
  } catch (const Error& e) {
    result.errors.push_back(row.audio_path.string() + ": " + e.what());
    return result;
  }
  const RecordingMeta meta{row.subject_id, row.gender, row.risk_score, row.repetition};
  std::vector<SegmentRecord> segments;
  try {
    segments = segment_by_alignment(audio, entries, meta);
  } catch (const Error& e) {
    result.errors.push_back(row.audio_path.string() + ": " + e.what());
    return result;
  }
  for (const auto& seg : segments) {
    try {
      auto fv = extract_gemlite(seg.audio);
      result.rows.emplace_back(seg.key(), std::move(fv.values));
    } catch (const Error& e) {
      result.errors.push_back(seg.key() + ": " + e.what());
    }
  }
  return result;
}

int cmd_extract(const ExtractArgs& args, const Common& common, std::ostream& out, std::ostream& err) {
  require_file(args.manifest, "manifest");
  const auto rows = load_manifest(args.manifest);
  const fs::path out_dir = args.out.empty() ? args.manifest.parent_path() : args.out;

  std::vector<RecordingResult> results(rows.size());
  std::mutex progress;
  std::size_t done = 0;
  parallel_for(rows.size(), common.threads, [&](std::size_t i) {
    results[i] = extract_recording(rows[i], args);
    std::lock_guard lock(progress);
    ++done;
    if (done % 10 == 0 || done == rows.size()) err << "extract: " << done << "/" << rows.size() << " recordings\n";
  });

  FeatureTable table("gemlite", gemlite_feature_names());
  std::vector<std::string> errors;
  for (auto& r : results) {
    for (auto& [key, values] : r.rows) table.add(key, std::move(values));
    errors.insert(errors.end(), r.errors.begin(), r.errors.end());
  }
  const auto csv = out_dir / "gemlite.csv";
  save_feature_csv(csv, table);
  std::string log;
  for (const auto& e : errors) log += e + "\n";
  write_file(out_dir / "extract_errors.log", log);
  out << "wrote " << table.size() << " segments to " << csv.string() << "\n";
  if (!errors.empty()) {
    for (const auto& e : errors) err << "error: " << e << "\n";
    err << errors.size() << " failure(s); see " << (out_dir / "extract_errors.log").string() << "\n";
    return kExitData;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- evaluate

struct EvalArgs {
  fs::path manifest;
  fs::path feature_dir;
  std::vector<std::string> features{"gemlite"};
  std::vector<std::string> modelling{"all"};
  std::vector<std::string> norms{"all"};
  std::vector<double> grid;
  std::optional<std::uint64_t> seed;
  int bootstrap = 1000;
  int inner_folds = 5;
  fs::path out;
  bool dump_models = false;
};

std::vector<Modelling> parse_modellings(const std::vector<std::string>& values) {
  std::vector<Modelling> out;
  for (const auto& v : split_list(values)) {
    if (v == "all") {
      out = {Modelling::global(), Modelling::exclusive(), Modelling::soft(0.1)};
      continue;
    }
    out.push_back(parse_modelling(v));
  }
  if (out.empty()) throw Error(Errc::ConfigError, "no modelling mode selected");
  return out;
}

std::vector<NormMode> parse_norms(const std::vector<std::string>& values) {
  std::vector<NormMode> out;
  for (const auto& v : split_list(values)) {
    if (v == "all") {
      out = {NormMode::global, NormMode::phrase};
      continue;
    }
    out.push_back(parse_norm_mode(v));
  }
  if (out.empty()) throw Error(Errc::ConfigError, "no normalisation mode selected");
  return out;
}

fs::path feature_dir_of(const EvalArgs& a) {
  return a.feature_dir.empty() ? a.manifest.parent_path() : a.feature_dir;
}

ExperimentConfig experiment_config(const EvalArgs& a, const Common& common) {
  if (!a.seed) throw Error(Errc::ConfigError, "--seed is required");
  ExperimentConfig c;
  c.seed = *a.seed;
  c.threads = common.threads;
  c.bootstrap = a.bootstrap;
  c.inner_folds = a.inner_folds;
  if (!a.grid.empty()) c.grid = a.grid;
  c.modelling = parse_modellings(a.modelling);
  c.norms = parse_norms(a.norms);
  if (c.bootstrap < 1) throw Error(Errc::ConfigError, "--bootstrap must be >= 1");
  for (double cost : c.grid)
    if (!(cost > 0.0)) throw Error(Errc::ConfigError, "grid costs must be positive");
  return c;
}

std::vector<std::pair<std::string, Dataset>> load_datasets(const EvalArgs& a) {
  require_file(a.manifest, "manifest");
  const auto sources = split_list(a.features);
  if (sources.empty()) throw Error(Errc::ConfigError, "no feature sources");
  const auto dir = feature_dir_of(a);
  for (const auto& s : sources) require_file(feature_source_path(dir, s), "feature file for " + s);
  const auto segments = expand_manifest(load_manifest(a.manifest));
  std::vector<std::pair<std::string, Dataset>> out;
  for (const auto& s : sources) {
    const auto table = load_feature_source(dir, s);
    const FeatureTable* tables[] = {&table};
    out.emplace_back(s, join_dataset(segments, tables));
  }
  return out;
}

int cmd_evaluate(const EvalArgs& a, const Common& common, std::ostream& out, std::ostream& err) {
  const auto config = experiment_config(a, common);
  const auto data = load_datasets(a);
  std::vector<NamedDataset> sets;
  for (const auto& [name, ds] : data) sets.push_back({name, &ds});
  err << "evaluate: " << sets.size() * config.modelling.size() * config.norms.size() << " cells, "
      << subjects_of(*sets.front().data).size() << " folds each\n";
  const auto report = run_experiment(sets, config);
  const auto json = report.to_json();
  const auto md = report_markdown(json);
  if (a.out.empty()) {
    out << md;
    return kExitOk;
  }
  write_file(a.out / "report.json", json.dump(2) + "\n");
  write_file(a.out / "report.md", md);
  if (a.dump_models) {
    for (const auto& cell : report.cells) {
      const auto dir = a.out / "models" /
                       (cell.features + "_" + cell.modelling.label() + "_" + std::string(to_string(cell.norm)));
      for (std::size_t f = 0; f < cell.fold_models.size(); ++f) {
        write_file(dir / ("fold_" + std::to_string(f) + ".json"), to_json(cell.fold_models[f]).dump(2) + "\n");
      }
    }
  }
  out << md;
  return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  EvalArgs eval;
  double rho_max = 0.85;
  std::size_t top = 5;
  std::string unit = "subject";
  fs::path scores;
  fs::path out;
};

int cmd_analyze(const AnalyzeArgs& a, const Common& common, std::ostream& out, std::ostream&) {
  EvalArgs e = a.eval;
  const auto sources = split_list(e.features);
  if (sources.size() != 1) throw Error(Errc::ConfigError, "analyze takes exactly one feature source");
  AnalysisConfig config;
  config.eval = experiment_config(e, common);
  const auto modellings = parse_modellings(e.modelling);
  const auto norms = parse_norms(e.norms);
  if (modellings.size() != 1 || norms.size() != 1) {
    throw Error(Errc::ConfigError, "analyze takes one modelling mode and one normalisation mode");
  }
  config.modelling = modellings.front();
  config.norm = norms.front();
  config.rho_max = a.rho_max;
  config.top = a.top;
  config.unit = parse_test_unit(a.unit);

  fs::path scores_path = a.scores;
  if (scores_path.empty() && fs::is_regular_file(feature_dir_of(e) / "scores.csv")) {
    scores_path = feature_dir_of(e) / "scores.csv";
  }
  if (!scores_path.empty()) require_file(scores_path, "scores file");
  const auto data = load_datasets(e);
  std::optional<DimensionalScores> scores;
  if (!scores_path.empty()) scores = load_scores(scores_path);
  const auto result = analyze(data.front().second, config, scores ? &*scores : nullptr);
  const auto text = result.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
    out << "wrote " << a.out.string() << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  fs::path spec;
  fs::path out;
  std::optional<std::uint64_t> seed;
  std::string level;
};

int cmd_synth(const SynthArgs& a, const Common& common, std::ostream& out, std::ostream&) {
  nlohmann::json j = nlohmann::json::object();
  if (!a.spec.empty()) {
    require_file(a.spec, "cohort spec");
    j = parse_json_file(a.spec);
    if (!j.is_object()) throw Error(Errc::ConfigError, "cohort spec must be a JSON object");
  } else {
    j["effect"] = "default";
  }
  if (a.seed) j["seed"] = *a.seed;
  if (!a.level.empty()) j["level"] = a.level;
  if (!j.contains("seed")) throw Error(Errc::ConfigError, "a seed is required (--seed or in the cohort spec)");
  const auto spec = cohort_spec_from_json(j);
  const auto cohort = write_cohort(spec, a.out, common.threads);
  out << "wrote " << cohort.subjects.size() << " subjects, " << cohort.segments.size() << " segments to "
      << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const fs::path& in, const fs::path& out_path, std::ostream& out) {
  require_file(in, "report");
  const auto md = report_markdown(parse_json_file(in));
  if (out_path.empty()) {
    out << md;
  } else {
    write_file(out_path, md);
  }
  return kExitOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidSpec:
    case Errc::InvalidPolicy:
    case Errc::MissingTargetGender:
      return kExitConfig;
    default:
      return kExitData;
  }
}

void add_eval_options(CLI::App* sub, EvalArgs& a, bool multi_features) {
  sub->add_option("--manifest", a.manifest, "Dataset manifest CSV")->required();
  sub->add_option("--feature-dir", a.feature_dir, "Directory holding feature CSVs (default: manifest directory)");
  sub->add_option("--features", a.features,
                  multi_features ? "Comma-separated feature sources (gemlite, embedding:NAME)" : "Feature source")
      ->delimiter(',');
  sub->add_option("--modelling", a.modelling, "global, lambda0, lambda0.1 or all")->delimiter(',');
  sub->add_option("--norm", a.norms, "global, phrase or all")->delimiter(',');
  sub->add_option("--grid", a.grid, "Cost grid")->delimiter(',');
  sub->add_option("--seed", a.seed, "Random seed (required)");
  sub->add_option("--inner-folds", a.inner_folds, "Inner tuning folds")->check(CLI::Range(2, 100));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech-based suicide risk assessment toolkit", "voicerisk"};
  app.require_subcommand(1);
  auto json_config = std::make_shared<JsonConfig>();

  Common common;
  common.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto add_common = [&](CLI::App* sub) {
    sub->config_formatter(json_config);
    sub->set_config("--config", "", "JSON file with option values; flags take precedence");
    sub->add_option("--threads", common.threads, "Worker threads")
        ->envname("VOICERISK_THREADS")
        ->check(CLI::Range(1, 1024));
  };

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Compute GeMLite features for every manifest segment");
  add_common(extract);
  extract->add_option("--manifest", ex.manifest, "Dataset manifest CSV")->required();
  extract->add_option("--out", ex.out, "Output directory (default: manifest directory)");
  extract->add_flag("--fallback-vad", ex.fallback_vad, "Segment by energy when an alignment file is missing");
  extract->add_option("--target-rms-db", ex.target_rms_db, "Loudness normalization target (dBFS RMS)");

  EvalArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "LOSO evaluation over the modelling x normalisation grid");
  add_common(evaluate);
  add_eval_options(evaluate, ev, true);
  evaluate->add_option("--bootstrap", ev.bootstrap, "Bootstrap resamples");
  evaluate->add_option("--out", ev.out, "Output directory for report.json and report.md");
  evaluate->add_flag("--dump-models", ev.dump_models, "Also write every fold model");

  AnalyzeArgs an;
  an.eval.modelling = {"global"};
  an.eval.norms = {"global"};
  auto* analyze_cmd = app.add_subcommand("analyze", "Feature ranking, U tests and group summaries");
  add_common(analyze_cmd);
  add_eval_options(analyze_cmd, an.eval, false);
  analyze_cmd->add_option("--rho-max", an.rho_max, "Spearman redundancy threshold");
  analyze_cmd->add_option("--top", an.top, "Features kept after pruning");
  analyze_cmd->add_option("--test-unit", an.unit, "subject (per-subject means) or segment");
  analyze_cmd->add_option("--scores", an.scores, "Emotion-dimension scores CSV");
  analyze_cmd->add_option("--out", an.out, "Output JSON file");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort");
  add_common(synth);
  synth->add_option("--spec", sy.spec, "Cohort spec JSON (default: gender-opposed template)");
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->add_option("--seed", sy.seed, "Random seed (overrides the cohort spec seed)");
  synth->add_option("--level", sy.level, "feature or signal");

  fs::path report_in, report_out;
  auto* report = app.add_subcommand("report", "Render an evaluation report as markdown");
  report->add_option("--in", report_in, "report.json")->required();
  report->add_option("--out", report_out, "Markdown output file (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }

  try {
    if (*extract) return cmd_extract(ex, common, out, err);
    if (*evaluate) return cmd_evaluate(ev, common, out, err);
    if (*analyze_cmd) return cmd_analyze(an, common, out, err);
    if (*synth) return cmd_synth(sy, common, out, err);
    if (*report) return cmd_report(report_in, report_out, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace voicerisk
