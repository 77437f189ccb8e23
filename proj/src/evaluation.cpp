#include "voicerisk/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "voicerisk/error.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

std::vector<SubjectInfo> subjects_of(const Dataset& ds) {
  std::vector<SubjectInfo> out;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto [it, inserted] = seen.emplace(ds.subjects[i], out.size());
    if (inserted) {
      out.push_back({ds.subjects[i], ds.genders[i], ds.labels[i]});
    } else if (out[it->second].label != ds.labels[i] || out[it->second].gender != ds.genders[i]) {
      throw Error(Errc::SchemaError, "inconsistent label or gender for subject " + ds.subjects[i]);
    }
  }
  return out;
}

FoldPlan loso_plan(std::span<const SubjectInfo> subjects, std::uint64_t seed, int inner_folds) {
  if (subjects.size() < 3) throw Error(Errc::TooFewSubjects, "need at least 3 subjects");
  bool pos = false, neg = false;
  for (const auto& s : subjects) (s.label > 0 ? pos : neg) = true;
  if (!pos || !neg) throw Error(Errc::TooFewSubjects, "both risk classes must be present");
  if (inner_folds < 2) throw Error(Errc::ConfigError, "inner folds must be >= 2");

  FoldPlan plan;
  for (std::size_t f = 0; f < subjects.size(); ++f) {
    Fold fold;
    fold.test_subject = subjects[f].id;
    // strata keyed by (gender, label), subjects in input order
    std::map<std::pair<int, int>, std::vector<std::string>> strata;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      if (i == f) continue;
      fold.train_subjects.push_back(subjects[i].id);
      strata[{static_cast<int>(subjects[i].gender), subjects[i].label}].push_back(subjects[i].id);
    }
    const std::size_t k = std::min<std::size_t>(inner_folds, fold.train_subjects.size());
    fold.inner.assign(k, {});
    std::mt19937_64 rng(mix_seed(seed, f));
    std::size_t next = 0;
    for (auto& [key, ids] : strata) {
      std::shuffle(ids.begin(), ids.end(), rng);
      for (const auto& id : ids) fold.inner[next++ % k].push_back(id);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

double balanced_accuracy(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw Error(Errc::DimMismatch, "truth and prediction lengths differ");
  std::size_t p = 0, n = 0, tp = 0, tn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 0) {
      ++p;
      tp += pred[i] > 0;
    } else {
      ++n;
      tn += pred[i] <= 0;
    }
  }
  if (p == 0 || n == 0) throw Error(Errc::SingleClassTruth, "truth contains a single class");
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(p) + static_cast<double>(tn) / static_cast<double>(n));
}

int majority_label(std::span<const int> preds) {
  if (preds.empty()) throw Error(Errc::EmptyGroup, "no predictions for subject");
  long high = 0;
  for (int v : preds) high += v > 0;
  return 2 * high >= static_cast<long>(preds.size()) ? 1 : -1;
}

std::vector<SubjectVote> majority_vote(std::span<const PredictionRecord> records) {
  std::vector<SubjectVote> votes;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& r : records) {
    auto [it, inserted] = index.emplace(r.subject, votes.size());
    if (inserted) votes.push_back({r.subject, r.truth, 0, 0, 0});
    auto& v = votes[it->second];
    (r.pred > 0 ? v.n_high : v.n_low) += 1;
  }
  for (auto& v : votes) v.pred = v.n_high >= v.n_low ? 1 : -1;
  return votes;
}

double subject_balanced_accuracy(std::span<const PredictionRecord> records) {
  const auto votes = majority_vote(records);
  std::vector<int> t, p;
  for (const auto& v : votes) {
    t.push_back(v.truth);
    p.push_back(v.pred);
  }
  return balanced_accuracy(t, p);
}

BootstrapResult bootstrap_ci(std::span<const PredictionRecord> records, int resamples, double level,
                             std::uint64_t seed) {
  const std::size_t n = records.size();
  if (n < 2) throw Error(Errc::DegenerateResampling, "bootstrap needs at least 2 records");
  if (resamples < 1 || !(level > 0.0 && level < 1.0)) throw Error(Errc::ConfigError, "invalid bootstrap settings");

  std::unordered_map<std::string, std::size_t> subject_index;
  std::vector<std::size_t> subj(n);
  std::vector<int> subject_truth;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = subject_index.emplace(records[i].subject, subject_truth.size());
    if (inserted) subject_truth.push_back(records[i].truth);
    subj[i] = it->second;
  }
  const std::size_t n_subjects = subject_truth.size();

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> seg_ba, sub_ba;
  seg_ba.reserve(resamples);
  sub_ba.reserve(resamples);
  std::vector<std::size_t> draw(n);
  std::vector<int> high(n_subjects), total(n_subjects);
  const long max_draws = 10L * resamples;
  long draws = 0;
  BootstrapResult result;

  while (static_cast<int>(seg_ba.size()) < resamples) {
    if (draws++ >= max_draws) throw Error(Errc::DegenerateResampling, "too many single-class resamples");
    std::size_t p = 0, tp = 0, tn = 0;
    for (auto& d : draw) {
      d = pick(rng);
      if (records[d].truth > 0) {
        ++p;
        tp += records[d].pred > 0;
      } else {
        tn += records[d].pred <= 0;
      }
    }
    if (p == 0 || p == n) {
      ++result.redraws;
      continue;
    }
    seg_ba.push_back(0.5 * (static_cast<double>(tp) / p + static_cast<double>(tn) / (n - p)));

    std::fill(high.begin(), high.end(), 0);
    std::fill(total.begin(), total.end(), 0);
    for (auto d : draw) {
      ++total[subj[d]];
      high[subj[d]] += records[d].pred > 0;
    }
    std::size_t sp = 0, sn = 0, stp = 0, stn = 0;
    for (std::size_t s = 0; s < n_subjects; ++s) {
      if (total[s] == 0) continue;
      const bool pred_high = 2 * high[s] >= total[s];
      if (subject_truth[s] > 0) {
        ++sp;
        stp += pred_high;
      } else {
        ++sn;
        stn += !pred_high;
      }
    }
    sub_ba.push_back(0.5 * (static_cast<double>(stp) / sp + static_cast<double>(stn) / sn));
  }
  const double a = (1.0 - level) / 2.0;
  std::sort(seg_ba.begin(), seg_ba.end());
  std::sort(sub_ba.begin(), sub_ba.end());
  result.segment = {percentile_sorted(seg_ba, a), percentile_sorted(seg_ba, 1.0 - a)};
  result.subject = {percentile_sorted(sub_ba, a), percentile_sorted(sub_ba, 1.0 - a)};
  return result;
}

std::string_view to_string(NormMode mode) { return mode == NormMode::global ? "global" : "phrase"; }

NormMode parse_norm_mode(std::string_view text) {
  if (text == "global") return NormMode::global;
  if (text == "phrase") return NormMode::phrase;
  throw Error(Errc::ConfigError, "unknown normalisation mode: " + std::string(text));
}

namespace {

std::string format_lambda(double lambda) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, lambda);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Modelling::label() const {
  switch (mode) {
    case ModellingMode::global:
      return "global";
    case ModellingMode::gender_exclusive:
      return "lambda0";
    case ModellingMode::gender_soft:
      return "lambda" + format_lambda(lambda);
  }
  return "?";
}

WeightingPolicy Modelling::policy_for(Gender g) const {
  switch (mode) {
    case ModellingMode::global:
      return WeightingPolicy::global();
    case ModellingMode::gender_exclusive:
      return WeightingPolicy::exclusive(g);
    case ModellingMode::gender_soft:
      return WeightingPolicy::soft(g, lambda);
  }
  return {};
}

Modelling parse_modelling(std::string_view text) {
  if (text == "global") return Modelling::global();
  if (text == "lambda0" || text == "exclusive") return Modelling::exclusive();
  if (text.starts_with("lambda")) {
    auto num = text.substr(6);
    if (!num.empty() && num.front() == '=') num.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), v);
    if (res.ec == std::errc() && res.ptr == num.data() + num.size()) {
      if (v == 0.0) return Modelling::exclusive();
      if (v > 0.0 && v <= 1.0) return Modelling::soft(v);
    }
  }
  throw Error(Errc::ConfigError, "unknown modelling mode: " + std::string(text));
}

std::uint64_t fingerprint(const Normalizer& n) {
  return std::visit([](const auto& v) { return fingerprint(v); }, n);
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& X, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

std::vector<PhraseId> gather_phrases(const Dataset& ds, std::span<const std::size_t> rows) {
  std::vector<PhraseId> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(ds.phrases[r]);
  return out;
}

Eigen::MatrixXd normalize(const Normalizer& n, const Dataset& ds, std::span<const std::size_t> rows) {
  Eigen::MatrixXd raw = gather_rows(ds.X, rows);
  if (const auto* s = std::get_if<Scaler>(&n)) return apply(*s, raw);
  return apply(std::get<PhraseScalerMap>(n), raw, gather_phrases(ds, rows));
}

// Normalized training data for one (train rows, modelling, gender) setting,
// reused across the cost grid.
struct PreparedTrain {
  Normalizer normalizer;
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<double> weights;
  WeightingPolicy policy;
};

PreparedTrain prepare_train(const Dataset& ds, std::span<const std::size_t> train_rows, const Modelling& modelling,
                            std::optional<Gender> target, NormMode norm) {
  if (modelling.mode != ModellingMode::global && !target) {
    throw Error(Errc::MissingTargetGender, "gender modelling needs a target gender");
  }
  PreparedTrain out;
  out.policy = modelling.mode == ModellingMode::global ? WeightingPolicy::global() : modelling.policy_for(*target);
  out.policy.validate();

  std::vector<std::size_t> rows;
  if (modelling.mode == ModellingMode::gender_exclusive) {
    for (auto r : train_rows)
      if (ds.genders[r] == *target) rows.push_back(r);
  } else {
    rows.assign(train_rows.begin(), train_rows.end());
  }
  if (rows.empty()) throw Error(Errc::DegenerateData, "no training rows");

  Eigen::MatrixXd raw = gather_rows(ds.X, rows);
  if (norm == NormMode::global) {
    Scaler s = fit_global(raw);
    out.X = apply(s, raw);
    out.normalizer = std::move(s);
  } else {
    const auto phrases = gather_phrases(ds, rows);
    PhraseScalerMap m = fit_phrase(raw, phrases);
    out.X = apply(m, raw, phrases);
    out.normalizer = std::move(m);
  }
  std::vector<Gender> genders;
  for (auto r : rows) {
    out.y.push_back(ds.labels[r]);
    genders.push_back(ds.genders[r]);
  }
  out.weights = class_balance_weights(out.y);
  const auto gw = gender_instance_weights(genders, out.policy);
  for (std::size_t i = 0; i < out.weights.size(); ++i) out.weights[i] *= gw[i];
  return out;
}

FittedPipeline fit_prepared(const PreparedTrain& prep, const Dataset& ds, double cost, const SolverOptions& solver) {
  auto res = train(prep.X, prep.y, prep.weights, cost, solver);
  FittedPipeline out{prep.normalizer, std::move(res.model), res.converged};
  out.model.policy = prep.policy;
  out.model.feature_names = ds.feature_names;
  return out;
}

std::vector<std::size_t> rows_of_subjects(const Dataset& ds, const std::vector<std::string>& ids,
                                          std::optional<Gender> only) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (!wanted.count(ds.subjects[i])) continue;
    if (only && ds.genders[i] != *only) continue;
    rows.push_back(i);
  }
  return rows;
}

bool is_degenerate(const Error& e) {
  return e.code() == Errc::SingleClass || e.code() == Errc::DegenerateData || e.code() == Errc::TooFewRows;
}

}  // namespace

FittedPipeline fit_pipeline(const Dataset& ds, std::span<const std::size_t> train_rows, const Modelling& modelling,
                            std::optional<Gender> target, NormMode norm, double cost, const SolverOptions& solver) {
  return fit_prepared(prepare_train(ds, train_rows, modelling, target, norm), ds, cost, solver);
}

Prediction predict_pipeline(const FittedPipeline& pipeline, const Dataset& ds, std::span<const std::size_t> rows) {
  return predict(pipeline.model, normalize(pipeline.normalizer, ds, rows));
}

FoldOutcome run_fold(const Dataset& ds, const Fold& fold, int fold_index, const Modelling& modelling, NormMode norm,
                     const ExperimentConfig& config) {
  if (config.grid.empty()) throw Error(Errc::ConfigError, "empty cost grid");
  for (const auto& group : fold.inner) {
    if (std::find(group.begin(), group.end(), fold.test_subject) != group.end()) {
      throw Error(Errc::ConfigError, "test subject inside an inner fold");
    }
  }
  std::optional<Gender> target;
  const auto test_rows = rows_of_subjects(ds, {fold.test_subject}, std::nullopt);
  if (test_rows.empty()) throw Error(Errc::EmptyGroup, "no rows for subject " + fold.test_subject);
  if (modelling.mode != ModellingMode::global) target = ds.genders[test_rows.front()];

  // Pooled inner validation predictions per grid entry.
  std::vector<std::vector<PredictionRecord>> pooled(config.grid.size());
  for (std::size_t k = 0; k < fold.inner.size(); ++k) {
    std::vector<std::string> inner_train;
    for (std::size_t j = 0; j < fold.inner.size(); ++j)
      if (j != k) inner_train.insert(inner_train.end(), fold.inner[j].begin(), fold.inner[j].end());
    const auto val_rows = rows_of_subjects(ds, fold.inner[k], target);
    if (val_rows.empty()) continue;
    const auto tr_rows = rows_of_subjects(ds, inner_train, std::nullopt);
    std::optional<PreparedTrain> prep;
    try {
      prep = prepare_train(ds, tr_rows, modelling, target, norm);
    } catch (const Error& e) {
      if (!is_degenerate(e)) throw;
      continue;
    }
    Eigen::MatrixXd Xv = normalize(prep->normalizer, ds, val_rows);
    for (std::size_t c = 0; c < config.grid.size(); ++c) {
      const auto fitted = fit_prepared(*prep, ds, config.grid[c], config.solver);
      const auto pred = predict(fitted.model, Xv);
      for (std::size_t i = 0; i < val_rows.size(); ++i) {
        pooled[c].push_back({ds.subjects[val_rows[i]], ds.labels[val_rows[i]], pred.labels[i]});
      }
    }
  }

  FoldOutcome out;
  out.test_subject = fold.test_subject;
  std::size_t best = 0;
  double best_score = -1.0;
  bool have_best = false;
  for (std::size_t c = 0; c < config.grid.size(); ++c) {
    double score = std::nan("");
    try {
      if (!pooled[c].empty()) score = subject_balanced_accuracy(pooled[c]);
    } catch (const Error& e) {
      if (e.code() != Errc::SingleClassTruth) throw;
    }
    out.tuning_scores.push_back(score);
    if (std::isnan(score)) continue;
    const bool better = !have_best || score > best_score ||
                        (score == best_score && config.grid[c] < config.grid[best]);
    if (better) {
      best = c;
      best_score = score;
      have_best = true;
    }
  }
  if (!have_best) {
    // no usable inner estimate: fall back to the strongest regularization
    best = static_cast<std::size_t>(std::min_element(config.grid.begin(), config.grid.end()) - config.grid.begin());
  }
  out.chosen_cost = config.grid[best];

  const auto train_rows = rows_of_subjects(ds, fold.train_subjects, std::nullopt);
  auto fitted = fit_pipeline(ds, train_rows, modelling, target, norm, out.chosen_cost, config.solver);
  fitted.model.meta = {fold_index, config.seed};
  out.normalizer_fingerprint = fingerprint(fitted.normalizer);
  const auto pred = predict_pipeline(fitted, ds, test_rows);
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    out.predictions.push_back({ds.subjects[test_rows[i]], ds.labels[test_rows[i]], pred.labels[i]});
  }
  out.model = std::move(fitted.model);
  return out;
}

namespace {

nlohmann::json interval_json(const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); }

Interval interval_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

std::string pct(double v) { return std::to_string(static_cast<long>(std::lround(100.0 * v))); }

std::string cell_text(const nlohmann::json& c) {
  const auto& sc = c.at("segment_ci");
  const auto& uc = c.at("subject_ci");
  return pct(c.at("segment_ba").get<double>()) + " (" + pct(sc.at(0).get<double>()) + "-" +
         pct(sc.at(1).get<double>()) + ") / " + pct(c.at("subject_ba").get<double>()) + " (" +
         pct(uc.at(0).get<double>()) + "-" + pct(uc.at(1).get<double>()) + ")";
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  j["bootstrap"] = bootstrap;
  j["grid"] = grid;
  j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cj;
    cj["features"] = c.features;
    cj["modelling"] = c.modelling.label();
    cj["normalisation"] = std::string(to_string(c.norm));
    cj["segment_ba"] = c.segment_ba;
    cj["segment_ci"] = interval_json(c.segment_ci);
    cj["subject_ba"] = c.subject_ba;
    cj["subject_ci"] = interval_json(c.subject_ci);
    cj["chosen_costs"] = c.chosen_costs;
    auto votes = nlohmann::json::array();
    for (const auto& v : c.votes) {
      votes.push_back({{"subject", v.subject},
                       {"truth", v.truth},
                       {"pred", v.pred},
                       {"n_high", v.n_high},
                       {"n_low", v.n_low}});
    }
    cj["votes"] = std::move(votes);
    j["cells"].push_back(std::move(cj));
  }
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.bootstrap = j.at("bootstrap").get<int>();
    r.grid = j.at("grid").get<std::vector<double>>();
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.features = cj.at("features").get<std::string>();
      c.modelling = parse_modelling(cj.at("modelling").get<std::string>());
      c.norm = parse_norm_mode(cj.at("normalisation").get<std::string>());
      c.segment_ba = cj.at("segment_ba").get<double>();
      c.segment_ci = interval_from(cj.at("segment_ci"));
      c.subject_ba = cj.at("subject_ba").get<double>();
      c.subject_ci = interval_from(cj.at("subject_ci"));
      c.chosen_costs = cj.at("chosen_costs").get<std::vector<double>>();
      for (const auto& v : cj.at("votes")) {
        c.votes.push_back({v.at("subject").get<std::string>(), v.at("truth").get<int>(), v.at("pred").get<int>(),
                           v.at("n_high").get<int>(), v.at("n_low").get<int>()});
      }
      r.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("evaluation report: ") + e.what());
  }
  return r;
}

std::string report_markdown(const nlohmann::json& report) {
  // columns in first-appearance order of (modelling, normalisation)
  std::vector<std::pair<std::string, std::string>> columns;
  std::vector<std::string> rows;
  std::map<std::tuple<std::string, std::string, std::string>, std::string> cells;
  for (const auto& c : report.at("cells")) {
    const auto f = c.at("features").get<std::string>();
    const auto m = c.at("modelling").get<std::string>();
    const auto n = c.at("normalisation").get<std::string>();
    if (std::find(rows.begin(), rows.end(), f) == rows.end()) rows.push_back(f);
    if (std::find(columns.begin(), columns.end(), std::pair{m, n}) == columns.end()) columns.emplace_back(m, n);
    cells[{f, m, n}] = cell_text(c);
  }
  std::ostringstream os;
  os << "| features |";
  for (const auto& [m, n] : columns) os << ' ' << m << " / " << n << " norm |";
  os << "\n|---|";
  for (std::size_t i = 0; i < columns.size(); ++i) os << "---|";
  os << '\n';
  for (const auto& f : rows) {
    os << "| " << f << " |";
    for (const auto& [m, n] : columns) {
      auto it = cells.find({f, m, n});
      os << ' ' << (it == cells.end() ? std::string("-") : it->second) << " |";
    }
    os << '\n';
  }
  os << "\nCells: segment BA (95% CI) / subject BA (95% CI), in percent.\n";
  return os.str();
}

std::string EvalReport::to_markdown() const { return report_markdown(to_json()); }

EvalReport run_experiment(std::span<const NamedDataset> feature_sets, const ExperimentConfig& config) {
  if (feature_sets.empty()) throw Error(Errc::ConfigError, "no feature sets");
  if (config.modelling.empty() || config.norms.empty()) throw Error(Errc::ConfigError, "empty experiment grid");
  const Dataset& first = *feature_sets.front().data;
  for (const auto& fs : feature_sets) {
    if (!fs.data || fs.data->keys != first.keys) {
      throw Error(Errc::DimMismatch, "feature set " + fs.name + " is not aligned with the manifest");
    }
  }
  const auto subjects = subjects_of(first);
  const auto plan = loso_plan(subjects, config.seed, config.inner_folds);

  struct CellSpec {
    std::size_t set;
    Modelling modelling;
    NormMode norm;
  };
  std::vector<CellSpec> specs;
  for (std::size_t s = 0; s < feature_sets.size(); ++s)
    for (const auto& m : config.modelling)
      for (auto n : config.norms) specs.push_back({s, m, n});

  const std::size_t n_folds = plan.folds.size();
  std::vector<FoldOutcome> outcomes(specs.size() * n_folds);
  parallel_for(outcomes.size(), config.threads, [&](std::size_t t) {
    const auto& spec = specs[t / n_folds];
    const auto f = t % n_folds;
    outcomes[t] = run_fold(*feature_sets[spec.set].data, plan.folds[f], static_cast<int>(f), spec.modelling,
                           spec.norm, config);
  });

  EvalReport report;
  report.seed = config.seed;
  report.bootstrap = config.bootstrap;
  report.grid = config.grid;
  report.cells.resize(specs.size());
  parallel_for(specs.size(), config.threads, [&](std::size_t c) {
    const auto& spec = specs[c];
    CellResult cell;
    cell.features = feature_sets[spec.set].name;
    cell.modelling = spec.modelling;
    cell.norm = spec.norm;
    std::vector<PredictionRecord> records;
    for (std::size_t f = 0; f < n_folds; ++f) {
      auto& o = outcomes[c * n_folds + f];
      records.insert(records.end(), o.predictions.begin(), o.predictions.end());
      cell.chosen_costs.push_back(o.chosen_cost);
      cell.fold_models.push_back(std::move(o.model));
    }
    std::vector<int> t, p;
    for (const auto& r : records) {
      t.push_back(r.truth);
      p.push_back(r.pred);
    }
    cell.segment_ba = balanced_accuracy(t, p);
    cell.votes = majority_vote(records);
    cell.subject_ba = subject_balanced_accuracy(records);
    const std::string label =
        cell.features + "|" + cell.modelling.label() + "|" + std::string(to_string(cell.norm));
    const auto ci = bootstrap_ci(records, config.bootstrap, config.ci_level, mix_seed(config.seed, hash_string(label)));
    cell.segment_ci = ci.segment;
    cell.subject_ci = ci.subject;
    report.cells[c] = std::move(cell);
  });
  return report;
}

}  // namespace voicerisk
