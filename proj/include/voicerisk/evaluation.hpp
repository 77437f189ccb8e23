#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "voicerisk/feature_store.hpp"
#include "voicerisk/linear_svm.hpp"
#include "voicerisk/normalization.hpp"

namespace voicerisk {

struct SubjectInfo {
  std::string id;
  Gender gender = Gender::female;
  int label = -1;  // +1 high risk
};

/// Subjects in order of first appearance.
std::vector<SubjectInfo> subjects_of(const Dataset& ds);

struct Fold {
  std::string test_subject;
  std::vector<std::string> train_subjects;
  std::vector<std::vector<std::string>> inner;  // partition of train_subjects
};

struct FoldPlan {
  std::vector<Fold> folds;
};

/// One fold per subject. The inner split of the remaining subjects is
/// stratified by (gender, label), shuffled with a fold-derived seed.
/// Throws TooFewSubjects (< 3 subjects or a single class overall).
FoldPlan loso_plan(std::span<const SubjectInfo> subjects, std::uint64_t seed, int inner_folds = 5);

/// Mean of per-class recalls; labels +1/-1. Throws SingleClassTruth.
double balanced_accuracy(std::span<const int> truth, std::span<const int> pred);

struct PredictionRecord {
  std::string subject;
  int truth = -1;
  int pred = -1;
};

struct SubjectVote {
  std::string subject;
  int truth = -1;
  int pred = -1;
  int n_high = 0;
  int n_low = 0;
};

/// Majority label, exact ties resolved to high risk. Throws EmptyGroup.
int majority_label(std::span<const int> preds);
std::vector<SubjectVote> majority_vote(std::span<const PredictionRecord> records);
double subject_balanced_accuracy(std::span<const PredictionRecord> records);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BootstrapResult {
  Interval segment;
  Interval subject;
  int redraws = 0;
};

/// Percentile bootstrap over segment records; each resample is majority
/// voted per subject for the subject-level interval. Resamples with a single
/// truth class are redrawn, at most 10*B draws in total.
BootstrapResult bootstrap_ci(std::span<const PredictionRecord> records, int resamples, double level,
                             std::uint64_t seed);

enum class NormMode { global, phrase };
std::string_view to_string(NormMode mode);
NormMode parse_norm_mode(std::string_view text);

/// One column group of the result table.
struct Modelling {
  ModellingMode mode = ModellingMode::global;
  double lambda = 1.0;

  static Modelling global() { return {}; }
  static Modelling exclusive() { return {ModellingMode::gender_exclusive, 0.0}; }
  static Modelling soft(double lambda) { return {ModellingMode::gender_soft, lambda}; }

  std::string label() const;  // "global", "lambda0", "lambda0.1"
  WeightingPolicy policy_for(Gender g) const;
};

Modelling parse_modelling(std::string_view text);

struct ExperimentConfig {
  std::vector<Modelling> modelling{Modelling::global(), Modelling::exclusive(), Modelling::soft(0.1)};
  std::vector<NormMode> norms{NormMode::global, NormMode::phrase};
  std::vector<double> grid{kCostGrid.begin(), kCostGrid.end()};
  std::uint64_t seed = 0;
  int bootstrap = 1000;
  double ci_level = 0.95;
  int inner_folds = 5;
  int threads = 1;
  SolverOptions solver;
};

/// Normalization statistics fitted on training rows.
using Normalizer = std::variant<Scaler, PhraseScalerMap>;

std::uint64_t fingerprint(const Normalizer& n);

struct FittedPipeline {
  Normalizer normalizer;
  LinearModel model;
  bool converged = true;
};

/// Fits normalization and the weighted SVM on `train_rows`. Gender-exclusive
/// modelling restricts both to the target gender; soft modelling fits on all
/// rows with lambda on the out-group and class balance over all rows.
FittedPipeline fit_pipeline(const Dataset& ds, std::span<const std::size_t> train_rows, const Modelling& modelling,
                            std::optional<Gender> target, NormMode norm, double cost, const SolverOptions& solver);

Prediction predict_pipeline(const FittedPipeline& pipeline, const Dataset& ds, std::span<const std::size_t> rows);

struct FoldOutcome {
  std::string test_subject;
  double chosen_cost = 0.0;
  std::vector<double> tuning_scores;  // inner subject-level BA per grid entry (NaN if undefined)
  std::uint64_t normalizer_fingerprint = 0;
  LinearModel model;
  std::vector<PredictionRecord> predictions;
};

/// Nested tuning on the fold's inner split, then refit on the whole outer
/// training set and prediction of the held-out subject.
FoldOutcome run_fold(const Dataset& ds, const Fold& fold, int fold_index, const Modelling& modelling, NormMode norm,
                     const ExperimentConfig& config);

struct CellResult {
  std::string features;
  Modelling modelling;
  NormMode norm = NormMode::global;
  double segment_ba = 0.0;
  double subject_ba = 0.0;
  Interval segment_ci;
  Interval subject_ci;
  std::vector<SubjectVote> votes;
  std::vector<double> chosen_costs;
  std::vector<LinearModel> fold_models;
};

struct NamedDataset {
  std::string name;
  const Dataset* data = nullptr;
};

struct EvalReport {
  std::uint64_t seed = 0;
  int bootstrap = 0;
  std::vector<double> grid;
  std::vector<CellResult> cells;

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

EvalReport report_from_json(const nlohmann::json& j);
std::string report_markdown(const nlohmann::json& report);

/// Every (feature set, modelling, normalization) cell. Folds and cells run
/// on config.threads workers; the result does not depend on the count.
EvalReport run_experiment(std::span<const NamedDataset> feature_sets, const ExperimentConfig& config);

}  // namespace voicerisk
