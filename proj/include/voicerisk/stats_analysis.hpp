#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "voicerisk/evaluation.hpp"
#include "voicerisk/feature_store.hpp"
#include "voicerisk/linear_svm.hpp"

namespace voicerisk {

struct RankedFeature {
  std::string name;
  double mean_abs_coef = 0.0;
  int rank = 0;
};

/// Mean |coefficient| over fold models, descending, ties broken by name.
/// Throws HeterogeneousModels when feature spaces differ.
std::vector<RankedFeature> rank_features(std::span<const LinearModel> models);

/// Ranks starting at 1, tied values share their average rank.
std::vector<double> midranks(std::span<const double> values);
double spearman(std::span<const double> x, std::span<const double> y);

/// Greedy top-down: a feature is dropped when |rho| > rho_max against any
/// already retained one. `columns` are the feature names of X.
std::vector<RankedFeature> prune_redundant(std::span<const RankedFeature> ranked, const Eigen::MatrixXd& X,
                                           std::span<const std::string> columns, double rho_max = 0.85,
                                           std::size_t keep = 5);

enum class UTestMethod { exact, normal_approx };
std::string_view to_string(UTestMethod method);

/// Direction relative to the high-risk group.
enum class Alternative { two_sided, high_greater, high_less };

struct UTestResult {
  double u_statistic = 0.0;  // U of the low-risk group
  double p_value = 1.0;
  double cles = 0.5;
  int n_low = 0;
  int n_high = 0;
  UTestMethod method = UTestMethod::exact;
};

inline constexpr double kExactPairLimit = 10000.0;

/// Midrank U statistic. The exact null distribution (ties included) is used
/// when n_low * n_high <= 10000, otherwise the tie-corrected normal
/// approximation with continuity correction. Throws EmptyGroup.
UTestResult mann_whitney_u(std::span<const double> x_low, std::span<const double> x_high,
                           Alternative alternative = Alternative::two_sided);

/// Forces the normal approximation regardless of sample size.
UTestResult mann_whitney_u_approx(std::span<const double> x_low, std::span<const double> x_high,
                                  Alternative alternative = Alternative::two_sided);

/// P(high > low) + 0.5 P(high == low) over all pairs. Throws EmptyGroup.
double cles(std::span<const double> x_low, std::span<const double> x_high);

struct BoxStats {
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double whisker_lo = 0.0;  // most extreme values within 1.5 IQR of the box
  double whisker_hi = 0.0;
};

/// Throws EmptyGroup.
BoxStats box_stats(std::span<const double> values);

struct GroupedValue {
  int label = -1;
  Gender gender = Gender::female;
  double value = 0.0;
};

struct GroupSummary {
  int label = -1;
  Gender gender = Gender::female;
  BoxStats stats;
};

/// Values are z-normalized across all groups jointly, then summarized per
/// (label, gender) in the order high/low x female/male. Throws EmptyGroup.
std::vector<GroupSummary> group_summary(std::span<const GroupedValue> values);

nlohmann::json to_json(const UTestResult& r);
nlohmann::json to_json(const BoxStats& b);
nlohmann::json to_json(std::span<const GroupSummary> groups);

enum class TestUnit { subject, segment };
TestUnit parse_test_unit(std::string_view text);
std::string_view to_string(TestUnit unit);

struct AnalysisConfig {
  Modelling modelling = Modelling::global();
  NormMode norm = NormMode::global;
  double rho_max = 0.85;
  std::size_t top = 5;
  TestUnit unit = TestUnit::subject;
  ExperimentConfig eval;  // seed, grid, threads, inner folds, solver
};

/// Ranking from LOSO fold models, pruning, U tests per retained feature
/// (all subjects and per gender) on globally normalized features, and group
/// summaries of the emotion-dimension scores when given.
nlohmann::json analyze(const Dataset& ds, const AnalysisConfig& config, const DimensionalScores* scores = nullptr);

/// Mean of each column over the rows of each subject; rows follow
/// subjects_of(ds) order.
Eigen::MatrixXd subject_means(const Dataset& ds, const Eigen::MatrixXd& X);

}  // namespace voicerisk
