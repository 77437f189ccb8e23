#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "voicerisk/segmentation.hpp"

namespace voicerisk {

enum class ModellingMode { global, gender_exclusive, gender_soft };

std::string_view to_string(ModellingMode mode);

/// How out-of-group training instances are weighted. gender_exclusive is
/// exactly lambda = 0; gender_soft uses lambda in (0, 1].
struct WeightingPolicy {
  ModellingMode mode = ModellingMode::global;
  double lambda = 1.0;
  std::optional<Gender> target_gender;

  static WeightingPolicy global() { return {}; }
  static WeightingPolicy exclusive(Gender g) { return {ModellingMode::gender_exclusive, 0.0, g}; }
  static WeightingPolicy soft(Gender g, double lambda) { return {ModellingMode::gender_soft, lambda, g}; }

  /// Throws MissingTargetGender or InvalidPolicy.
  void validate() const;
};

/// Cost grid searched during tuning, strongest regularization last.
inline constexpr std::array<double, 6> kCostGrid{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};

struct TrainMeta {
  int fold = -1;
  std::uint64_t seed = 0;
};

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double cost = 1.0;
  WeightingPolicy policy;
  TrainMeta meta;
  std::vector<std::string> feature_names;

  double decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return x.dot(weights) + bias; }
};

/// N / (2 * N_class(label_i)); labels are +1 / -1. Throws SingleClass.
std::vector<double> class_balance_weights(std::span<const int> labels);

/// 1 for in-group instances, lambda for the rest; all 1 in global mode.
std::vector<double> gender_instance_weights(std::span<const Gender> genders, const WeightingPolicy& policy);

struct SolverOptions {
  double gap_tolerance = 1e-6;  // relative: gap < tol * (1 + |primal|)
  int max_epochs = 10000;
  bool record_dual_history = false;
};

struct TrainResult {
  LinearModel model;
  bool converged = false;
  int epochs = 0;
  double primal = 0.0;
  double dual = 0.0;
  std::vector<double> dual_history;  // dual objective after each epoch (if requested)
};

/// Weighted soft-margin linear SVM,
///   min 1/2 |w|^2 + 1/2 b^2 + C sum_i s_i max(0, 1 - y_i (w.x_i + b)),
/// by dual coordinate descent in fixed index order. The bias is the weight of
/// an appended constant feature. Instances with s_i = 0 are never visited.
/// Non-convergence is reported through TrainResult::converged, not thrown.
TrainResult train(const Eigen::MatrixXd& X, std::span<const int> y, std::span<const double> instance_weights,
                  double cost, const SolverOptions& options = {});

/// The primal objective above, evaluated for an arbitrary model.
double primal_objective(const LinearModel& model, const Eigen::MatrixXd& X, std::span<const int> y,
                        std::span<const double> instance_weights, double cost);

struct Prediction {
  std::vector<int> labels;  // +1 when margin >= 0 (ties go to high risk)
  std::vector<double> margins;
};

Prediction predict(const LinearModel& model, const Eigen::MatrixXd& X);

nlohmann::json to_json(const LinearModel& model);
LinearModel model_from_json(const nlohmann::json& j);
std::uint64_t fingerprint(const LinearModel& model);

}  // namespace voicerisk
