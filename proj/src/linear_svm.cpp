#include "voicerisk/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "voicerisk/error.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

using nlohmann::json;

std::string_view to_string(ModellingMode mode) {
  switch (mode) {
    case ModellingMode::global: return "global";
    case ModellingMode::gender_exclusive: return "gender_exclusive";
    case ModellingMode::gender_soft: return "gender_soft";
  }
  return "?";
}

void WeightingPolicy::validate() const {
  if (mode == ModellingMode::global) return;
  if (!target_gender) throw Error(Errc::MissingTargetGender, std::string(to_string(mode)) + " needs a target gender");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(Errc::InvalidPolicy, "lambda must lie in [0, 1]");
  if ((mode == ModellingMode::gender_exclusive) != (lambda == 0.0)) {
    throw Error(Errc::InvalidPolicy, "gender_exclusive modelling is exactly lambda = 0");
  }
}

std::vector<double> class_balance_weights(std::span<const int> labels) {
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw Error(Errc::SingleClass, "class balancing needs both classes");
  const double n = static_cast<double>(labels.size());
  std::vector<double> w(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = n / (2.0 * (labels[i] == 1 ? n_pos : n_neg));
  return w;
}

std::vector<double> gender_instance_weights(std::span<const Gender> genders, const WeightingPolicy& policy) {
  policy.validate();
  std::vector<double> w(genders.size(), 1.0);
  if (policy.mode == ModellingMode::global) return w;
  for (std::size_t i = 0; i < genders.size(); ++i) {
    if (genders[i] != *policy.target_gender) w[i] = policy.lambda;
  }
  return w;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_problem(const Eigen::MatrixXd& X, std::span<const int> y, std::span<const double> s, double cost) {
  const auto n = static_cast<std::size_t>(X.rows());
  if (y.size() != n || s.size() != n) throw Error(Errc::DimMismatch, "X, y and weights disagree in length");
  if (!(cost > 0.0) || !std::isfinite(cost)) throw Error(Errc::DegenerateData, "cost must be positive and finite");
  if (!X.allFinite()) throw Error(Errc::DegenerateData, "training rows contain non-finite values");
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(s[i] >= 0.0) || !std::isfinite(s[i])) throw Error(Errc::DegenerateData, "instance weights must be >= 0");
    if (y[i] != 1 && y[i] != -1) throw Error(Errc::DegenerateData, "labels must be +1 or -1");
    if (s[i] > 0.0) (y[i] == 1 ? pos : neg) = true;
  }
  if (!pos || !neg) throw Error(Errc::DegenerateData, "each class needs a positively weighted instance");
}

}  // namespace

TrainResult train(const Eigen::MatrixXd& X, std::span<const int> y, std::span<const double> s, double cost,
                  const SolverOptions& options) {
  check_problem(X, y, s, cost);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  RowMatrix Xa(n, d + 1);
  Xa.leftCols(d) = X;
  Xa.col(d).setOnes();

  Eigen::VectorXd upper(n), qd(n), alpha = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    upper(i) = cost * s[static_cast<std::size_t>(i)];
    qd(i) = Xa.row(i).squaredNorm();
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);

  TrainResult result;
  auto objectives = [&](double* primal, double* dual) {
    const double wn = 0.5 * w.squaredNorm();
    double loss = 0.0, alpha_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (upper(i) == 0.0) continue;
      const double m = y[static_cast<std::size_t>(i)] * Xa.row(i).dot(w);
      loss += upper(i) * std::max(0.0, 1.0 - m);
      alpha_sum += alpha(i);
    }
    *primal = wn + loss;
    *dual = alpha_sum - wn;
  };

  for (int epoch = 1; epoch <= options.max_epochs; ++epoch) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = upper(i);
      if (u == 0.0) continue;
      const double yi = y[static_cast<std::size_t>(i)];
      const double g = yi * Xa.row(i).dot(w) - 1.0;
      double pg = g;
      if (alpha(i) == 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha(i) == u) {
        pg = std::max(g, 0.0);
      }
      if (pg == 0.0) continue;
      const double old = alpha(i);
      alpha(i) = std::clamp(old - g / qd(i), 0.0, u);
      const double delta = (alpha(i) - old) * yi;
      if (delta != 0.0) w += delta * Xa.row(i).transpose();
    }
    result.epochs = epoch;
    objectives(&result.primal, &result.dual);
    if (options.record_dual_history) result.dual_history.push_back(result.dual);
    if (result.primal - result.dual < options.gap_tolerance * (1.0 + std::abs(result.primal))) {
      result.converged = true;
      break;
    }
  }

  result.model.weights = w.head(d);
  result.model.bias = w(d);
  result.model.cost = cost;
  return result;
}

double primal_objective(const LinearModel& model, const Eigen::MatrixXd& X, std::span<const int> y,
                        std::span<const double> s, double cost) {
  double value = 0.5 * (model.weights.squaredNorm() + model.bias * model.bias);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double m = y[k] * model.decision(X.row(i));
    value += cost * s[k] * std::max(0.0, 1.0 - m);
  }
  return value;
}

Prediction predict(const LinearModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.size()) {
    throw Error(Errc::DimMismatch, "model has " + std::to_string(model.weights.size()) + " weights, rows have " +
                                       std::to_string(X.cols()));
  }
  Prediction p;
  const Eigen::VectorXd margins = (X * model.weights).array() + model.bias;
  p.margins.assign(margins.data(), margins.data() + margins.size());
  p.labels.reserve(p.margins.size());
  for (double m : p.margins) p.labels.push_back(m >= 0.0 ? 1 : -1);
  return p;
}

json to_json(const LinearModel& model) {
  json policy = {{"mode", to_string(model.policy.mode)}, {"lambda", model.policy.lambda}};
  policy["target_gender"] = model.policy.target_gender ? json(to_string(*model.policy.target_gender)) : json(nullptr);
  return {{"weights", std::vector<double>(model.weights.data(), model.weights.data() + model.weights.size())},
          {"bias", model.bias},
          {"cost", model.cost},
          {"policy", policy},
          {"meta", {{"fold", model.meta.fold}, {"seed", model.meta.seed}}},
          {"feature_names", model.feature_names}};
}

LinearModel model_from_json(const json& j) {
  LinearModel m;
  const auto w = j.at("weights").get<std::vector<double>>();
  m.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  m.bias = j.at("bias").get<double>();
  m.cost = j.at("cost").get<double>();
  const auto& p = j.at("policy");
  const auto mode = p.at("mode").get<std::string>();
  if (mode == "global") {
    m.policy.mode = ModellingMode::global;
  } else if (mode == "gender_exclusive") {
    m.policy.mode = ModellingMode::gender_exclusive;
  } else if (mode == "gender_soft") {
    m.policy.mode = ModellingMode::gender_soft;
  } else {
    throw Error(Errc::SchemaError, "unknown modelling mode " + mode);
  }
  m.policy.lambda = p.at("lambda").get<double>();
  if (!p.at("target_gender").is_null()) m.policy.target_gender = parse_gender(p.at("target_gender").get<std::string>());
  m.meta.fold = j.at("meta").at("fold").get<int>();
  m.meta.seed = j.at("meta").at("seed").get<std::uint64_t>();
  if (j.contains("feature_names")) m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return m;
}

std::uint64_t fingerprint(const LinearModel& model) {
  std::uint64_t h = 0x5f3;
  auto mix_double = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix_seed(h, bits);
  };
  for (Eigen::Index i = 0; i < model.weights.size(); ++i) mix_double(model.weights(i));
  mix_double(model.bias);
  mix_double(model.cost);
  return h;
}

}  // namespace voicerisk
