#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "voicerisk/segmentation.hpp"

namespace voicerisk {

inline constexpr double kStdFloor = 1e-8;

/// Per-feature mean and population standard deviation. Standard deviations
/// below 1e-8 are replaced by 1, so constant features map to 0.
struct Scaler {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;

  Eigen::Index dim() const { return means.size(); }
};

/// Throws TooFewRows for fewer than two rows.
Scaler fit_global(const Eigen::MatrixXd& rows);

struct PhraseScalerMap {
  std::map<PhraseId, Scaler> scalers;
  Scaler fallback;
};

/// One scaler per phrase with at least two rows; everything else is served
/// by the global fallback fitted on all rows.
PhraseScalerMap fit_phrase(const Eigen::MatrixXd& rows, std::span<const PhraseId> phrases);

Eigen::MatrixXd apply(const Scaler& scaler, const Eigen::MatrixXd& rows);

/// Rows whose phrase has no dedicated scaler are recorded here.
struct ApplyLog {
  std::vector<std::size_t> fallback_rows;
};

Eigen::MatrixXd apply(const PhraseScalerMap& map, const Eigen::MatrixXd& rows, std::span<const PhraseId> phrases,
                      ApplyLog* log = nullptr);

nlohmann::json to_json(const Scaler& scaler);
nlohmann::json to_json(const PhraseScalerMap& map);
Scaler scaler_from_json(const nlohmann::json& j);
PhraseScalerMap phrase_map_from_json(const nlohmann::json& j);

/// Hash of the exact serialized parameters, for leakage audits.
std::uint64_t fingerprint(const Scaler& scaler);
std::uint64_t fingerprint(const PhraseScalerMap& map);

}  // namespace voicerisk
