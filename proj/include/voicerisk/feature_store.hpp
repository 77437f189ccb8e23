#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "voicerisk/segmentation.hpp"

namespace voicerisk {

/// Keyed rows of one feature representation (GeMLite functionals or an
/// externally computed embedding). Row order is insertion order.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::string set_id, std::vector<std::string> names);

  const std::string& set_id() const { return set_id_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t dim() const { return names_.size(); }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }
  const std::vector<double>& row(std::size_t i) const { return rows_[i]; }

  /// Throws DuplicateKey, DimMismatch or NonFiniteValue.
  void add(const std::string& key, std::vector<double> values);
  const std::vector<double>* find(const std::string& key) const;

 private:
  std::string set_id_;
  std::vector<std::string> names_;
  std::vector<std::string> keys_;
  std::vector<std::vector<double>> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// CSV with header segment_key,<names...>.
FeatureTable load_feature_csv(const std::filesystem::path& path, const std::string& set_id,
                              std::optional<std::size_t> expected_dim = std::nullopt);
void save_feature_csv(const std::filesystem::path& path, const FeatureTable& table);
std::string feature_csv_text(const FeatureTable& table);

/// Embedding CSV (segment_key,d0..d{D-1}); set id becomes "embedding:<name>".
FeatureTable load_embeddings(const std::filesystem::path& path, const std::string& set_name,
                             std::optional<std::size_t> expected_dim = std::nullopt);

struct DimensionalScore {
  double arousal = 0.0;
  double dominance = 0.0;
  double valence = 0.0;
};

/// Emotion-dimension scores per segment (segment_key,arousal,dominance,valence).
struct DimensionalScores {
  std::vector<std::string> keys;
  std::unordered_map<std::string, DimensionalScore> rows;

  void add(const std::string& key, const DimensionalScore& score);
};

DimensionalScores load_scores(const std::filesystem::path& path);
void save_scores(const std::filesystem::path& path, const DimensionalScores& scores);

/// Design matrix aligned with the expanded manifest (row i <-> segment i).
struct Dataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd X;
  std::vector<int> labels;  // +1 high risk, -1 low risk
  std::vector<std::string> subjects;
  std::vector<Gender> genders;
  std::vector<PhraseId> phrases;
  std::vector<std::string> keys;

  std::size_t rows() const { return keys.size(); }
};

/// Concatenates sources column-wise in the given order. Throws
/// MissingSegment listing every manifest key absent from any source.
Dataset join_dataset(std::span<const SegmentMeta> segments, std::span<const FeatureTable* const> sources);

/// "gemlite" -> <dir>/gemlite.csv, "embedding:NAME" -> <dir>/embedding_NAME.csv.
std::filesystem::path feature_source_path(const std::filesystem::path& dir, const std::string& source);
FeatureTable load_feature_source(const std::filesystem::path& dir, const std::string& source);

}  // namespace voicerisk
