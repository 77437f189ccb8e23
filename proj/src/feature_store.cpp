#include "voicerisk/feature_store.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "voicerisk/error.hpp"

namespace voicerisk {

FeatureTable::FeatureTable(std::string set_id, std::vector<std::string> names)
    : set_id_(std::move(set_id)), names_(std::move(names)) {}

void FeatureTable::add(const std::string& key, std::vector<double> values) {
  if (values.size() != names_.size()) {
    throw Error(Errc::DimMismatch, set_id_ + " row " + key + " has " + std::to_string(values.size()) +
                                       " values, expected " + std::to_string(names_.size()));
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw Error(Errc::NonFiniteValue, set_id_ + " row " + key + " column " + names_[j]);
    }
  }
  if (!index_.emplace(key, keys_.size()).second) throw Error(Errc::DuplicateKey, set_id_ + " key " + key);
  keys_.push_back(key);
  rows_.push_back(std::move(values));
}

const std::vector<double>* FeatureTable::find(const std::string& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &rows_[it->second];
}

FeatureTable load_feature_csv(const std::filesystem::path& path, const std::string& set_id,
                              std::optional<std::size_t> expected_dim) {
  const auto table = csv::read(path);
  if (table.header.size() < 2 || table.header[0] != "segment_key") {
    throw Error(Errc::SchemaError, path.string() + ": header must start with segment_key and name >= 1 feature");
  }
  std::vector<std::string> names(table.header.begin() + 1, table.header.end());
  if (expected_dim && names.size() != *expected_dim) {
    throw Error(Errc::DimMismatch, path.string() + " has " + std::to_string(names.size()) + " columns, expected " +
                                       std::to_string(*expected_dim));
  }
  FeatureTable out(set_id, names);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& f = table.rows[i];
    const std::string where = path.string() + ":" + std::to_string(table.line_numbers[i]);
    if (f.size() != names.size() + 1) {
      throw Error(Errc::DimMismatch, where + " has " + std::to_string(f.size() - 1) + " values, expected " +
                                         std::to_string(names.size()));
    }
    std::vector<double> values(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
      if (!csv::parse_double(f[j + 1], values[j])) {
        throw Error(Errc::SchemaError, where + ": cannot parse '" + f[j + 1] + "'");
      }
      if (!std::isfinite(values[j])) throw Error(Errc::NonFiniteValue, where + " column " + names[j]);
    }
    out.add(f[0], std::move(values));
  }
  return out;
}

std::string feature_csv_text(const FeatureTable& table) {
  std::string out = "segment_key";
  for (const auto& n : table.names()) {
    out += ',';
    out += n;
  }
  out += '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.keys()[i];
    for (double v : table.row(i)) {
      out += ',';
      out += csv::format_double(v);
    }
    out += '\n';
  }
  return out;
}

void save_feature_csv(const std::filesystem::path& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << feature_csv_text(table);
}

FeatureTable load_embeddings(const std::filesystem::path& path, const std::string& set_name,
                             std::optional<std::size_t> expected_dim) {
  auto table = load_feature_csv(path, "embedding:" + set_name, expected_dim);
  for (std::size_t j = 0; j < table.dim(); ++j) {
    if (table.names()[j] != "d" + std::to_string(j)) {
      throw Error(Errc::SchemaError, path.string() + ": embedding columns must be d0..d" +
                                         std::to_string(table.dim() - 1));
    }
  }
  return table;
}

void DimensionalScores::add(const std::string& key, const DimensionalScore& score) {
  if (!std::isfinite(score.arousal) || !std::isfinite(score.dominance) || !std::isfinite(score.valence)) {
    throw Error(Errc::NonFiniteValue, "scores row " + key);
  }
  if (!rows.emplace(key, score).second) throw Error(Errc::DuplicateKey, "scores key " + key);
  keys.push_back(key);
}

DimensionalScores load_scores(const std::filesystem::path& path) {
  const auto table = load_feature_csv(path, "scores", 3);
  if (table.names() != std::vector<std::string>{"arousal", "dominance", "valence"}) {
    throw Error(Errc::SchemaError, path.string() + ": header must be segment_key,arousal,dominance,valence");
  }
  DimensionalScores scores;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& r = table.row(i);
    scores.add(table.keys()[i], {r[0], r[1], r[2]});
  }
  return scores;
}

void save_scores(const std::filesystem::path& path, const DimensionalScores& scores) {
  FeatureTable table("scores", {"arousal", "dominance", "valence"});
  for (const auto& k : scores.keys) {
    const auto& s = scores.rows.at(k);
    table.add(k, {s.arousal, s.dominance, s.valence});
  }
  save_feature_csv(path, table);
}

Dataset join_dataset(std::span<const SegmentMeta> segments, std::span<const FeatureTable* const> sources) {
  if (sources.empty()) throw Error(Errc::ConfigError, "join needs at least one feature source");
  Dataset ds;
  std::size_t total_dim = 0;
  for (const auto* src : sources) {
    for (const auto& n : src->names()) {
      ds.feature_names.push_back(sources.size() > 1 ? src->set_id() + ":" + n : n);
    }
    total_dim += src->dim();
  }

  std::vector<std::string> missing;
  for (const auto& seg : segments) {
    const auto key = seg.key();
    for (const auto* src : sources) {
      if (!src->find(key)) missing.push_back(src->set_id() + ":" + key);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size(); ++i) list += (i ? ", " : "") + missing[i];
    throw Error(Errc::MissingSegment, std::to_string(missing.size()) + " missing: " + list);
  }

  ds.X.resize(static_cast<Eigen::Index>(segments.size()), static_cast<Eigen::Index>(total_dim));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    const auto key = seg.key();
    Eigen::Index col = 0;
    for (const auto* src : sources) {
      const auto& row = *src->find(key);
      for (double v : row) ds.X(static_cast<Eigen::Index>(i), col++) = v;
    }
    ds.labels.push_back(seg.high_risk() ? 1 : -1);
    ds.subjects.push_back(seg.subject_id);
    ds.genders.push_back(seg.gender);
    ds.phrases.push_back(seg.phrase);
    ds.keys.push_back(key);
  }
  return ds;
}

std::filesystem::path feature_source_path(const std::filesystem::path& dir, const std::string& source) {
  if (source == "gemlite") return dir / "gemlite.csv";
  const std::string prefix = "embedding:";
  if (source.rfind(prefix, 0) == 0 && source.size() > prefix.size()) {
    return dir / ("embedding_" + source.substr(prefix.size()) + ".csv");
  }
  throw Error(Errc::ConfigError, "unknown feature source '" + source + "' (use gemlite or embedding:<name>)");
}

FeatureTable load_feature_source(const std::filesystem::path& dir, const std::string& source) {
  const auto path = feature_source_path(dir, source);
  if (source == "gemlite") return load_feature_csv(path, "gemlite");
  return load_embeddings(path, source.substr(std::string("embedding:").size()));
}

}  // namespace voicerisk
