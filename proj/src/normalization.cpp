#include "voicerisk/normalization.hpp"

#include <cstring>

#include "voicerisk/error.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

using nlohmann::json;

Scaler fit_global(const Eigen::MatrixXd& rows) {
  if (rows.rows() < 2) {
    throw Error(Errc::TooFewRows, "scaler needs >= 2 rows, got " + std::to_string(rows.rows()));
  }
  Scaler s;
  s.means = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = rows.rowwise() - s.means.transpose();
  s.stds = (centred.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt().transpose();
  for (Eigen::Index j = 0; j < s.stds.size(); ++j) {
    if (s.stds(j) < kStdFloor) s.stds(j) = 1.0;
  }
  return s;
}

PhraseScalerMap fit_phrase(const Eigen::MatrixXd& rows, std::span<const PhraseId> phrases) {
  if (static_cast<Eigen::Index>(phrases.size()) != rows.rows()) {
    throw Error(Errc::DimMismatch, "one PhraseId per row required");
  }
  PhraseScalerMap map;
  map.fallback = fit_global(rows);

  std::map<PhraseId, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < phrases.size(); ++i) groups[phrases[i]].push_back(static_cast<Eigen::Index>(i));
  for (const auto& [phrase, idx] : groups) {
    if (idx.size() < 2) continue;
    map.scalers.emplace(phrase, fit_global(rows(idx, Eigen::all)));
  }
  return map;
}

Eigen::MatrixXd apply(const Scaler& scaler, const Eigen::MatrixXd& rows) {
  if (rows.cols() != scaler.dim()) {
    throw Error(Errc::DimMismatch, "scaler has " + std::to_string(scaler.dim()) + " features, rows have " +
                                       std::to_string(rows.cols()));
  }
  return ((rows.rowwise() - scaler.means.transpose()).array().rowwise() / scaler.stds.transpose().array()).matrix();
}

Eigen::MatrixXd apply(const PhraseScalerMap& map, const Eigen::MatrixXd& rows, std::span<const PhraseId> phrases,
                      ApplyLog* log) {
  if (rows.cols() != map.fallback.dim()) {
    throw Error(Errc::DimMismatch, "scaler has " + std::to_string(map.fallback.dim()) + " features, rows have " +
                                       std::to_string(rows.cols()));
  }
  if (static_cast<Eigen::Index>(phrases.size()) != rows.rows()) {
    throw Error(Errc::DimMismatch, "one PhraseId per row required");
  }
  Eigen::MatrixXd out(rows.rows(), rows.cols());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto it = map.scalers.find(phrases[static_cast<std::size_t>(i)]);
    const Scaler* s = &map.fallback;
    if (it != map.scalers.end()) {
      s = &it->second;
    } else if (log) {
      log->fallback_rows.push_back(static_cast<std::size_t>(i));
    }
    out.row(i) = ((rows.row(i) - s->means.transpose()).array() / s->stds.transpose().array()).matrix();
  }
  return out;
}

json to_json(const Scaler& scaler) {
  return {{"means", std::vector<double>(scaler.means.data(), scaler.means.data() + scaler.means.size())},
          {"stds", std::vector<double>(scaler.stds.data(), scaler.stds.data() + scaler.stds.size())}};
}

json to_json(const PhraseScalerMap& map) {
  json phrases = json::object();
  for (const auto& [phrase, scaler] : map.scalers) phrases[phrase.key()] = to_json(scaler);
  return {{"fallback", to_json(map.fallback)}, {"phrases", phrases}};
}

Scaler scaler_from_json(const json& j) {
  const auto means = j.at("means").get<std::vector<double>>();
  const auto stds = j.at("stds").get<std::vector<double>>();
  if (means.size() != stds.size()) throw Error(Errc::DimMismatch, "scaler means/stds length differ");
  Scaler s;
  s.means = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  s.stds = Eigen::Map<const Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
  return s;
}

PhraseScalerMap phrase_map_from_json(const json& j) {
  PhraseScalerMap map;
  map.fallback = scaler_from_json(j.at("fallback"));
  for (const auto& [key, value] : j.at("phrases").items()) {
    const auto slash = key.find('/');
    if (slash == std::string::npos) throw Error(Errc::SchemaError, "bad phrase key " + key);
    PhraseId id{parse_story(key.substr(0, slash)), std::stoi(key.substr(slash + 1))};
    map.scalers.emplace(id, scaler_from_json(value));
  }
  return map;
}

namespace {

std::uint64_t hash_vector(std::uint64_t h, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double d = v(i);
    std::memcpy(&bits, &d, sizeof bits);
    h = mix_seed(h, bits);
  }
  return h;
}

}  // namespace

std::uint64_t fingerprint(const Scaler& scaler) {
  return hash_vector(hash_vector(0x5ca1e, scaler.means), scaler.stds);
}

std::uint64_t fingerprint(const PhraseScalerMap& map) {
  std::uint64_t h = fingerprint(map.fallback);
  for (const auto& [phrase, scaler] : map.scalers) {
    h = mix_seed(h, hash_string(phrase.key()));
    h = mix_seed(h, fingerprint(scaler));
  }
  return h;
}

}  // namespace voicerisk
