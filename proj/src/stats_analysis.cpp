#include "voicerisk/stats_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "voicerisk/error.hpp"
#include "voicerisk/util.hpp"

namespace voicerisk {

std::vector<RankedFeature> rank_features(std::span<const LinearModel> models) {
  if (models.empty()) throw Error(Errc::HeterogeneousModels, "no models to rank");
  const auto& names = models.front().feature_names;
  const auto d = models.front().weights.size();
  if (static_cast<std::size_t>(d) != names.size()) throw Error(Errc::HeterogeneousModels, "names/weights mismatch");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  for (const auto& m : models) {
    if (m.feature_names != names || m.weights.size() != d) {
      throw Error(Errc::HeterogeneousModels, "models use different feature spaces");
    }
    sum += m.weights.cwiseAbs();
  }
  std::vector<RankedFeature> out;
  for (Eigen::Index i = 0; i < d; ++i) out.push_back({names[i], sum[i] / static_cast<double>(models.size()), 0});
  std::sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) {
    if (a.mean_abs_coef != b.mean_abs_coef) return a.mean_abs_coef > b.mean_abs_coef;
    return a.name < b.name;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i + 1);
  return out;
}

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::DimMismatch, "spearman inputs differ in length");
  if (x.size() < 2) return 0.0;
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<RankedFeature> prune_redundant(std::span<const RankedFeature> ranked, const Eigen::MatrixXd& X,
                                           std::span<const std::string> columns, double rho_max,
                                           std::size_t keep) {
  if (static_cast<std::size_t>(X.cols()) != columns.size()) throw Error(Errc::DimMismatch, "column names");
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t i = 0; i < columns.size(); ++i) col.emplace(columns[i], static_cast<Eigen::Index>(i));
  auto column = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw Error(Errc::DimMismatch, "unknown feature " + name);
    const Eigen::VectorXd c = X.col(it->second);
    return std::vector<double>(c.data(), c.data() + c.size());
  };
  std::vector<RankedFeature> kept;
  std::vector<std::vector<double>> kept_cols;
  for (const auto& f : ranked) {
    if (kept.size() >= keep) break;
    auto c = column(f.name);
    bool redundant = false;
    for (const auto& k : kept_cols) {
      if (std::abs(spearman(c, k)) > rho_max) {
        redundant = true;
        break;
      }
    }
    if (redundant) continue;
    kept.push_back(f);
    kept_cols.push_back(std::move(c));
  }
  return kept;
}

std::string_view to_string(UTestMethod method) {
  return method == UTestMethod::exact ? "exact" : "normal_approx";
}

namespace {


long twice_u_low(std::span<const double> low, std::span<const double> high, std::vector<long>* ties) {
  std::vector<double> pooled(low.begin(), low.end());
  pooled.insert(pooled.end(), high.begin(), high.end());
  const auto r = midranks(pooled);
  long sum2 = 0;
  for (std::size_t i = 0; i < low.size(); ++i) sum2 += std::lround(2.0 * r[i]);
  const long n1 = static_cast<long>(low.size());
  if (ties) {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      ties->push_back(static_cast<long>(j - i));
      i = j;
    }
  }
  return sum2 - n1 * (n1 + 1);
}

void check_groups(std::span<const double> low, std::span<const double> high) {
  if (low.empty() || high.empty()) throw Error(Errc::EmptyGroup, "both groups need at least one value");
  for (double v : low)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite value in low group");
  for (double v : high)
    if (!std::isfinite(v)) throw Error(Errc::NonFiniteValue, "non-finite value in high group");
}

double tail_p(double cdf, double sf, Alternative alt) {
  switch (alt) {
    case Alternative::two_sided:
      return std::min(1.0, 2.0 * std::min(cdf, sf));
    case Alternative::high_greater:  // small U_low
      return std::min(1.0, cdf);
    case Alternative::high_less:
      return std::min(1.0, sf);
  }
  return 1.0;
}

// Null distribution of 2*U_low over all placements of n1 low labels among the
// pooled tie groups. Groups are processed in ascending order; j low values
// taken from a group of size t with h high values below it add
// j * (2h + (t - j)) half-units.
std::vector<long double> exact_distribution(const std::vector<long>& groups, long n1, long n2) {
  const long max_u2 = 2 * n1 * n2;
  const std::size_t width = static_cast<std::size_t>(max_u2 + 1);
  std::vector<long double> dp(static_cast<std::size_t>(n1 + 1) * width, 0.0L), next;
  dp[0] = 1.0L;
  long seen = 0;
  for (long t : groups) {
    next.assign(dp.size(), 0.0L);
    // binomial coefficients C(t, j)
    std::vector<long double> binom(static_cast<std::size_t>(t + 1), 1.0L);
    for (long j = 1; j <= t; ++j) binom[j] = binom[j - 1] * static_cast<long double>(t - j + 1) / j;
    for (long k = std::max(0L, seen - n2); k <= std::min(n1, seen); ++k) {
      const long h = seen - k;
      const long u_hi = 2 * k * n2;
      for (long u = 0; u <= std::min(u_hi, max_u2); ++u) {
        const long double c = dp[static_cast<std::size_t>(k) * width + u];
        if (c == 0.0L) continue;
        for (long j = 0; j <= t && k + j <= n1; ++j) {
          if (h + (t - j) > n2) continue;
          const long nu = u + j * (2 * h + (t - j));
          next[static_cast<std::size_t>(k + j) * width + nu] += c * binom[j];
        }
      }
    }
    dp.swap(next);
    seen += t;
  }
  return {dp.begin() + static_cast<std::ptrdiff_t>(n1) * static_cast<std::ptrdiff_t>(width), dp.end()};
}

UTestResult normal_result(long u2, const std::vector<long>& ties, long n1, long n2, Alternative alt) {
  UTestResult r;
  r.method = UTestMethod::normal_approx;
  const double N = static_cast<double>(n1 + n2);
  double tie_term = 0.0;
  for (long t : ties) tie_term += static_cast<double>(t) * t * t - t;
  const double mu = 0.5 * static_cast<double>(n1) * n2;
  const double var = static_cast<double>(n1) * n2 / 12.0 * ((N + 1.0) - (N > 1 ? tie_term / (N * (N - 1.0)) : 0.0));
  const double u = 0.5 * static_cast<double>(u2);
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double sd = std::sqrt(var);
  // continuity-corrected tails
  const double z_lo = (u - mu + 0.5) / sd;  // P(U <= u)
  const double z_hi = (u - mu - 0.5) / sd;  // P(U >= u)
  const double cdf = 0.5 * std::erfc(-z_lo / std::sqrt(2.0));
  const double sf = 0.5 * std::erfc(z_hi / std::sqrt(2.0));
  r.p_value = tail_p(cdf, sf, alt);
  return r;
}

UTestResult finish(UTestResult r, long u2, long n1, long n2) {
  r.u_statistic = 0.5 * static_cast<double>(u2);
  r.n_low = static_cast<int>(n1);
  r.n_high = static_cast<int>(n2);
  const long u2_high = 2 * n1 * n2 - u2;
  r.cles = (0.5 * static_cast<double>(u2_high)) / (static_cast<double>(n1) * static_cast<double>(n2));
  return r;
}

}  // namespace

UTestResult mann_whitney_u(std::span<const double> x_low, std::span<const double> x_high, Alternative alternative) {
  check_groups(x_low, x_high);
  const long n1 = static_cast<long>(x_low.size());
  const long n2 = static_cast<long>(x_high.size());
  std::vector<long> ties;
  const long u2 = twice_u_low(x_low, x_high, &ties);
  if (static_cast<double>(n1) * static_cast<double>(n2) > kExactPairLimit) {
    return finish(normal_result(u2, ties, n1, n2, alternative), u2, n1, n2);
  }
  const auto dist = exact_distribution(ties, n1, n2);
  long double total = 0.0L, le = 0.0L, ge = 0.0L;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    total += dist[v];
    if (static_cast<long>(v) <= u2) le += dist[v];
    if (static_cast<long>(v) >= u2) ge += dist[v];
  }
  UTestResult r;
  r.method = UTestMethod::exact;
  r.p_value = tail_p(static_cast<double>(le / total), static_cast<double>(ge / total), alternative);
  return finish(r, u2, n1, n2);
}

UTestResult mann_whitney_u_approx(std::span<const double> x_low, std::span<const double> x_high,
                                  Alternative alternative) {
  check_groups(x_low, x_high);
  const long n1 = static_cast<long>(x_low.size());
  const long n2 = static_cast<long>(x_high.size());
  std::vector<long> ties;
  const long u2 = twice_u_low(x_low, x_high, &ties);
  return finish(normal_result(u2, ties, n1, n2, alternative), u2, n1, n2);
}

double cles(std::span<const double> x_low, std::span<const double> x_high) {
  check_groups(x_low, x_high);
  const long n1 = static_cast<long>(x_low.size());
  const long n2 = static_cast<long>(x_high.size());
  const long u2_high = 2 * n1 * n2 - twice_u_low(x_low, x_high, nullptr);
  return (0.5 * static_cast<double>(u2_high)) / (static_cast<double>(n1) * static_cast<double>(n2));
}

BoxStats box_stats(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::EmptyGroup, "empty group");
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  BoxStats b;
  b.n = s.size();
  b.min = s.front();
  b.max = s.back();
  b.q1 = percentile_sorted(s, 0.25);
  b.median = percentile_sorted(s, 0.5);
  b.q3 = percentile_sorted(s, 0.75);
  b.mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_lo = *std::find_if(s.begin(), s.end(), [&](double v) { return v >= lo; });
  b.whisker_hi = *std::find_if(s.rbegin(), s.rend(), [&](double v) { return v <= hi; });
  return b;
}

std::vector<GroupSummary> group_summary(std::span<const GroupedValue> values) {
  if (values.empty()) throw Error(Errc::EmptyGroup, "no values");
  double mean = 0.0;
  for (const auto& v : values) mean += v.value;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (const auto& v : values) var += (v.value - mean) * (v.value - mean);
  double sd = std::sqrt(var / static_cast<double>(values.size()));
  if (sd < kStdFloor) sd = 1.0;

  std::vector<GroupSummary> out;
  for (int label : {1, -1}) {
    for (Gender g : {Gender::female, Gender::male}) {
      std::vector<double> z;
      for (const auto& v : values)
        if (v.label == label && v.gender == g) z.push_back((v.value - mean) / sd);
      if (z.empty()) {
        throw Error(Errc::EmptyGroup, std::string(label > 0 ? "high" : "low") + "-risk " +
                                          std::string(to_string(g)) + " group is empty");
      }
      out.push_back({label, g, box_stats(z)});
    }
  }
  return out;
}

nlohmann::json to_json(const UTestResult& r) {
  return {{"u_statistic", r.u_statistic}, {"p_value", r.p_value}, {"cles", r.cles},
          {"n_low", r.n_low},             {"n_high", r.n_high},   {"method", std::string(to_string(r.method))}};
}

nlohmann::json to_json(const BoxStats& b) {
  return {{"n", b.n},           {"min", b.min},   {"q1", b.q1},
          {"median", b.median}, {"q3", b.q3},     {"max", b.max},
          {"mean", b.mean},     {"whisker_lo", b.whisker_lo}, {"whisker_hi", b.whisker_hi}};
}

nlohmann::json to_json(std::span<const GroupSummary> groups) {
  auto arr = nlohmann::json::array();
  for (const auto& g : groups) {
    auto j = to_json(g.stats);
    j["risk"] = g.label > 0 ? "high" : "low";
    j["gender"] = std::string(to_string(g.gender));
    arr.push_back(std::move(j));
  }
  return arr;
}

TestUnit parse_test_unit(std::string_view text) {
  if (text == "subject") return TestUnit::subject;
  if (text == "segment") return TestUnit::segment;
  throw Error(Errc::ConfigError, "unknown test unit: " + std::string(text));
}

std::string_view to_string(TestUnit unit) { return unit == TestUnit::subject ? "subject" : "segment"; }

Eigen::MatrixXd subject_means(const Dataset& ds, const Eigen::MatrixXd& X) {
  const auto subjects = subjects_of(ds);
  std::unordered_map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < subjects.size(); ++i) index.emplace(subjects[i].id, static_cast<Eigen::Index>(i));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(subjects.size()), X.cols());
  Eigen::VectorXd count = Eigen::VectorXd::Zero(sum.rows());
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto s = index.at(ds.subjects[r]);
    sum.row(s) += X.row(static_cast<Eigen::Index>(r));
    count[s] += 1.0;
  }
  for (Eigen::Index s = 0; s < sum.rows(); ++s) sum.row(s) /= count[s];
  return sum;
}

namespace {

struct Units {
  Eigen::MatrixXd X;
  std::vector<int> labels;
  std::vector<Gender> genders;
};

Units to_units(const Dataset& ds, const Eigen::MatrixXd& X, TestUnit unit) {
  Units u;
  if (unit == TestUnit::segment) {
    u.X = X;
    u.labels = ds.labels;
    u.genders = ds.genders;
    return u;
  }
  u.X = subject_means(ds, X);
  for (const auto& s : subjects_of(ds)) {
    u.labels.push_back(s.label);
    u.genders.push_back(s.gender);
  }
  return u;
}

nlohmann::json utest_json(const Eigen::VectorXd& col, const std::vector<int>& labels, const std::vector<Gender>& genders,
                          std::optional<Gender> only) {
  std::vector<double> low, high;
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    if (only && genders[i] != *only) continue;
    (labels[i] > 0 ? high : low).push_back(col[i]);
  }
  if (low.empty() || high.empty()) return nullptr;
  return to_json(mann_whitney_u(low, high));
}

}  // namespace

nlohmann::json analyze(const Dataset& ds, const AnalysisConfig& config, const DimensionalScores* scores) {
  const auto subjects = subjects_of(ds);
  const auto plan = loso_plan(subjects, config.eval.seed, config.eval.inner_folds);
  std::vector<LinearModel> models(plan.folds.size());
  parallel_for(plan.folds.size(), config.eval.threads, [&](std::size_t f) {
    models[f] = run_fold(ds, plan.folds[f], static_cast<int>(f), config.modelling, config.norm, config.eval).model;
  });
  // gender models carry their own weight vectors; ranking pools all folds
  const auto ranked = rank_features(models);

  const Eigen::MatrixXd Z = apply(fit_global(ds.X), ds.X);
  const auto units = to_units(ds, Z, config.unit);
  const auto kept = prune_redundant(ranked, units.X, ds.feature_names, config.rho_max, config.top);

  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t i = 0; i < ds.feature_names.size(); ++i) col.emplace(ds.feature_names[i], i);

  nlohmann::json out;
  out["modelling"] = config.modelling.label();
  out["normalisation"] = std::string(to_string(config.norm));
  out["seed"] = config.eval.seed;
  out["test_unit"] = std::string(to_string(config.unit));
  out["rho_max"] = config.rho_max;
  auto ranking = nlohmann::json::array();
  for (const auto& r : ranked) ranking.push_back({{"name", r.name}, {"rank", r.rank}, {"mean_abs_coef", r.mean_abs_coef}});
  out["ranking"] = std::move(ranking);

  auto top = nlohmann::json::array();
  for (const auto& f : kept) {
    const Eigen::VectorXd c = units.X.col(col.at(f.name));
    nlohmann::json j{{"name", f.name}, {"rank", f.rank}, {"mean_abs_coef", f.mean_abs_coef}};
    j["all"] = utest_json(c, units.labels, units.genders, std::nullopt);
    j["female"] = utest_json(c, units.labels, units.genders, Gender::female);
    j["male"] = utest_json(c, units.labels, units.genders, Gender::male);
    std::vector<GroupedValue> grouped;
    for (Eigen::Index i = 0; i < c.size(); ++i) grouped.push_back({units.labels[i], units.genders[i], c[i]});
    j["groups"] = to_json(group_summary(grouped));
    top.push_back(std::move(j));
  }
  out["top_features"] = std::move(top);

  if (scores) {
    Eigen::MatrixXd S(static_cast<Eigen::Index>(ds.rows()), 3);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      auto it = scores->rows.find(ds.keys[r]);
      if (it == scores->rows.end()) throw Error(Errc::MissingSegment, "no scores for " + ds.keys[r]);
      S(static_cast<Eigen::Index>(r), 0) = it->second.arousal;
      S(static_cast<Eigen::Index>(r), 1) = it->second.dominance;
      S(static_cast<Eigen::Index>(r), 2) = it->second.valence;
    }
    const auto su = to_units(ds, S, config.unit);
    nlohmann::json dims;
    const char* names[] = {"arousal", "dominance", "valence"};
    for (Eigen::Index d = 0; d < 3; ++d) {
      std::vector<GroupedValue> grouped;
      for (Eigen::Index i = 0; i < su.X.rows(); ++i) grouped.push_back({su.labels[i], su.genders[i], su.X(i, d)});
      dims[names[d]] = to_json(group_summary(grouped));
    }
    out["dimensions"] = std::move(dims);
  }
  return out;
}

}  // namespace voicerisk
