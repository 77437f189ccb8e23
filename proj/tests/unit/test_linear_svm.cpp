#include <doctest.h>

#include <random>

#include "support.hpp"
#include "voicerisk/linear_svm.hpp"

using namespace voicerisk;
using testing::code_of;

namespace {

struct Problem {
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<double> s;
};

Problem random_problem(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 2.0);
  Problem p{Eigen::MatrixXd(n, d), {}, {}};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    p.y.push_back(label);
    p.s.push_back(u(rng));
    for (int j = 0; j < d; ++j) p.X(i, j) = z(rng) + (j == 0 ? 0.8 * label : 0.0);
  }
  return p;
}

// Objective written out independently of the library.
double objective(const Eigen::VectorXd& w, double b, const Problem& p, double C) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.X.rows(); ++i) {
    const double m = p.y[static_cast<std::size_t>(i)] * (p.X.row(i).dot(w) + b);
    loss += p.s[static_cast<std::size_t>(i)] * std::max(0.0, 1.0 - m);
  }
  return 0.5 * w.squaredNorm() + 0.5 * b * b + C * loss;
}

SolverOptions tight() {
  SolverOptions o;
  o.gap_tolerance = 1e-12;
  o.max_epochs = 200000;
  return o;
}

}  // namespace

TEST_CASE("class balance weights") {
  const std::vector<int> y{1, 1, 1, -1};
  const auto w = class_balance_weights(y);
  CHECK(w[0] == doctest::Approx(2.0 / 3.0));
  CHECK(w[2] == doctest::Approx(2.0 / 3.0));
  CHECK(w[3] == doctest::Approx(2.0));
  const std::vector<int> balanced{1, -1, -1, 1};
  for (double v : class_balance_weights(balanced)) CHECK(v == 1.0);
  const std::vector<int> single{1, 1};
  CHECK(code_of([&] { class_balance_weights(single); }) == Errc::SingleClass);
}

TEST_CASE("gender instance weights") {
  const std::vector<Gender> g{Gender::female, Gender::male, Gender::female};
  CHECK(gender_instance_weights(g, WeightingPolicy::soft(Gender::female, 0.1)) == std::vector<double>{1, 0.1, 1});
  CHECK(gender_instance_weights(g, WeightingPolicy::global()) == std::vector<double>{1, 1, 1});
  CHECK(gender_instance_weights(g, WeightingPolicy::exclusive(Gender::male)) == std::vector<double>{0, 1, 0});
  WeightingPolicy missing{ModellingMode::gender_soft, 0.1, std::nullopt};
  CHECK(code_of([&] { gender_instance_weights(g, missing); }) == Errc::MissingTargetGender);
  WeightingPolicy bad{ModellingMode::gender_exclusive, 0.5, Gender::male};
  CHECK(code_of([&] { bad.validate(); }) == Errc::InvalidPolicy);
}

TEST_CASE("symmetric separable pair") {
  Problem p{Eigen::MatrixXd(2, 1), {-1, 1}, {1, 1}};
  p.X << -1, 1;
  const auto r = train(p.X, p.y, p.s, 10.0);
  CHECK(r.converged);
  CHECK(r.model.weights(0) > 0.0);
  CHECK(std::abs(r.model.bias) < 1e-9);
  const auto pred = predict(r.model, p.X);
  CHECK(pred.labels == std::vector<int>{-1, 1});
  CHECK(pred.margins[0] == doctest::Approx(-pred.margins[1]));
}

TEST_CASE("solution is optimal against perturbations") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = random_problem(40, 3, seed);
    const double C = 0.5;
    const auto r = train(p.X, p.y, p.s, C, tight());
    REQUIRE(r.converged);
    const double f0 = objective(r.model.weights, r.model.bias, p, C);
    CHECK(r.primal == doctest::Approx(f0).epsilon(1e-9));
    CHECK(primal_objective(r.model, p.X, p.y, p.s, C) == doctest::Approx(f0).epsilon(1e-12));
    std::mt19937_64 rng(seed + 100);
    std::normal_distribution<double> z(0.0, 1e-3);
    for (int k = 0; k < 50; ++k) {
      Eigen::VectorXd w = r.model.weights;
      for (Eigen::Index j = 0; j < w.size(); ++j) w(j) += z(rng);
      CHECK(objective(w, r.model.bias + z(rng), p, C) >= f0 - 1e-9);
    }
  }
}

TEST_CASE("zero-weight instances are absent") {
  auto p = random_problem(30, 2, 7);
  const auto full = train(p.X, p.y, p.s, 1.0, tight());
  Problem q = p;
  q.X.conservativeResize(34, 2);
  q.X.bottomRows(4) = Eigen::MatrixXd::Constant(4, 2, 50.0);
  for (int i = 0; i < 4; ++i) {
    q.y.push_back(i % 2 ? 1 : -1);
    q.s.push_back(0.0);
  }
  const auto padded = train(q.X, q.y, q.s, 1.0, tight());
  CHECK((padded.model.weights - full.model.weights).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(std::abs(padded.model.bias - full.model.bias) < 1e-9);
  const auto test = random_problem(20, 2, 8).X;
  CHECK(predict(padded.model, test).labels == predict(full.model, test).labels);
}

TEST_CASE("integer weight equals replication") {
  auto p = random_problem(25, 2, 9);
  for (auto& v : p.s) v = 1.0;
  p.s[4] = 3.0;
  const auto weighted = train(p.X, p.y, p.s, 0.7, tight());
  Problem q = p;
  q.s[4] = 1.0;
  q.X.conservativeResize(27, 2);
  q.X.row(25) = p.X.row(4);
  q.X.row(26) = p.X.row(4);
  q.y.push_back(p.y[4]);
  q.y.push_back(p.y[4]);
  q.s.push_back(1.0);
  q.s.push_back(1.0);
  const auto replicated = train(q.X, q.y, q.s, 0.7, tight());
  const double a = objective(weighted.model.weights, weighted.model.bias, p, 0.7);
  const double b = objective(replicated.model.weights, replicated.model.bias, q, 0.7);
  CHECK(std::abs(a - b) < 1e-8);
}

TEST_CASE("weight scaling equals cost scaling") {
  auto p = random_problem(30, 3, 10);
  const double k = 4.0;
  Problem q = p;
  for (auto& v : q.s) v *= k;
  const auto a = train(q.X, q.y, q.s, 0.25, tight());
  const auto b = train(p.X, p.y, p.s, 0.25 * k, tight());
  CHECK((a.model.weights - b.model.weights).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(a.model.bias - b.model.bias) < 1e-8);
}

TEST_CASE("dual objective never decreases") {
  const auto p = random_problem(60, 4, 11);
  SolverOptions o = tight();
  o.record_dual_history = true;
  const auto r = train(p.X, p.y, p.s, 2.0, o);
  REQUIRE(r.dual_history.size() >= 2);
  for (std::size_t i = 1; i < r.dual_history.size(); ++i) CHECK(r.dual_history[i] >= r.dual_history[i - 1] - 1e-12);
  CHECK(r.dual <= r.primal + 1e-12);
}

TEST_CASE("exclusive policy equals in-group subset training") {
  const auto p = random_problem(40, 3, 12);
  std::vector<Gender> g;
  for (int i = 0; i < 40; ++i) g.push_back((i / 2) % 2 ? Gender::male : Gender::female);
  // full set, lambda = 0, class balance on the in-group population
  std::vector<int> in_y;
  std::vector<std::size_t> in_rows;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] == Gender::female) {
      in_rows.push_back(i);
      in_y.push_back(p.y[i]);
    }
  const auto cb = class_balance_weights(in_y);
  std::vector<double> s_full(40, 0.0);
  for (std::size_t k = 0; k < in_rows.size(); ++k) s_full[in_rows[k]] = cb[k];
  const auto gw = gender_instance_weights(g, WeightingPolicy::exclusive(Gender::female));
  for (std::size_t i = 0; i < 40; ++i) s_full[i] *= gw[i];
  const auto full = train(p.X, p.y, s_full, 0.3, tight());

  Eigen::MatrixXd Xs(static_cast<Eigen::Index>(in_rows.size()), 3);
  for (std::size_t k = 0; k < in_rows.size(); ++k) Xs.row(static_cast<Eigen::Index>(k)) = p.X.row(in_rows[k]);
  const auto sub = train(Xs, in_y, cb, 0.3, tight());

  Eigen::VectorXd a(4), b(4);
  a << full.model.weights, full.model.bias;
  b << sub.model.weights, sub.model.bias;
  CHECK(a.dot(b) / (a.norm() * b.norm()) >= 0.999);
}

TEST_CASE("prediction") {
  LinearModel m;
  m.weights = Eigen::VectorXd::Ones(2);
  m.bias = 0.0;
  Eigen::MatrixXd X(3, 2);
  X << 0, 0, 1.25, 1.25, -1, 0.5;
  const auto p = predict(m, X);
  CHECK(p.labels == std::vector<int>{1, 1, -1});
  CHECK(p.margins[1] == 2.5);
  CHECK(code_of([&] { predict(m, Eigen::MatrixXd::Zero(1, 3)); }) == Errc::DimMismatch);
}

TEST_CASE("determinism and serialization") {
  const auto p = random_problem(50, 5, 13);
  const auto a = train(p.X, p.y, p.s, 1e-2);
  const auto b = train(p.X, p.y, p.s, 1e-2);
  CHECK(fingerprint(a.model) == fingerprint(b.model));
  CHECK(a.model.weights == b.model.weights);
  const auto back = model_from_json(to_json(a.model));
  CHECK(back.weights == a.model.weights);
  CHECK(back.bias == a.model.bias);
  CHECK(fingerprint(back) == fingerprint(a.model));
}

TEST_CASE("degenerate input") {
  Problem p{Eigen::MatrixXd::Zero(2, 1), {1, 1}, {1, 1}};
  CHECK(code_of([&] { train(p.X, p.y, p.s, 1.0); }) == Errc::DegenerateData);
  p.y = {1, -1};
  p.s = {1, 0};
  CHECK(code_of([&] { train(p.X, p.y, p.s, 1.0); }) == Errc::DegenerateData);
}
