#include <doctest.h>

#include <cmath>

#include "detective/error.hpp"
#include "detective/features.hpp"
#include "detective/models/mlp.hpp"
#include "detective/random.hpp"
#include "synthetic.hpp"

using namespace detective;
using namespace detective::models;
using features::DocTermMatrix;
using features::TermCount;

namespace {

struct Problem {
  DocTermMatrix X;
  std::vector<Label> y;
};

Problem random_problem(std::uint64_t seed, std::size_t rows, std::size_t V) {
  Rng rng(seed);
  Problem p{DocTermMatrix(V), {}};
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> dense(V, 0);
    for (int k = 0; k < 12; ++k) ++dense[rng.index(V)];
    std::vector<TermCount> row;
    for (std::uint32_t t = 0; t < V; ++t)
      if (dense[t]) row.push_back({t, dense[t]});
    p.X.append_row(row);
    p.y.push_back(r % 2 ? Label::Ai : Label::Human);
  }
  return p;
}

Problem text_problem(std::size_t pairs, std::uint64_t seed, features::Vocabulary* vocab_out = nullptr) {
  const testing::TextSynth synth(seed);
  const auto ds = testing::synthetic_dataset(synth, "m", pairs, seed + 1);
  std::vector<std::string> texts;
  Problem p;
  for (const auto& e : ds.excerpts) {
    texts.push_back(e.text);
    p.y.push_back(e.label);
  }
  auto vocab = features::build_vocabulary(texts);
  p.X = features::vectorize(texts, vocab);
  if (vocab_out) *vocab_out = std::move(vocab);
  return p;
}

// Dense reference forward pass.
double reference_p_ai(const MLPModel& m, const std::vector<double>& x) {
  std::vector<double> a(m.hidden);
  for (std::size_t h = 0; h < m.hidden; ++h) {
    double z = m.b1[h];
    for (std::size_t i = 0; i < x.size(); ++i) z += x[i] * m.w1[i * m.hidden + h];
    a[h] = std::max(0.0, z);
  }
  double z0 = m.b2[0], z1 = m.b2[1];
  for (std::size_t h = 0; h < m.hidden; ++h) {
    z0 += a[h] * m.w2[2 * h];
    z1 += a[h] * m.w2[2 * h + 1];
  }
  return 1.0 / (1.0 + std::exp(z0 - z1));
}

}  // namespace

TEST_CASE("zero network predicts one half with loss log 2") {
  const auto p = random_problem(1, 6, 4);
  const auto m = mlp_zero(4, 3);
  for (const auto& pred : mlp_predict(m, p.X)) {
    CHECK(pred.score_ai == 0.5);
    CHECK(pred.label == Label::Ai);
  }
  CHECK(mlp_loss(m, p.X, p.y, 1e-4) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("forward pass matches a dense reference") {
  MlpConfig cfg;
  cfg.hidden_units = 7;
  cfg.seed = 3;
  const auto p = random_problem(2, 10, 6);
  const auto m = mlp_init(6, cfg);
  CHECK(m.w1.size() == 42);
  CHECK(m.w2.size() == 14);
  const auto preds = mlp_predict(m, p.X);
  for (std::size_t r = 0; r < p.X.rows(); ++r) {
    std::vector<double> x(6, 0.0);
    for (const auto& e : p.X.row(r)) x[e.index] = e.count;
    CHECK(preds[r].score_ai == doctest::Approx(reference_p_ai(m, x)).epsilon(1e-12));
  }
}

TEST_CASE("glorot init stays inside its bound and is seeded") {
  MlpConfig cfg;
  cfg.hidden_units = 20;
  cfg.seed = 9;
  const auto a = mlp_init(50, cfg);
  const double bound1 = std::sqrt(6.0 / (50 + 20));
  for (double w : a.w1) CHECK(std::abs(w) <= bound1);
  CHECK(mlp_init(50, cfg).w1 == a.w1);
  cfg.seed = 10;
  CHECK(mlp_init(50, cfg).w1 != a.w1);
}

TEST_CASE("analytic gradient matches finite differences") {
  MlpConfig cfg;
  cfg.hidden_units = 16;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const auto p = random_problem(seed, 20, 30);
    GradientCheckOptions opt;
    opt.max_params = 200;
    opt.sample_seed = seed;
    CAPTURE(seed);
    CHECK(mlp_gradient_check(cfg, p.X, p.y, opt) <= 1e-4);
  }
}

TEST_CASE("loss_and_gradient loss equals mlp_loss over all rows") {
  MlpConfig cfg;
  cfg.hidden_units = 5;
  const auto p = random_problem(4, 12, 8);
  const auto m = mlp_init(8, cfg);
  std::vector<std::size_t> rows(12);
  for (std::size_t i = 0; i < 12; ++i) rows[i] = i;
  CHECK(mlp_loss_and_gradient(m, p.X, p.y, rows, 0.01).loss == doctest::Approx(mlp_loss(m, p.X, p.y, 0.01)));
}

TEST_CASE("training separates the synthetic styles and is deterministic") {
  const auto train = text_problem(150, 4);
  MlpConfig cfg;
  cfg.hidden_units = 32;
  cfg.max_epochs = 30;
  cfg.seed = 1;
  int calls = 0;
  const auto m = mlp_train(train.X, train.y, cfg, [&](int, const MLPModel&) { ++calls; });
  CHECK(calls == m.epochs_run);
  CHECK(m.loss_curve.size() == static_cast<std::size_t>(m.epochs_run));
  CHECK(m.loss_curve.back() < m.loss_curve.front());
  const auto preds = mlp_predict(m, train.X);
  std::size_t right = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) right += preds[i].label == train.y[i];
  CHECK(static_cast<double>(right) / static_cast<double>(preds.size()) > 0.95);

  const auto again = mlp_train(train.X, train.y, cfg);
  CHECK(again.w1 == m.w1);
  CHECK(again.loss_curve == m.loss_curve);
}

TEST_CASE("early stopping ends before max_epochs") {
  const auto train = text_problem(40, 7);
  MlpConfig cfg;
  cfg.hidden_units = 8;
  cfg.max_epochs = 500;
  cfg.n_iter_no_change = 3;
  cfg.tol = 1e-2;
  const auto m = mlp_train(train.X, train.y, cfg);
  CHECK(m.epochs_run < 500);
}

TEST_CASE("invalid training input") {
  const auto p = random_problem(1, 4, 3);
  MlpConfig cfg;
  cfg.hidden_units = 0;
  CHECK_THROWS_AS(mlp_train(p.X, p.y, cfg), Error);
  std::vector<Label> one(4, Label::Ai);
  CHECK_THROWS_WITH_AS(mlp_train(p.X, one, MlpConfig{}), doctest::Contains("SingleClassTraining"), Error);
  CHECK_THROWS_AS(mlp_predict(mlp_zero(5, 2), p.X), Error);
}
