#include <doctest.h>

#include "detective/error.hpp"
#include "detective/features.hpp"
#include "detective/models/baselines.hpp"
#include "detective/models/classifier.hpp"
#include "synthetic.hpp"

using namespace detective;
using namespace detective::models;
using features::DocTermMatrix;
using features::TermCount;

namespace {

struct Data {
  DocTermMatrix train, test;
  std::vector<Label> y_train, y_test;
};

Data synthetic_split() {
  const testing::TextSynth synth(17);
  const auto tr = testing::synthetic_dataset(synth, "tr", 150, 1);
  const auto te = testing::synthetic_dataset(synth, "te", 50, 2);
  const auto vocab = features::build_vocabulary(texts_of(tr.excerpts));
  return {features::vectorize(texts_of(tr.excerpts), vocab), features::vectorize(texts_of(te.excerpts), vocab),
          labels_of(tr.excerpts), labels_of(te.excerpts)};
}

double accuracy(const std::vector<Prediction>& p, const std::vector<Label>& y) {
  std::size_t right = 0;
  for (std::size_t i = 0; i < y.size(); ++i) right += p[i].label == y[i];
  return static_cast<double>(right) / static_cast<double>(y.size());
}

DocTermMatrix rows(std::initializer_list<std::vector<TermCount>> rs, std::size_t V) {
  DocTermMatrix m(V);
  for (const auto& r : rs) m.append_row(r);
  return m;
}

}  // namespace

TEST_CASE("tree fits an xor-free threshold exactly") {
  // Feature 0 decides the label: count <= 1 is human.
  const auto X = rows({{{0, 1}}, {{0, 1}, {1, 3}}, {{0, 2}}, {{0, 4}, {1, 1}}}, 2);
  const std::vector<Label> y = {Label::Human, Label::Human, Label::Ai, Label::Ai};
  DecisionTree tree;
  tree.fit(X, y, {});
  CHECK(tree.depth() == 1);
  REQUIRE(tree.nodes().size() == 3);
  CHECK(tree.nodes()[0].feature == 0);
  CHECK(tree.nodes()[0].threshold >= 1.0);
  CHECK(tree.nodes()[0].threshold < 2.0);
  const auto p = tree.predict(X);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p[i].label == y[i]);
}

TEST_CASE("tree respects max_depth") {
  const auto d = synthetic_split();
  DecisionTree tree;
  TreeConfig cfg;
  cfg.max_depth = 3;
  tree.fit(d.train, d.y_train, cfg);
  CHECK(tree.depth() <= 3);
  DecisionTree full;
  full.fit(d.train, d.y_train, {});
  CHECK(accuracy(full.predict(d.train), d.y_train) == 1.0);
}

TEST_CASE("every baseline learns the synthetic styles") {
  const auto d = synthetic_split();
  for (auto kind : {BaselineKind::LogisticRegression, BaselineKind::LinearSvm, BaselineKind::DecisionTree,
                    BaselineKind::RandomForest}) {
    CAPTURE(to_string(kind));
    const auto p = baseline_train_predict(kind, d.train, d.y_train, d.test, 3);
    REQUIRE(p.size() == d.y_test.size());
    CHECK(accuracy(p, d.y_test) > 0.7);
    for (const auto& x : p) {
      CHECK(x.score_ai >= 0.0);
      CHECK(x.score_ai <= 1.0);
    }
    CHECK(baseline_train_predict(kind, d.train, d.y_train, d.test, 3) == p);
  }
}

TEST_CASE("logistic regression probabilities are calibrated in direction") {
  const auto X = rows({{{0, 3}}, {{0, 4}}, {{1, 3}}, {{1, 5}}}, 2);
  const std::vector<Label> y = {Label::Human, Label::Human, Label::Ai, Label::Ai};
  LinearConfig cfg;
  cfg.epochs = 300;
  const auto m = linear_train(X, y, LinearLoss::Logistic, cfg);
  CHECK(m.weights[1] > m.weights[0]);
  const auto p = linear_predict(m, rows({{{0, 2}}, {{1, 2}}}, 2));
  CHECK(p[0].score_ai < 0.5);
  CHECK(p[1].score_ai > 0.5);
}

TEST_CASE("classifier factory covers all kinds") {
  const auto d = synthetic_split();
  for (auto kind : {ModelKind::NaiveBayes, ModelKind::Mlp, ModelKind::LogisticRegression, ModelKind::LinearSvm,
                    ModelKind::DecisionTree, ModelKind::RandomForest}) {
    ModelSpec spec;
    spec.kind = kind;
    spec.mlp.hidden_units = 8;
    spec.mlp.max_epochs = 20;
    spec.forest.n_trees = 15;
    auto clf = make_classifier(spec);
    clf->fit(d.train, d.y_train);
    CAPTURE(to_string(kind));
    CHECK(accuracy(clf->predict(d.test), d.y_test) > 0.7);
  }
  CHECK(parse_model_kind("svm") == ModelKind::LinearSvm);
  CHECK(parse_model_kind("forest") == ModelKind::RandomForest);
  CHECK_THROWS_AS(parse_model_kind("gbm"), Error);
}

TEST_CASE("single-class training is refused") {
  const auto X = rows({{{0, 1}}, {{0, 2}}}, 1);
  const std::vector<Label> y = {Label::Ai, Label::Ai};
  CHECK_THROWS_AS(baseline_train_predict(BaselineKind::DecisionTree, X, y), Error);
  CHECK_THROWS_AS(baseline_train_predict(BaselineKind::LogisticRegression, X, y), Error);
}
