#include "detective/models/classifier.hpp"

#include "detective/error.hpp"

namespace detective::models {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::NaiveBayes: return "naive_bayes";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::LogisticRegression: return "logistic_regression";
    case ModelKind::LinearSvm: return "linear_svm";
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "naive_bayes" || s == "nb") return ModelKind::NaiveBayes;
  if (s == "mlp") return ModelKind::Mlp;
  if (s == "logistic_regression" || s == "lr") return ModelKind::LogisticRegression;
  if (s == "linear_svm" || s == "svm") return ModelKind::LinearSvm;
  if (s == "decision_tree" || s == "tree") return ModelKind::DecisionTree;
  if (s == "random_forest" || s == "forest") return ModelKind::RandomForest;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(s) + "'");
}

namespace {

class NaiveBayesClassifier final : public Classifier {
 public:
  explicit NaiveBayesClassifier(double alpha) : alpha_(alpha) {}
  void fit(const features::DocTermMatrix& X, std::span<const Label> y) override { model_ = nb_train(X, y, alpha_); }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const override { return nb_predict(model_, X); }

 private:
  double alpha_;
  NBModel model_;
};

class MlpClassifier final : public Classifier {
 public:
  explicit MlpClassifier(MlpConfig config) : config_(config) {}
  void fit(const features::DocTermMatrix& X, std::span<const Label> y) override { model_ = mlp_train(X, y, config_); }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const override { return mlp_predict(model_, X); }

 private:
  MlpConfig config_;
  MLPModel model_;
};

class LinearClassifier final : public Classifier {
 public:
  LinearClassifier(LinearLoss loss, LinearConfig config) : loss_(loss), config_(config) {}
  void fit(const features::DocTermMatrix& X, std::span<const Label> y) override {
    model_ = linear_train(X, y, loss_, config_);
  }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const override {
    return linear_predict(model_, X);
  }

 private:
  LinearLoss loss_;
  LinearConfig config_;
  LinearModel model_;
};

class TreeClassifier final : public Classifier {
 public:
  explicit TreeClassifier(TreeConfig config) : config_(config) {}
  void fit(const features::DocTermMatrix& X, std::span<const Label> y) override { tree_.fit(X, y, config_); }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const override { return tree_.predict(X); }

 private:
  TreeConfig config_;
  DecisionTree tree_;
};

class ForestClassifier final : public Classifier {
 public:
  explicit ForestClassifier(ForestConfig config) : config_(config) {}
  void fit(const features::DocTermMatrix& X, std::span<const Label> y) override { forest_.fit(X, y, config_); }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const override { return forest_.predict(X); }

 private:
  ForestConfig config_;
  RandomForest forest_;
};

}  // namespace

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::NaiveBayes: return std::make_unique<NaiveBayesClassifier>(spec.alpha);
    case ModelKind::Mlp: return std::make_unique<MlpClassifier>(spec.mlp);
    case ModelKind::LogisticRegression: return std::make_unique<LinearClassifier>(LinearLoss::Logistic, spec.linear);
    case ModelKind::LinearSvm: return std::make_unique<LinearClassifier>(LinearLoss::Hinge, spec.linear);
    case ModelKind::DecisionTree: return std::make_unique<TreeClassifier>(spec.tree);
    case ModelKind::RandomForest: return std::make_unique<ForestClassifier>(spec.forest);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

std::vector<std::string> texts_of(const std::vector<Excerpt>& excerpts) {
  std::vector<std::string> out;
  out.reserve(excerpts.size());
  for (const auto& ex : excerpts) out.push_back(ex.text);
  return out;
}

std::vector<Label> labels_of(const std::vector<Excerpt>& excerpts) {
  std::vector<Label> out;
  out.reserve(excerpts.size());
  for (const auto& ex : excerpts) out.push_back(ex.label);
  return out;
}

std::vector<Prediction> TextModel::predict(const features::DocTermMatrix& X) const {
  return std::visit(
      [&](const auto& m) {
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, NBModel>) {
          return nb_predict(m, X);
        } else {
          return mlp_predict(m, X);
        }
      },
      model);
}

Prediction TextModel::classify(std::string_view text) const {
  features::DocTermMatrix X(vocab.size());
  X.append_row(features::vectorize_one(text, vocab));
  return predict(X).front();
}

TextModel train_text_model(const ModelSpec& spec, const std::vector<Excerpt>& training) {
  if (spec.kind != ModelKind::NaiveBayes && spec.kind != ModelKind::Mlp) {
    throw Error(ErrorCode::InvalidArgument, "only naive_bayes and mlp models can be persisted");
  }
  const auto texts = texts_of(training);
  const auto y = labels_of(training);
  TextModel tm;
  tm.vocab = features::build_vocabulary(texts);
  const auto X = features::vectorize(texts, tm.vocab);
  if (spec.kind == ModelKind::NaiveBayes) {
    tm.model = nb_train(X, y, spec.alpha);
  } else {
    tm.model = mlp_train(X, y, spec.mlp);
  }
  tm.dataset_fingerprint = dataset_fingerprint(training);
  return tm;
}

}  // namespace detective::models
