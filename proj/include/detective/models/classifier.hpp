#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "detective/excerpt.hpp"
#include "detective/features.hpp"
#include "detective/models/baselines.hpp"
#include "detective/models/mlp.hpp"
#include "detective/models/naive_bayes.hpp"

namespace detective::models {

enum class ModelKind { NaiveBayes, Mlp, LogisticRegression, LinearSvm, DecisionTree, RandomForest };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view s);

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::NaiveBayes;
  double alpha = 0.7;
  MlpConfig mlp;
  LinearConfig linear;
  TreeConfig tree;
  ForestConfig forest;
};

/// Common face of every classifier used by the experiment runner.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const features::DocTermMatrix& X, std::span<const Label> y) = 0;
  virtual std::vector<Prediction> predict(const features::DocTermMatrix& X) const = 0;
};

std::unique_ptr<Classifier> make_classifier(const ModelSpec& spec);

std::vector<std::string> texts_of(const std::vector<Excerpt>& excerpts);
std::vector<Label> labels_of(const std::vector<Excerpt>& excerpts);

/// A persisted detector: vocabulary plus a Naive Bayes or MLP model.
struct TextModel {
  features::Vocabulary vocab;
  std::variant<NBModel, MLPModel> model;
  std::string dataset_fingerprint;
  std::string created_at;

  ModelKind kind() const noexcept {
    return std::holds_alternative<NBModel>(model) ? ModelKind::NaiveBayes : ModelKind::Mlp;
  }
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const;
  Prediction classify(std::string_view text) const;
};

/// Builds the vocabulary from the training texts and fits an NB or MLP model.
TextModel train_text_model(const ModelSpec& spec, const std::vector<Excerpt>& training);

}  // namespace detective::models
