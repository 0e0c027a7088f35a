#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "detective/features.hpp"
#include "detective/models/prediction.hpp"

namespace detective::models {

// Reference implementations used for the six-model comparison. They are
// deliberately plain; only their relative ranking matters.

struct LinearConfig {
  double c = 1.0;  // inverse regularization strength, as in liblinear
  int epochs = 60;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

enum class LinearLoss { Logistic, Hinge };

struct LinearModel {
  LinearLoss loss = LinearLoss::Logistic;
  std::vector<double> weights;
  double bias = 0.0;
};

LinearModel linear_train(const features::DocTermMatrix& X, std::span<const Label> y, LinearLoss loss,
                         const LinearConfig& config = {});

/// Logistic: sigmoid of the margin is P(ai). Hinge: the sigmoid of the
/// margin is only a monotone score, with 0.5 at the decision boundary.
std::vector<Prediction> linear_predict(const LinearModel& model, const features::DocTermMatrix& X);

struct TreeConfig {
  int max_depth = 0;  // 0 means grow until leaves are pure
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  // 0 means consider every feature
  std::uint64_t seed = 0;
};

/// CART tree on raw counts with Gini impurity. Split predicate: count <= threshold goes left.
class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double score_ai = 0.5;
  };

  void fit(const features::DocTermMatrix& X, std::span<const Label> y, const TreeConfig& config,
           std::span<const std::size_t> sample_rows = {});
  double score(std::span<const features::TermCount> row) const;
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  int depth() const noexcept { return depth_; }

 private:
  std::vector<Node> nodes_;
  int depth_ = 0;
};

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0 means floor(sqrt(n_features))
  std::uint64_t seed = 0;
};

class RandomForest {
 public:
  void fit(const features::DocTermMatrix& X, std::span<const Label> y, const ForestConfig& config);
  std::vector<Prediction> predict(const features::DocTermMatrix& X) const;

 private:
  std::vector<DecisionTree> trees_;
};

enum class BaselineKind { LogisticRegression, LinearSvm, DecisionTree, RandomForest };

std::string_view to_string(BaselineKind kind) noexcept;

std::vector<Prediction> baseline_train_predict(BaselineKind kind, const features::DocTermMatrix& X,
                                               std::span<const Label> y, const features::DocTermMatrix& X_eval,
                                               std::uint64_t seed = 0);

inline std::vector<Prediction> baseline_train_predict(BaselineKind kind, const features::DocTermMatrix& X,
                                                      std::span<const Label> y, std::uint64_t seed = 0) {
  return baseline_train_predict(kind, X, y, X, seed);
}

}  // namespace detective::models
