#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "detective/excerpt.hpp"

namespace detective::models {

struct Prediction {
  Label label = Label::Ai;
  double score_ai = 0.5;

  bool operator==(const Prediction&) const = default;
};

/// Ties (score_ai == 0.5) resolve to ai.
inline Prediction prediction_from_score(double score_ai) {
  return {score_ai >= 0.5 ? Label::Ai : Label::Human, score_ai};
}

/// Two-way softmax of (human, ai) log scores, returned as P(ai).
inline double softmax_ai(double log_human, double log_ai) {
  const double d = log_ai - log_human;
  if (d >= 0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

inline std::vector<Label> labels_of(std::span<const Prediction> predictions) {
  std::vector<Label> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) out.push_back(p.label);
  return out;
}

/// Fails with SingleClassTraining unless both labels occur, and with
/// InvalidArgument when the counts disagree.
void check_training_labels(std::size_t rows, std::span<const Label> y);

}  // namespace detective::models
