#pragma once

#include <array>
#include <span>
#include <vector>

#include "detective/features.hpp"
#include "detective/models/prediction.hpp"

namespace detective::models {

/// Multinomial Naive Bayes with Lidstone smoothing, kept in log space.
/// Rows of log_likelihoods are indexed by Label (human = 0, ai = 1).
struct NBModel {
  double alpha = 0.7;
  std::array<double, 2> log_priors{};
  std::array<std::vector<double>, 2> log_likelihoods;

  std::size_t vocab_size() const noexcept { return log_likelihoods[0].size(); }
};

NBModel nb_train(const features::DocTermMatrix& X, std::span<const Label> y, double alpha = 0.7);

/// Unnormalized log joint score per label for one document.
std::array<double, 2> nb_log_scores(const NBModel& model, std::span<const features::TermCount> row);

std::vector<Prediction> nb_predict(const NBModel& model, const features::DocTermMatrix& X);

}  // namespace detective::models
