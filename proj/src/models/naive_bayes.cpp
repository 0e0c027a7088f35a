#include "detective/models/naive_bayes.hpp"

#include <cmath>
#include <string>

#include "detective/error.hpp"

namespace detective::models {

void check_training_labels(std::size_t rows, std::span<const Label> y) {
  if (rows != y.size()) {
    throw Error(ErrorCode::InvalidArgument,
                std::to_string(rows) + " rows but " + std::to_string(y.size()) + " labels");
  }
  bool seen[2] = {false, false};
  for (auto l : y) seen[static_cast<int>(l)] = true;
  if (!seen[0] || !seen[1]) throw Error(ErrorCode::SingleClassTraining, "training labels contain a single class");
}

NBModel nb_train(const features::DocTermMatrix& X, std::span<const Label> y, double alpha) {
  check_training_labels(X.rows(), y);
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be > 0");

  const std::size_t V = X.cols();
  std::array<std::vector<double>, 2> counts{std::vector<double>(V, 0.0), std::vector<double>(V, 0.0)};
  std::array<double, 2> totals{0.0, 0.0};
  std::array<double, 2> docs{0.0, 0.0};
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto c = static_cast<int>(y[r]);
    docs[c] += 1.0;
    for (const auto& e : X.row(r)) {
      counts[c][e.index] += e.count;
      totals[c] += e.count;
    }
  }

  NBModel m;
  m.alpha = alpha;
  const double n = static_cast<double>(X.rows());
  for (int c = 0; c < 2; ++c) {
    m.log_priors[c] = std::log(docs[c] / n);
    const double denom = std::log(totals[c] + alpha * static_cast<double>(V));
    auto& row = m.log_likelihoods[c];
    row.resize(V);
    for (std::size_t t = 0; t < V; ++t) row[t] = std::log(counts[c][t] + alpha) - denom;
  }
  return m;
}

std::array<double, 2> nb_log_scores(const NBModel& model, std::span<const features::TermCount> row) {
  std::array<double, 2> s = model.log_priors;
  for (const auto& e : row) {
    s[0] += e.count * model.log_likelihoods[0][e.index];
    s[1] += e.count * model.log_likelihoods[1][e.index];
  }
  return s;
}

std::vector<Prediction> nb_predict(const NBModel& model, const features::DocTermMatrix& X) {
  if (X.cols() != model.vocab_size()) {
    throw Error(ErrorCode::InvalidArgument, "matrix width does not match the model vocabulary");
  }
  std::vector<Prediction> out;
  out.reserve(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto s = nb_log_scores(model, X.row(r));
    out.push_back(prediction_from_score(softmax_ai(s[0], s[1])));
  }
  return out;
}

}  // namespace detective::models
